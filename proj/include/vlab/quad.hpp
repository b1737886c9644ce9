#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace vlab {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1] via Newton iteration on P_n.
inline QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

// Probabilists' Gauss-Hermite rule: nodes/weights for integration against
// N(0,1). Golub-Welsch on the Jacobi matrix with b_k = sqrt(k).
inline QuadRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  // Orthonormal recurrence p_{k+1} = (x p_k - sqrt(k) p_{k-1}) / sqrt(k+1);
  // magnitudes stay moderate, so the Newton polish and the weight formula
  // 1 / sum p_k^2 are accurate where the raw eigenvector weights are not.
  const auto eval = [n](double x, double& pn, double& pnm1, double& s) {
    double p0 = 1.0, p1 = x;
    s = 1.0 + x * x;
    for (int k = 1; k < n; ++k) {
      const double p2 =
          (x * p1 - std::sqrt(static_cast<double>(k)) * p0) /
          std::sqrt(static_cast<double>(k + 1));
      p0 = p1;
      p1 = p2;
      if (k + 1 < n) s += p2 * p2;
    }
    pn = p1;
    pnm1 = p0;
  };
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    double pn = 0.0, pnm1 = 0.0, s = 0.0;
    for (int it = 0; it < 16; ++it) {
      eval(x, pn, pnm1, s);
      const double dx = pn / (std::sqrt(static_cast<double>(n)) * pnm1);
      x -= dx;
      if (std::abs(dx) <= 1e-15 * (1.0 + std::abs(x))) break;
    }
    eval(x, pn, pnm1, s);
    r.nodes[i] = x;
    r.weights[i] = 1.0 / s;  // total mass 1 for N(0,1)
  }
  return r;
}

// Composite Gauss-Legendre on [a, b], doubling panel count until the
// relative change drops below rel_tol.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int order = 16, int max_doublings = 14) {
  static const QuadRule rule = gauss_legendre(16);
  const QuadRule& gl = (order == 16) ? rule : gauss_legendre(order);
  double prev = 0.0;
  for (int doubling = 0, panels = 1; doubling <= max_doublings; ++doubling, panels *= 2) {
    double total = 0.0;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * h;
      double s = 0.0;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k)
        s += gl.weights[k] * f(lo + 0.5 * h * (gl.nodes[k] + 1.0));
      total += 0.5 * h * s;
    }
    if (doubling > 0 && std::abs(total - prev) <= rel_tol * (std::abs(total) + 1e-300))
      return total;
    prev = total;
  }
  return prev;
}

// Integral over [a, b] of a function with an algebraic singularity (in the
// value or a derivative) at the left endpoint: substitute u = a + v^8, which
// tames f ~ (u-a)^p for any p > -7/8 (covers squared kernel singularities).
inline double integrate_left_singular(const std::function<double(double)>& f,
                                      double a, double b, double rel_tol = 1e-11) {
  if (b <= a) return 0.0;
  return integrate(
      [&f, a](double v) {
        const double v2 = v * v;
        const double v4 = v2 * v2;
        return f(a + v4 * v4) * 8.0 * v4 * v2 * v;
      },
      0.0, std::pow(b - a, 0.125), rel_tol);
}

// Integral of a decaying function over [t0, inf): dyadic panels
// [t0, 2 t0'], [2 t0', 4 t0'], ... until the last panel is negligible.
inline double integrate_to_infinity(const std::function<double(double)>& f, double t0,
                                    double abs_tol = 1e-15, double rel_tol = 1e-12) {
  double lo = t0;
  double span = std::max(1.0, std::abs(t0));
  double total = 0.0;
  for (int i = 0; i < 80; ++i) {
    const double piece = integrate(f, lo, lo + span, 1e-11);
    total += piece;
    lo += span;
    span *= 2.0;
    if (std::abs(piece) < abs_tol + rel_tol * std::abs(total) && i > 2) break;
  }
  return total;
}

}  // namespace vlab
