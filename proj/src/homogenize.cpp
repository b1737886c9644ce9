#include "vlab/homogenize.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vlab/rng.hpp"
#include "vlab/stats.hpp"

namespace vlab {

namespace {

double zscore(double estimate, double target, double se) {
  if (se <= 0.0) return estimate == target ? 0.0 : HUGE_VAL;
  return (estimate - target) / se;
}

void check_deriv(int k) {
  if (k < 0 || k > 3)
    throw std::invalid_argument("SpatialFn: derivative order must be in [0, 3]");
}

}  // namespace

SpatialFn SpatialFn::sine(double freq) {
  SpatialFn f;
  f.name = "sin";
  f.eval = [freq](double x, int k) {
    check_deriv(k);
    return std::pow(freq, k) * std::sin(freq * x + k * 1.5707963267948966);
  };
  return f;
}

SpatialFn SpatialFn::cosine(double freq) {
  SpatialFn f;
  f.name = "cos";
  f.eval = [freq](double x, int k) {
    check_deriv(k);
    return std::pow(freq, k) * std::cos(freq * x + k * 1.5707963267948966);
  };
  return f;
}

SpatialFn SpatialFn::polynomial(std::vector<double> coeffs) {
  SpatialFn f;
  f.name = "polynomial";
  f.eval = [c = std::move(coeffs)](double x, int k) {
    check_deriv(k);
    // Horner on the k-times differentiated coefficient sequence
    double s = 0.0;
    for (int j = static_cast<int>(c.size()) - 1; j >= k; --j) {
      double falling = 1.0;
      for (int i = 0; i < k; ++i) falling *= (j - i);
      s = s * x + c[static_cast<std::size_t>(j)] * falling;
    }
    return s;
  };
  return f;
}

SpatialFn SpatialFn::bump(double radius) {
  if (radius <= 0.0) throw std::invalid_argument("bump: radius must be > 0");
  SpatialFn f;
  f.name = "bump";
  // 1 on [-R, R], 0 outside [-2R, 2R]; quintic smoothstep on the ramp,
  // so the function is C^2 everywhere (third derivative jumps at the seams).
  f.eval = [R = radius](double x, int k) {
    check_deriv(k);
    const double a = std::abs(x);
    if (a <= R) return k == 0 ? 1.0 : 0.0;
    if (a >= 2.0 * R) return 0.0;
    const double u = (a - R) / R;  // in (0, 1)
    double s;
    switch (k) {
      case 0: s = 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u); break;
      case 1: s = -30.0 * u * u * (1.0 - u) * (1.0 - u); break;
      case 2: s = -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); break;
      default: s = -60.0 * (1.0 - 6.0 * u + 6.0 * u * u); break;
    }
    // chain rule for u = (|x| - R)/R
    double out = s / std::pow(R, k);
    if (x < 0.0 && (k % 2) == 1) out = -out;
    return out;
  };
  return f;
}

SpatialFn SpatialFn::one() {
  SpatialFn f;
  f.name = "one";
  f.eval = [](double, int k) {
    check_deriv(k);
    return k == 0 ? 1.0 : 0.0;
  };
  return f;
}

double FieldModel::eval(double x, const Eigen::VectorXd& y, int x_deriv) const {
  double s = 0.0;
  for (const auto& term : terms) s += term.h.eval(x, x_deriv) * term.g(y);
  return s;
}

bool FieldModel::empty_field() const { return terms.empty(); }

FieldConditionReport field_condition_check(const FieldModel& field,
                                           const KernelSpec& kernel, double p,
                                           int degree_cap) {
  if (field.spatial_grid.empty())
    throw std::invalid_argument("field_condition_check: empty spatial grid");
  if (p <= 1.0)
    throw std::invalid_argument("field_condition_check: p must be > 1");
  const int n = kernel.n();
  const Eigen::MatrixXd sigma =
      kernel.variance() * Eigen::MatrixXd::Identity(n, n);

  FieldConditionReport rep;
  rep.rank_threshold = 2.0 / kernel.beta();
  rep.min_rank = INT_MAX;
  rep.min_rank_underived = INT_MAX;
  rep.supnorm_sum.assign(4, 0.0);

  double total_mass = 0.0;
  for (double x : field.spatial_grid) {
    int rank0 = INT_MAX;
    for (int k = 0; k <= 3; ++k) {
      const auto exp = expand(
          [&field, x, k](const Eigen::VectorXd& y) {
            return field.eval(x, y, k);
          },
          sigma, degree_cap);
      total_mass += exp.l2_norm2;
      const int r = exp.rank();
      if (k == 0) {
        rank0 = r;
        rep.min_rank_underived = std::min(rep.min_rank_underived, r);
      } else if (r < rank0) {
        // differentiating in x scales the chaos coefficients uniformly for
        // separable fields; a drop in rank signals a broken field model
        rep.rank_monotone = false;
      }
      if (r != INT_MAX) rep.min_rank = std::min(rep.min_rank, r);

      double s = 0.0;
      const double tol = exp.default_coeff_tol();
      for (const auto& [l, c] : exp.coeffs) {
        if (l.order() == 0 || std::abs(c) <= tol) continue;
        s += std::abs(c) *
             std::pow((4.0 * n - 1.0) * (p - 1.0), l.order() / 2.0) *
             std::sqrt(static_cast<double>(l.factorial()));
      }
      rep.supnorm_sum[static_cast<std::size_t>(k)] =
          std::max(rep.supnorm_sum[static_cast<std::size_t>(k)], s);
    }
  }

  rep.degenerate = total_mass <= 1e-300;
  const double r_min = rep.min_rank_underived == INT_MAX
                           ? HUGE_VAL
                           : static_cast<double>(rep.min_rank_underived);
  rep.violation = !rep.degenerate && r_min <= rep.rank_threshold + 1e-12;
  rep.boundary =
      std::isfinite(r_min) && std::abs(r_min - rep.rank_threshold) <= 1e-12;

  for (int k = 0; k <= 3; ++k) {
    std::ostringstream q;
    q << "supnorm_sum[deriv=" << k << "]";
    rep.rows.push_back({q.str(), rep.supnorm_sum[static_cast<std::size_t>(k)],
                        0.0, 0.0, 0.0});
  }
  rep.rows.push_back({"min_rank",
                      rep.min_rank_underived == INT_MAX
                          ? -1.0
                          : static_cast<double>(rep.min_rank_underived),
                      0.0, rep.rank_threshold, 0.0});
  return rep;
}

SlowPath integrate_fast_slow(const FieldModel& field,
                             const Eigen::MatrixXd& fast_path, double h_fast,
                             double eps, double x0, double substep) {
  if (eps <= 0.0 || h_fast <= 0.0)
    throw std::invalid_argument("integrate_fast_slow: eps and h_fast must be > 0");
  if (substep <= 0.0 || substep > 1.0)
    throw std::invalid_argument("integrate_fast_slow: substep must be in (0, 1]");
  const int count = static_cast<int>(fast_path.rows());
  if (count < 2)
    throw std::invalid_argument("integrate_fast_slow: fast path too short");

  const double T = eps * h_fast * (count - 1);
  const double h = eps * h_fast * substep;
  SlowPath out;
  out.grid = PathGrid::make(0.0, T, h);  // rejects non-integer step ratios
  out.values.resize(out.grid.count);
  out.values(0) = x0;

  const double root_eps = std::sqrt(eps);
  // fast state at fractional node position u (piecewise linear)
  auto fast_at = [&fast_path, count](double u) -> Eigen::VectorXd {
    int k = static_cast<int>(std::floor(u));
    k = std::clamp(k, 0, count - 2);
    const double w = u - k;
    return (1.0 - w) * fast_path.row(k).transpose() +
           w * fast_path.row(k + 1).transpose();
  };

  double x = x0;
  for (int j = 0; j + 1 < out.grid.count; ++j) {
    const Eigen::VectorXd y0 = fast_at(j * substep);
    const Eigen::VectorXd y1 = fast_at((j + 1) * substep);
    const double f0 = field.eval(x, y0) / root_eps;
    const double f1 = field.eval(x + h * f0, y1) / root_eps;
    x += 0.5 * h * (f0 + f1);
    if (!std::isfinite(x) || std::abs(x) > 1e6) {
      out.blown_up = true;
      for (int r = j + 1; r < out.grid.count; ++r) out.values(r) = x;
      return out;
    }
    out.values(j + 1) = x;
  }
  return out;
}

namespace {

// linear interpolation on an ascending grid, allowing at most one cell of
// extrapolation beyond either end
double grid_locate(const std::vector<double>& g, double x, int& k) {
  const int m = static_cast<int>(g.size());
  const double lo = g.front() - (g[1] - g[0]);
  const double hi = g.back() + (g[m - 1] - g[m - 2]);
  if (x < lo - 1e-12 || x > hi + 1e-12) {
    std::ostringstream msg;
    msg << "EffectiveModel: x = " << x
        << " lies more than one cell outside the spatial grid ["
        << g.front() << ", " << g.back() << "]";
    throw std::invalid_argument(msg.str());
  }
  k = static_cast<int>(std::upper_bound(g.begin(), g.end(), x) - g.begin()) - 1;
  k = std::clamp(k, 0, m - 2);
  return (x - g[static_cast<std::size_t>(k)]) /
         (g[static_cast<std::size_t>(k) + 1] - g[static_cast<std::size_t>(k)]);
}

}  // namespace

double EffectiveModel::gamma_at(double x) const {
  int k = 0;
  const double w = grid_locate(grid, x, k);
  // constant cells reproduce the node value bit-exactly (no weight roundoff)
  if (gamma(k) == gamma(k + 1)) return gamma(k);
  return (1.0 - w) * gamma(k) + w * gamma(k + 1);
}

double EffectiveModel::sigma_at(double x, double z) const {
  int a = 0, b = 0;
  const double wa = grid_locate(grid, x, a);
  const double wb = grid_locate(grid, z, b);
  const double s00 = sigma(a, b), s01 = sigma(a, b + 1);
  const double s10 = sigma(a + 1, b), s11 = sigma(a + 1, b + 1);
  if (s00 == s01 && s00 == s10 && s00 == s11) return s00;
  return (1.0 - wa) * ((1.0 - wb) * s00 + wb * s01) +
         wa * ((1.0 - wb) * s10 + wb * s11);
}

EffectiveModel effective_coefficients(const FieldModel& field,
                                      const KernelSpec& kernel,
                                      const std::vector<double>& r_grid,
                                      const GaussianEnsemble* ensemble,
                                      int degree_cap) {
  const auto& xg = field.spatial_grid;
  const int M = static_cast<int>(xg.size());
  if (M < 2)
    throw std::invalid_argument("effective_coefficients: need >= 2 grid points");
  for (int a = 0; a + 1 < M; ++a)
    if (xg[static_cast<std::size_t>(a) + 1] <= xg[static_cast<std::size_t>(a)])
      throw std::invalid_argument(
          "effective_coefficients: spatial grid must be strictly ascending");
  const std::size_t Q = r_grid.size();
  if (Q < 2 || r_grid.front() != 0.0)
    throw std::invalid_argument(
        "effective_coefficients: lag grid must start at 0");

  const int n = kernel.n();
  const double var = kernel.variance();
  if (var <= 0.0)
    throw std::invalid_argument("effective_coefficients: degenerate kernel");
  const Eigen::MatrixXd sigma_y = var * Eigen::MatrixXd::Identity(n, n);

  // chaos expansions of f(x_a, .) and d_x f(x_a, .) per grid point
  std::vector<HermiteExpansion> e0(static_cast<std::size_t>(M));
  std::vector<HermiteExpansion> e1(static_cast<std::size_t>(M));
  int max_order = 0;
  for (int a = 0; a < M; ++a) {
    const double x = xg[static_cast<std::size_t>(a)];
    e0[static_cast<std::size_t>(a)] = expand(
        [&field, x](const Eigen::VectorXd& y) { return field.eval(x, y, 0); },
        sigma_y, degree_cap);
    e1[static_cast<std::size_t>(a)] = expand(
        [&field, x](const Eigen::VectorXd& y) { return field.eval(x, y, 1); },
        sigma_y, degree_cap);
    for (const auto& [l, c] : e0[static_cast<std::size_t>(a)].coeffs)
      max_order = std::max(max_order, l.order());
  }

  // I_m = int rho(r)^m dr (trapezoid); components iid, so the cross-Hermite
  // covariance of H_l against H_k at lag r collapses to delta_{lk} l! rho^|l|
  std::vector<double> corr(Q);
  for (std::size_t q = 0; q < Q; ++q)
    corr[q] = kernel.scalar_covariance(r_grid[q]) / var;
  std::vector<double> I(static_cast<std::size_t>(max_order) + 1, 0.0);
  for (int m = 1; m <= max_order; ++m) {
    double s = 0.0;
    for (std::size_t q = 0; q + 1 < Q; ++q)
      s += 0.5 * (r_grid[q + 1] - r_grid[q]) *
           (std::pow(corr[q], m) + std::pow(corr[q + 1], m));
    I[static_cast<std::size_t>(m)] = s;
  }

  auto pair_integral = [&I](const HermiteExpansion& u,
                            const HermiteExpansion& v) {
    double s = 0.0;
    for (const auto& [l, cu] : u.coeffs) {
      if (l.order() == 0) continue;  // mean terms excluded (centered integrand)
      const double cv = v.coeff(l);
      if (cv == 0.0) continue;
      s += cu * cv * static_cast<double>(l.factorial()) *
           I[static_cast<std::size_t>(l.order())];
    }
    return s;
  };

  EffectiveModel model;
  model.grid = xg;
  model.horizon = r_grid.back();
  model.lambda.resize(M, M);
  model.gamma.resize(M);
  model.lambda_se = Eigen::MatrixXd::Zero(M, M);
  model.gamma_se = Eigen::VectorXd::Zero(M);
  for (int a = 0; a < M; ++a) {
    model.gamma(a) = pair_integral(e1[static_cast<std::size_t>(a)],
                                   e0[static_cast<std::size_t>(a)]);
    for (int b = 0; b < M; ++b)
      model.lambda(a, b) = pair_integral(e0[static_cast<std::size_t>(a)],
                                         e0[static_cast<std::size_t>(b)]);
  }
  model.sigma = model.lambda + model.lambda.transpose();

  if (ensemble != nullptr) {
    const int P = ensemble->n_paths();
    if (P < 2)
      throw std::invalid_argument("effective_coefficients: need >= 2 paths");
    const auto& grid = ensemble->grid;
    std::vector<int> steps(Q);
    for (std::size_t q = 0; q < Q; ++q) {
      const double pos = r_grid[q] / grid.step;
      steps[q] = static_cast<int>(std::llround(pos));
      if (std::abs(pos - steps[q]) > 1e-9 || steps[q] >= grid.count)
        throw std::invalid_argument(
            "effective_coefficients: lag must be a grid multiple within the span");
    }

    // analytic means, subtracted so the MC product estimates the centered
    // correlation that the chaos route integrates
    const MultiIndex zero_idx(std::vector<int>(static_cast<std::size_t>(n), 0));
    Eigen::VectorXd mean0(M), mean1(M);
    for (int a = 0; a < M; ++a) {
      mean0(a) = e0[static_cast<std::size_t>(a)].coeff(zero_idx);
      mean1(a) = e1[static_cast<std::size_t>(a)].coeff(zero_idx);
    }

    std::vector<std::vector<double>> lam_pp(
        static_cast<std::size_t>(M) * static_cast<std::size_t>(M),
        std::vector<double>(static_cast<std::size_t>(P)));
    std::vector<std::vector<double>> gam_pp(
        static_cast<std::size_t>(M),
        std::vector<double>(static_cast<std::size_t>(P)));

    Eigen::MatrixXd fv(grid.count, M), dv(grid.count, M);
    for (int p = 0; p < P; ++p) {
      for (int k = 0; k < grid.count; ++k) {
        const Eigen::VectorXd y = ensemble->paths[static_cast<std::size_t>(p)]
                                      .row(k)
                                      .transpose();
        for (int a = 0; a < M; ++a) {
          fv(k, a) = field.eval(xg[static_cast<std::size_t>(a)], y, 0);
          dv(k, a) = field.eval(xg[static_cast<std::size_t>(a)], y, 1);
        }
      }
      // centered time-averaged cross products per lag, then lag trapezoid
      Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(M, M);
      Eigen::VectorXd prev_g = Eigen::VectorXd::Zero(M);
      Eigen::MatrixXd lam_acc = Eigen::MatrixXd::Zero(M, M);
      Eigen::VectorXd gam_acc = Eigen::VectorXd::Zero(M);
      for (std::size_t q = 0; q < Q; ++q) {
        const int s = steps[q];
        const int T = grid.count - s;
        Eigen::MatrixXd cur =
            (fv.bottomRows(T).transpose() * fv.topRows(T)) / double(T) -
            mean0 * mean0.transpose();
        Eigen::VectorXd cur_g =
            (dv.bottomRows(T).transpose() * fv.topRows(T)).diagonal() /
                double(T) -
            mean1.cwiseProduct(mean0);
        if (q > 0) {
          const double w = 0.5 * (r_grid[q] - r_grid[q - 1]);
          lam_acc += w * (prev + cur);
          gam_acc += w * (prev_g + cur_g);
        }
        prev = cur;
        prev_g = cur_g;
      }
      for (int a = 0; a < M; ++a) {
        gam_pp[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)] =
            gam_acc(a);
        for (int b = 0; b < M; ++b)
          lam_pp[static_cast<std::size_t>(a * M + b)]
                [static_cast<std::size_t>(p)] = lam_acc(a, b);
      }
    }

    double worst = 0.0;
    std::string worst_cell;
    auto record = [&](double mc, double se, double an, const std::string& cell,
                      double* se_out) {
      *se_out = se;
      const double z = std::abs(zscore(mc, an, se));
      if (z > worst) {
        worst = z;
        worst_cell = cell;
      }
    };
    for (int a = 0; a < M; ++a) {
      {
        std::ostringstream cell;
        cell << "gamma(x=" << xg[static_cast<std::size_t>(a)] << ")";
        record(sample_mean(gam_pp[static_cast<std::size_t>(a)]),
               sample_se(gam_pp[static_cast<std::size_t>(a)]), model.gamma(a),
               cell.str(), &model.gamma_se(a));
      }
      for (int b = 0; b < M; ++b) {
        std::ostringstream cell;
        cell << "lambda(x=" << xg[static_cast<std::size_t>(a)]
             << ", z=" << xg[static_cast<std::size_t>(b)] << ")";
        record(sample_mean(lam_pp[static_cast<std::size_t>(a * M + b)]),
               sample_se(lam_pp[static_cast<std::size_t>(a * M + b)]),
               model.lambda(a, b), cell.str(), &model.lambda_se(a, b));
      }
    }
    if (worst > 5.0) {
      std::ostringstream msg;
      msg << "effective_coefficients: estimators disagree at " << worst_cell
          << " (|z| = " << worst << ")";
      throw std::runtime_error(msg.str());
    }
  }
  return model;
}

namespace {

// Cholesky that tolerates an exactly singular PSD input: zero pivots yield
// zero columns when the residual column is negligible. Returns false when a
// pivot is genuinely negative (caller retries with jitter).
bool semidefinite_cholesky(const Eigen::MatrixXd& A, Eigen::MatrixXd& L) {
  const int N = static_cast<int>(A.rows());
  const double scale = std::max(A.diagonal().maxCoeff(), 0.0);
  const double tol = 1e-13 * std::max(scale, 1e-300);
  L = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < N; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (d < -tol) return false;
    if (d <= tol) {
      // rank-deficient pivot: the rest of the column must be explained by
      // the previous columns, otherwise the matrix is indefinite
      for (int i = j + 1; i < N; ++i) {
        double r = A(i, j);
        for (int k = 0; k < j; ++k) r -= L(i, k) * L(j, k);
        if (std::abs(r) > 1e-7 * std::max(scale, 1e-300)) return false;
      }
      continue;  // L(., j) stays zero
    }
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < N; ++i) {
      double r = A(i, j);
      for (int k = 0; k < j; ++k) r -= L(i, k) * L(j, k);
      L(i, j) = r / L(j, j);
    }
  }
  return true;
}

}  // namespace

NPointRun kunita_npoint_euler(const EffectiveModel& model,
                              const std::vector<double>& x0s, double T,
                              double dt, std::uint64_t seed) {
  const int N = static_cast<int>(x0s.size());
  if (N < 1) throw std::invalid_argument("kunita_npoint_euler: no start points");
  NPointRun run;
  run.grid = PathGrid::make(0.0, T, dt);
  run.values.resize(run.grid.count, N);
  for (int a = 0; a < N; ++a) run.values(0, a) = x0s[static_cast<std::size_t>(a)];

  GaussianRng rng(seed);
  Eigen::MatrixXd C(N, N), L(N, N);
  Eigen::VectorXd z(N), x(N);
  for (int a = 0; a < N; ++a) x(a) = x0s[static_cast<std::size_t>(a)];

  for (int j = 0; j + 1 < run.grid.count; ++j) {
    for (int a = 0; a < N; ++a)
      for (int b = a; b < N; ++b) C(a, b) = C(b, a) = model.sigma_at(x(a), x(b)) * dt;
    if (!semidefinite_cholesky(C, L)) {
      const double trace = std::max(C.trace(), 0.0);
      double jitter = 1e-14 * std::max(trace, 1e-300);
      bool ok = false;
      while (jitter <= 1e-10 * trace) {
        Eigen::MatrixXd Cj = C + jitter * Eigen::MatrixXd::Identity(N, N);
        if (semidefinite_cholesky(Cj, L)) {
          ok = true;
          run.max_jitter = std::max(run.max_jitter, jitter);
          break;
        }
        jitter *= 10.0;
      }
      if (!ok)
        throw std::runtime_error(
            "kunita_npoint_euler: increment covariance is not PSD within the "
            "jitter budget");
    }
    for (int a = 0; a < N; ++a) z(a) = rng.normal();
    const Eigen::VectorXd noise = L * z;
    for (int a = 0; a < N; ++a)
      x(a) += model.gamma_at(x(a)) * dt + noise(a);
    run.values.row(j + 1) = x.transpose();
  }
  return run;
}

FlowCompareReport limit_flow_compare(const Eigen::MatrixXd& eps_sample,
                                     const Eigen::MatrixXd& limit_sample,
                                     std::uint64_t seed, int permutations,
                                     double bias_allowance) {
  if (eps_sample.cols() != limit_sample.cols())
    throw std::invalid_argument("limit_flow_compare: dimension mismatch");
  const int N = static_cast<int>(eps_sample.cols());
  const int Pa = static_cast<int>(eps_sample.rows());
  const int Pb = static_cast<int>(limit_sample.rows());
  if (Pa < 2 || Pb < 2)
    throw std::invalid_argument("limit_flow_compare: need >= 2 realizations");

  FlowCompareReport rep;
  auto column = [](const Eigen::MatrixXd& m, int a) {
    return std::vector<double>(m.col(a).data(), m.col(a).data() + m.rows());
  };
  auto add_row = [&rep, bias_allowance](const std::string& q, double est,
                                        double se, double tgt) {
    rep.rows.push_back({q, est, se, tgt, zscore(est, tgt, se)});
    if (std::abs(est - tgt) > 4.0 * se + bias_allowance) rep.pass = false;
  };

  for (int a = 0; a < N; ++a) {
    const auto xa = column(eps_sample, a);
    const auto xb = column(limit_sample, a);
    const double ma = sample_mean(xa), mb = sample_mean(xb);
    const double se_m = std::hypot(sample_se(xa), sample_se(xb));
    std::ostringstream q;
    q << "mean_diff[" << a << "]";
    add_row(q.str(), ma - mb, se_m, 0.0);

    for (int b = a; b < N; ++b) {
      const auto ya = column(eps_sample, b);
      const auto yb = column(limit_sample, b);
      const double na = sample_mean(ya), nb = sample_mean(yb);
      std::vector<double> pa(static_cast<std::size_t>(Pa)),
          pb(static_cast<std::size_t>(Pb));
      for (int p = 0; p < Pa; ++p)
        pa[static_cast<std::size_t>(p)] =
            (eps_sample(p, a) - ma) * (eps_sample(p, b) - na);
      for (int p = 0; p < Pb; ++p)
        pb[static_cast<std::size_t>(p)] =
            (limit_sample(p, a) - mb) * (limit_sample(p, b) - nb);
      std::ostringstream qc;
      qc << "cov_diff[" << a << "," << b << "]";
      add_row(qc.str(), sample_mean(pa) - sample_mean(pb),
              std::hypot(sample_se(pa), sample_se(pb)), 0.0);
    }
  }

  rep.energy = energy_permutation_test(eps_sample, limit_sample, permutations, seed);
  if (rep.energy.p_value < 1e-3) rep.pass = false;
  return rep;
}

}  // namespace vlab
