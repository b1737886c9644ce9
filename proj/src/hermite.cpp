#include "vlab/hermite.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <stdexcept>

#include "vlab/quad.hpp"

namespace vlab {

double hermite_1d(int m, double x) {
  if (m < 0 || m > 60)
    throw std::invalid_argument("hermite_1d: order must lie in [0, 60]");
  double p0 = 1.0;
  if (m == 0) return p0;
  double p1 = x;
  for (int k = 1; k < m; ++k) {
    const double p2 = x * p1 - k * p0;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

int MultiIndex::order() const {
  int s = 0;
  for (int e : entries) {
    if (e < 0) throw std::invalid_argument("MultiIndex: negative entry");
    s += e;
  }
  return s;
}

std::uint64_t MultiIndex::factorial() const {
  if (order() > 20)
    throw std::overflow_error("MultiIndex: factorial guard |l| <= 20");
  std::uint64_t f = 1;
  for (int e : entries)
    for (int k = 2; k <= e; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

double hermite_multi(const MultiIndex& l, const Eigen::VectorXd& x) {
  if (l.dim() != x.size())
    throw std::invalid_argument("hermite_multi: dimension mismatch");
  double p = 1.0;
  for (int i = 0; i < l.dim(); ++i) p *= hermite_1d(l.entries[i], x(i));
  return p;
}

std::vector<MultiIndex> multi_indices_up_to(int dim, int cap) {
  std::vector<MultiIndex> out;
  MultiIndex cur(std::vector<int>(dim, 0));
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == dim) {
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur.entries[axis] = v;
      rec(axis + 1, left - v);
    }
    cur.entries[axis] = 0;
  };
  rec(0, cap);
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& y) const {
  return D.cwiseSqrt().cwiseInverse().asDiagonal() * (O.transpose() * y);
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& z) const {
  return O * (D.cwiseSqrt().asDiagonal() * z);
}

Normalizer normalize_covariance(const Eigen::MatrixXd& sigma, double theta) {
  const int n = static_cast<int>(sigma.rows());
  if (sigma.cols() != n)
    throw std::invalid_argument("normalize_covariance: matrix must be square");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("normalize_covariance: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (sigma + sigma.transpose()));
  const double trace = std::max(sigma.trace(), 0.0);
  const Eigen::VectorXd ev = es.eigenvalues();  // ascending
  if (ev.minCoeff() < -1e-8 * std::max(trace, 1e-300))
    throw std::invalid_argument("normalize_covariance: matrix not PSD");
  const double cut = 1e-12 * std::max(trace, 1e-300);
  // stable descending order, so (near-)diagonal input keeps its axis order
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (ev(i) > cut) keep.push_back(i);
  std::stable_sort(keep.begin(), keep.end(),
                   [&](int a, int b) { return ev(a) > ev(b); });
  Normalizer nm;
  nm.O.resize(n, static_cast<int>(keep.size()));
  nm.D.resize(static_cast<int>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    nm.O.col(static_cast<int>(j)) = es.eigenvectors().col(keep[j]);
    nm.D(static_cast<int>(j)) = ev(keep[j]);
  }
  nm.theta_hat = keep.empty() ? theta : theta / nm.D.minCoeff();
  return nm;
}

double HermiteExpansion::default_coeff_tol() const {
  return 1e-9 * std::sqrt(std::max(l2_norm2, 0.0));
}

double HermiteExpansion::coeff(const MultiIndex& l) const {
  auto it = coeffs.find(l);
  return it == coeffs.end() ? 0.0 : it->second;
}

double HermiteExpansion::evaluate(const Eigen::VectorXd& z) const {
  double s = 0.0;
  for (const auto& [l, c] : coeffs) s += c * hermite_multi(l, z);
  return s;
}

int HermiteExpansion::rank(double coeff_tol) const {
  const double tol = coeff_tol < 0.0 ? default_coeff_tol() : coeff_tol;
  int best = INT_MAX;
  for (const auto& [l, c] : coeffs)
    if (std::abs(c) > tol) best = std::min(best, l.order());
  return best;
}

namespace {

// Accumulate <G, H_l> numerators and ||G||^2 over one tensor-product rule,
// scaled by a combination coefficient.
void tensor_accumulate(const std::function<double(const Eigen::VectorXd&)>& G,
                       const Normalizer& nm,
                       const std::vector<QuadRule>& axis_rules, double coef,
                       const std::vector<MultiIndex>& indices,
                       std::map<MultiIndex, double>& num, double& l2) {
  const int m = static_cast<int>(axis_rules.size());
  // Hermite values per axis, node and degree
  int cap = 0;
  for (const auto& l : indices) cap = std::max(cap, l.order());
  std::vector<std::vector<std::vector<double>>> hv(m);
  for (int a = 0; a < m; ++a) {
    const auto& r = axis_rules[a];
    hv[a].resize(r.nodes.size());
    for (std::size_t q = 0; q < r.nodes.size(); ++q) {
      hv[a][q].resize(cap + 1);
      for (int d = 0; d <= cap; ++d) hv[a][q][d] = hermite_1d(d, r.nodes[q]);
    }
  }
  std::vector<std::size_t> idx(m, 0);
  Eigen::VectorXd z(m);
  while (true) {
    double w = coef;
    for (int a = 0; a < m; ++a) {
      w *= axis_rules[a].weights[idx[a]];
      z(a) = axis_rules[a].nodes[idx[a]];
    }
    const double g = G(nm.denormalize(z));
    l2 += w * g * g;
    const double wg = w * g;
    for (const auto& l : indices) {
      double prod = 1.0;
      for (int a = 0; a < m; ++a) prod *= hv[a][idx[a]][l.entries[a]];
      num[l] += wg * prod;
    }
    int a = 0;
    for (; a < m; ++a) {
      if (++idx[a] < axis_rules[a].nodes.size()) break;
      idx[a] = 0;
    }
    if (a == m) break;
  }
}

std::uint64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// One full pass at the given resolution (dense order, or sparse level).
void expansion_pass(const std::function<double(const Eigen::VectorXd&)>& G,
                    const Normalizer& nm, int m, int order,
                    const std::vector<MultiIndex>& indices,
                    std::map<MultiIndex, double>& num, double& l2) {
  num.clear();
  for (const auto& l : indices) num[l] = 0.0;
  l2 = 0.0;
  if (m == 0) {
    const double g = G(Eigen::VectorXd::Zero(nm.O.rows()));
    l2 = g * g;
    num[MultiIndex(std::vector<int>{})] = g;
    return;
  }
  if (m <= 4) {
    std::vector<QuadRule> rules(m, gauss_hermite(order));
    tensor_accumulate(G, nm, rules, 1.0, indices, num, l2);
    return;
  }
  // Smolyak combination technique at the given level
  const int level = order;
  const int q = level + m - 1;
  std::vector<int> i(m, 1);
  std::function<void(int, int)> rec = [&](int axis, int used) {
    if (axis == m - 1) {
      for (int last = 1; last <= q - used; ++last) {
        i[axis] = last;
        const int total = used + last;
        if (total < q - m + 1) continue;
        const int def = q - total;
        const double coef = ((def % 2) ? -1.0 : 1.0) *
                            static_cast<double>(binom(m - 1, def));
        std::vector<QuadRule> rules(m);
        for (int a = 0; a < m; ++a) rules[a] = gauss_hermite(i[a]);
        tensor_accumulate(G, nm, rules, coef, indices, num, l2);
      }
      return;
    }
    for (int v = 1; v <= q - used - (m - 1 - axis); ++v) {
      i[axis] = v;
      rec(axis + 1, used + v);
    }
  };
  rec(0, 0);
}

}  // namespace

HermiteExpansion expand(const std::function<double(const Eigen::VectorXd&)>& G,
                        const Eigen::MatrixXd& sigma, int degree_cap,
                        int quadrature_order) {
  if (degree_cap < 0 || degree_cap > 20)
    throw std::invalid_argument("expand: degree cap must lie in [0, 20]");
  Normalizer nm = normalize_covariance(sigma);
  const int m = nm.rank();
  const auto indices = multi_indices_up_to(m, degree_cap);

  int order = quadrature_order;
  if (order <= 0) order = (m <= 4) ? std::max(degree_cap + 2, 12) : 8;
  if (m <= 4 && order > 64)
    throw std::invalid_argument("expand: quadrature order above 64");

  std::map<MultiIndex, double> num_lo, num_hi;
  double l2_lo = 0.0, l2_hi = 0.0;
  expansion_pass(G, nm, m, order, indices, num_lo, l2_lo);
  const int order_hi = (m <= 4) ? std::min(2 * order, 96) : order + 1;
  expansion_pass(G, nm, m, order_hi, indices, num_hi, l2_hi);

  HermiteExpansion exp;
  exp.degree_cap = degree_cap;
  exp.sigma = sigma;
  exp.quadrature_order = order_hi;
  exp.l2_norm2 = l2_hi;

  const double scale = std::max(1.0, std::sqrt(std::max(l2_hi, 0.0)));
  double parseval = 0.0;
  for (const auto& l : indices) {
    const double fac = static_cast<double>(l.factorial());
    const double c = num_hi[l] / fac;
    exp.coeffs[l] = c;
    parseval += c * c * fac;
    if (std::abs(num_hi[l] - num_lo[l]) / fac > 1e-6 * scale)
      exp.accuracy_warning = true;
  }
  exp.residual = std::max(exp.l2_norm2 - parseval, 0.0);
  return exp;
}

ChaosDecaySum chaos_decay_sum(const HermiteExpansion& exp, double p) {
  if (p <= 1.0) throw std::invalid_argument("chaos_decay_sum: p must be > 1");
  ChaosDecaySum out;
  double top_band = 0.0;
  int cap = 0;
  for (const auto& [l, c] : exp.coeffs) cap = std::max(cap, l.order());
  for (const auto& [l, c] : exp.coeffs) {
    const double term = std::abs(c) * std::pow(p - 1.0, l.order() / 2.0) *
                        std::sqrt(static_cast<double>(l.factorial()));
    out.value += term;
    if (l.order() >= cap - 1) top_band += term;
  }
  if (out.value > 0.0 && top_band >= 1e-3 * out.value) out.converged = false;
  return out;
}

std::vector<PairingGraph> enumerate_pairings(const MultiIndex& l) {
  const int total = l.order();
  if (total > 16) throw std::length_error("enumerate_pairings: |l| > 16 guard");
  const int N = l.dim();
  std::vector<PairingGraph> out;
  if (total % 2 != 0) return out;

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) pairs.emplace_back(i, j);

  std::vector<int> rem(l.entries.begin(), l.entries.end());
  Eigen::MatrixXi gamma = Eigen::MatrixXi::Zero(N, N);

  std::function<void(std::size_t)> rec = [&](std::size_t pi) {
    if (pi == pairs.size()) {
      for (int i = 0; i < N; ++i)
        if (rem[i] != 0) return;
      PairingGraph g;
      g.node_degrees = l;
      g.edges = gamma;
      // leg-level matchings realizing this multigraph
      std::uint64_t mult = l.factorial();
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
          for (int k = 2; k <= gamma(i, j); ++k) mult /= k;
      g.multiplicity = mult;
      out.push_back(std::move(g));
      return;
    }
    const auto [i, j] = pairs[pi];
    const int hi = std::min(rem[i], rem[j]);
    for (int v = 0; v <= hi; ++v) {
      gamma(i, j) = gamma(j, i) = v;
      rem[i] -= v;
      rem[j] -= v;
      // once node i has no further partners, its degree must be used up
      if (!(j == N - 1 && rem[i] != 0)) rec(pi + 1);
      rem[i] += v;
      rem[j] += v;
    }
    gamma(i, j) = gamma(j, i) = 0;
  };
  if (N >= 2) rec(0);
  return out;
}

double diagram_expectation(const MultiIndex& l, const Eigen::MatrixXd& R) {
  const int N = l.dim();
  if (R.rows() != N || R.cols() != N)
    throw std::invalid_argument("diagram_expectation: covariance size mismatch");
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, R.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("diagram_expectation: covariance not symmetric");
  double total = 0.0;
  for (const auto& g : enumerate_pairings(l)) {
    double prod = static_cast<double>(g.multiplicity);
    for (int i = 0; i < N && prod != 0.0; ++i)
      for (int j = i + 1; j < N; ++j)
        for (int k = 0; k < g.edges(i, j); ++k) prod *= R(i, j);
    total += prod;
  }
  return total;
}

double cross_hermite_covariance(const MultiIndex& l, const MultiIndex& k,
                                const Eigen::MatrixXd& R_joint) {
  const int n = l.dim();
  if (k.dim() != n)
    throw std::invalid_argument("cross_hermite_covariance: index dims differ");
  if (R_joint.rows() != 2 * n || R_joint.cols() != 2 * n)
    throw std::invalid_argument("cross_hermite_covariance: need 2n x 2n joint");
  for (int b = 0; b < 2; ++b) {
    const Eigen::MatrixXd blk = R_joint.block(b * n, b * n, n, n);
    if ((blk - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument(
          "cross_hermite_covariance: diagonal blocks must be the identity");
  }
  if (l.order() != k.order()) return 0.0;
  std::vector<int> cat(l.entries);
  cat.insert(cat.end(), k.entries.begin(), k.entries.end());
  return diagram_expectation(MultiIndex(cat), R_joint);
}

double conditional_hermite_norm(const MultiIndex& l, double gap,
                                const KernelSpec& kernel) {
  if (gap < 0.0)
    throw std::invalid_argument("conditional_hermite_norm: gap must be >= 0");
  if (l.order() == 0) return 1.0;
  const double var = kernel.variance();
  if (!(var > 0.0))
    throw std::runtime_error("conditional_hermite_norm: degenerate kernel");
  const double a = std::sqrt(kernel.tail_energy(gap) / var);
  const int n = l.dim();
  // duplicated index against the duplicated (perfectly correlated) components
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    R(i, i) = R(n + i, n + i) = 1.0;
    R(i, n + i) = R(n + i, i) = 1.0;
  }
  std::vector<int> cat(l.entries);
  cat.insert(cat.end(), l.entries.begin(), l.entries.end());
  const double second_moment = diagram_expectation(MultiIndex(cat), R);
  return std::pow(a, l.order()) * std::sqrt(std::max(second_moment, 0.0));
}

DecayIntegral conditional_decay_integral(const HermiteExpansion& exp,
                                         const KernelSpec& kernel, double horizon,
                                         int quad_order) {
  DecayIntegral out;
  const double tol = exp.default_coeff_tol();
  std::vector<std::pair<MultiIndex, double>> terms;
  bool has_mean = false;
  for (const auto& [l, c] : exp.coeffs) {
    if (std::abs(c) <= tol) continue;
    if (l.order() == 0) {
      has_mean = true;  // E[G] does not decay; excluded from the integral
      continue;
    }
    terms.emplace_back(l, c);
  }
  if (terms.empty() && !has_mean) {
    out.finite = true;
    return out;
  }
  const double var = kernel.variance();
  // sqrt of the duplicated-index diagram, precomputed per index
  std::vector<double> dia(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& l = terms[t].first;
    const int n = l.dim();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      R(i, i) = R(n + i, n + i) = 1.0;
      R(i, n + i) = R(n + i, i) = 1.0;
    }
    std::vector<int> cat(l.entries);
    cat.insert(cat.end(), l.entries.begin(), l.entries.end());
    dia[t] = std::sqrt(std::max(diagram_expectation(MultiIndex(cat), R), 0.0));
  }
  auto integrand = [&](double s) {
    const double a = std::sqrt(kernel.tail_energy(s) / var);
    double sum = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t)
      sum += std::abs(terms[t].second) * std::pow(a, terms[t].first.order()) *
             dia[t];
    return sum;
  };
  out.value = integrate(integrand, 0.0, horizon, 1e-8, quad_order);

  const int rank = exp.rank();
  out.finite = !has_mean && rank != INT_MAX && rank * kernel.beta() > 2.0;
  return out;
}

}  // namespace vlab
