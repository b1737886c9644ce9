#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "vlab/rng.hpp"

namespace vlab {

// Deterministic pairwise tree reduction; the result does not depend on how
// the work that produced `v` was scheduled.
inline double pairwise_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t n = v.size();
  while (n > 1) {
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) v[i] += v[i + half];
    n = half;
  }
  return v[0];
}

inline double sample_mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("sample_mean: empty sample");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Standard error of the mean (unbiased sample variance / n, square-rooted).
inline double sample_se(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = sample_mean(v);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(n - 1) /
                   static_cast<double>(n));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// One-sample Kolmogorov-Smirnov statistic against a continuous cdf.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Asymptotic Kolmogorov distribution tail: P(sqrt(n) D > x).
inline double kolmogorov_pvalue(double x) {
  if (x <= 0.0) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) *
                        std::exp(-2.0 * k * k * x * x);
    p += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::min(std::max(p, 0.0), 1.0);
}

// Energy distance between two multivariate samples (rows = observations).
inline double energy_distance(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const auto nx = x.rows(), ny = y.rows();
  if (nx == 0 || ny == 0)
    throw std::invalid_argument("energy_distance: empty sample");
  auto mean_cross = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.rows(); ++j)
        s += (a.row(i) - b.row(j)).norm();
    return s / static_cast<double>(a.rows() * b.rows());
  };
  return 2.0 * mean_cross(x, y) - mean_cross(x, x) - mean_cross(y, y);
}

struct EnergyTest {
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

// Permutation test on the pooled sample; seeded and deterministic.
inline EnergyTest energy_permutation_test(const Eigen::MatrixXd& x,
                                          const Eigen::MatrixXd& y,
                                          int permutations = 200,
                                          std::uint64_t seed = 1234) {
  EnergyTest out;
  out.statistic = energy_distance(x, y);
  out.permutations = permutations;
  const Eigen::Index nx = x.rows(), ny = y.rows();
  Eigen::MatrixXd pool(nx + ny, x.cols());
  pool << x, y;
  std::vector<Eigen::Index> idx(nx + ny);
  int exceed = 0;
  for (int p = 0; p < permutations; ++p) {
    GaussianRng rng(mix64(seed, static_cast<std::uint64_t>(p)));
    for (Eigen::Index i = 0; i < nx + ny; ++i) idx[i] = i;
    // Fisher-Yates on the pooled indices
    for (Eigen::Index i = nx + ny - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.next_u64() % (i + 1));
      std::swap(idx[i], idx[j]);
    }
    Eigen::MatrixXd px(nx, pool.cols()), py(ny, pool.cols());
    for (Eigen::Index i = 0; i < nx; ++i) px.row(i) = pool.row(idx[i]);
    for (Eigen::Index i = 0; i < ny; ++i) py.row(i) = pool.row(idx[nx + i]);
    if (energy_distance(px, py) >= out.statistic) ++exceed;
  }
  out.p_value = (exceed + 1.0) / (permutations + 1.0);
  return out;
}

}  // namespace vlab
