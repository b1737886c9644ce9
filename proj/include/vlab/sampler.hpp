#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vlab/grid.hpp"
#include "vlab/kernel.hpp"

namespace vlab {

enum class SampleMethod { circulant, cholesky, moving_average };

struct GaussianEnsemble {
  PathGrid grid;
  int n = 1;
  std::vector<Eigen::MatrixXd> paths;  // each count x n
  std::uint64_t master_seed = 0;
  SampleMethod method = SampleMethod::circulant;
  double truncation = 0.0;       // moving-average horizon T_c
  double truncation_tail = 0.0;  // neglected tail energy

  std::uint64_t path_seed(int i) const;
  int n_paths() const { return static_cast<int>(paths.size()); }

  // Empirical E[y_0 (x) y_lag] averaged over paths and admissible time
  // offsets, with a per-entry Monte Carlo standard error estimate.
  void lag_covariance(int lag_steps, Eigen::MatrixXd& mean,
                      Eigen::MatrixXd& stderr) const;
};

// Exact stationary Gaussian sampling on a uniform grid: block circulant
// embedding of the covariance sequence, with a dense Cholesky fallback when
// the embedding is not PSD and the grid is small enough.
class StationarySampler {
 public:
  StationarySampler(const CovarianceModel& cov, const PathGrid& grid,
                    bool force_cholesky = false);

  SampleMethod method() const { return method_; }
  int n() const { return n_; }
  double min_embedding_eigenvalue() const { return min_eig_; }

  // One stationary path (count x n), a pure function of the seed.
  Eigen::MatrixXd sample(std::uint64_t path_seed) const;

 private:
  void build_dense(const CovarianceModel& cov, double h);

  int n_ = 1;
  int count_ = 0;
  std::size_t m_ = 0;  // circulant length
  SampleMethod method_ = SampleMethod::circulant;
  double min_eig_ = 0.0;
  std::vector<Eigen::MatrixXcd> factors_;  // B_k with B_k B_k^* = Lambda_k
  Eigen::MatrixXd chol_;                   // lower factor, (count n) square
};

GaussianEnsemble simulate_stationary(const CovarianceModel& cov, const PathGrid& grid,
                                     int n_paths, std::uint64_t master_seed,
                                     SampleMethod method = SampleMethod::circulant,
                                     int threads = 1);

GaussianEnsemble simulate_moving_average(const KernelSpec& spec, const PathGrid& grid,
                                         double truncation, int n_paths,
                                         std::uint64_t master_seed, int threads = 1);

}  // namespace vlab
