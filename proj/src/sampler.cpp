#include "vlab/sampler.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "vlab/fft.hpp"
#include "vlab/parallel.hpp"
#include "vlab/rng.hpp"

namespace vlab {

std::uint64_t GaussianEnsemble::path_seed(int i) const {
  return mix64(master_seed, static_cast<std::uint64_t>(i));
}

void GaussianEnsemble::lag_covariance(int lag_steps, Eigen::MatrixXd& mean,
                                      Eigen::MatrixXd& se) const {
  if (paths.empty()) throw std::invalid_argument("lag_covariance: empty ensemble");
  if (lag_steps < 0 || lag_steps >= grid.count)
    throw std::invalid_argument("lag_covariance: lag outside grid");
  const int P = n_paths();
  const int T = grid.count - lag_steps;
  std::vector<Eigen::MatrixXd> per_path(P);
  for (int p = 0; p < P; ++p) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd& y = paths[p];
    for (int j = 0; j < T; ++j)
      acc.noalias() += y.row(j).transpose() * y.row(j + lag_steps);
    per_path[p] = acc / T;
  }
  mean = Eigen::MatrixXd::Zero(n, n);
  for (const auto& a : per_path) mean += a;
  mean /= P;
  se = Eigen::MatrixXd::Zero(n, n);
  if (P > 1) {
    for (const auto& a : per_path) se += (a - mean).cwiseAbs2();
    se = (se / (P - 1)).cwiseSqrt() / std::sqrt(static_cast<double>(P));
  }
}

StationarySampler::StationarySampler(const CovarianceModel& cov,
                                     const PathGrid& grid, bool force_cholesky) {
  n_ = static_cast<int>(cov.sigma0.rows());
  count_ = grid.count;
  const double h = grid.step;
  m_ = next_pow2(static_cast<std::size_t>(std::max(2 * (count_ - 1), 2)));

  if (force_cholesky) {
    if (count_ * n_ > 4096)
      throw std::runtime_error(
          "stationary sampling: grid too large for dense Cholesky");
    build_dense(cov, h);
    return;
  }

  // Covariance sequence on the circle: seq[r] = E[y_r y_0^T], reflected so
  // that seq[m - r] = seq[r]^T.
  std::vector<Eigen::MatrixXd> seq(m_);
  for (std::size_t r = 0; r <= m_ / 2; ++r) seq[r] = cov.corr(r * h).transpose();
  for (std::size_t r = m_ / 2 + 1; r < m_; ++r) seq[r] = seq[m_ - r].transpose();

  // Entrywise DFT of the sequence gives the spectral blocks Lambda_k.
  std::vector<Eigen::MatrixXcd> lambda(m_, Eigen::MatrixXcd::Zero(n_, n_));
  std::vector<std::complex<double>> buf(m_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      for (std::size_t r = 0; r < m_; ++r) buf[r] = seq[r](i, j);
      fft_radix2(buf, +1);
      for (std::size_t k = 0; k < m_; ++k) lambda[k](i, j) = buf[k];
    }
  }

  double min_eig = HUGE_VAL, max_eig = -HUGE_VAL;
  std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>> eigs;
  eigs.reserve(m_);
  for (std::size_t k = 0; k < m_; ++k) {
    // enforce exact Hermitian symmetry before decomposing
    Eigen::MatrixXcd herm = 0.5 * (lambda[k] + lambda[k].adjoint());
    eigs.emplace_back(herm);
    min_eig = std::min(min_eig, eigs.back().eigenvalues().minCoeff());
    max_eig = std::max(max_eig, eigs.back().eigenvalues().maxCoeff());
  }
  min_eig_ = min_eig;
  max_eig = std::max(max_eig, 0.0);

  if (min_eig >= -1e-10 * std::max(max_eig, 1e-300)) {
    method_ = SampleMethod::circulant;
    factors_.reserve(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      Eigen::VectorXd ev = eigs[k].eigenvalues().cwiseMax(0.0);
      factors_.push_back(eigs[k].eigenvectors() *
                         ev.cwiseSqrt().asDiagonal());
    }
    return;
  }

  const int dim = count_ * n_;
  if (dim > 4096) {
    std::ostringstream msg;
    msg << "stationary sampling infeasible: circulant embedding has negative "
           "eigenvalue "
        << min_eig << " and the grid (" << dim
        << " scalars) is too large for dense Cholesky";
    throw std::runtime_error(msg.str());
  }
  build_dense(cov, h);
}

void StationarySampler::build_dense(const CovarianceModel& cov, double h) {
  method_ = SampleMethod::cholesky;
  const int dim = count_ * n_;
  Eigen::MatrixXd full(dim, dim);
  for (int a = 0; a < count_; ++a) {
    for (int b = 0; b < count_; ++b) {
      const Eigen::MatrixXd block =
          (b >= a) ? cov.corr((b - a) * h)
                   : Eigen::MatrixXd(cov.corr((a - b) * h).transpose());
      full.block(a * n_, b * n_, n_, n_) = block;
    }
  }
  full.diagonal().array() += 1e-12;
  Eigen::LLT<Eigen::MatrixXd> llt(full);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "stationary sampling infeasible: embedding eigenvalue " << min_eig_
        << " and dense covariance not positive definite under 1e-12 jitter";
    throw std::runtime_error(msg.str());
  }
  chol_ = llt.matrixL();
}

Eigen::MatrixXd StationarySampler::sample(std::uint64_t path_seed) const {
  GaussianRng rng(path_seed);
  Eigen::MatrixXd out(count_, n_);
  if (method_ == SampleMethod::cholesky) {
    Eigen::VectorXd xi(count_ * n_);
    for (int i = 0; i < count_ * n_; ++i) xi(i) = rng.normal();
    Eigen::VectorXd w = chol_ * xi;
    for (int j = 0; j < count_; ++j)
      for (int c = 0; c < n_; ++c) out(j, c) = w(j * n_ + c);
    return out;
  }
  // b_k = B_k xi_k / sqrt(m) with complex standard xi; the real part of the
  // DFT of b then carries exactly the target covariance.
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m_));
  Eigen::MatrixXcd b(m_, n_);
  Eigen::VectorXcd xi(n_);
  for (std::size_t k = 0; k < m_; ++k) {
    for (int c = 0; c < n_; ++c) {
      const double u = rng.normal();
      const double v = rng.normal();
      xi(c) = std::complex<double>(u, v);
    }
    b.row(k) = (factors_[k] * xi).transpose() * inv_sqrt_m;
  }
  std::vector<std::complex<double>> buf(m_);
  for (int c = 0; c < n_; ++c) {
    for (std::size_t k = 0; k < m_; ++k) buf[k] = b(k, c);
    fft_radix2(buf, -1);
    for (int j = 0; j < count_; ++j) out(j, c) = buf[j].real();
  }
  return out;
}

GaussianEnsemble simulate_stationary(const CovarianceModel& cov, const PathGrid& grid,
                                     int n_paths, std::uint64_t master_seed,
                                     SampleMethod method, int threads) {
  if (n_paths < 1) throw std::invalid_argument("simulate_stationary: n_paths >= 1");
  if (method == SampleMethod::moving_average)
    throw std::invalid_argument(
        "simulate_stationary: use simulate_moving_average for that method");
  StationarySampler sampler(cov, grid, method == SampleMethod::cholesky);
  GaussianEnsemble ens;
  ens.grid = grid;
  ens.n = sampler.n();
  ens.master_seed = master_seed;
  ens.method = sampler.method();
  ens.paths.resize(n_paths);
  parallel_for(n_paths, threads, [&](int i) {
    ens.paths[i] = sampler.sample(ens.path_seed(i));
  });
  return ens;
}

GaussianEnsemble simulate_moving_average(const KernelSpec& spec, const PathGrid& grid,
                                         double truncation, int n_paths,
                                         std::uint64_t master_seed, int threads) {
  const double h = grid.step;
  if (truncation < h)
    throw std::invalid_argument(
        "simulate_moving_average: truncation must be >= the grid step");
  if (n_paths < 1)
    throw std::invalid_argument("simulate_moving_average: n_paths >= 1");
  const int m_trunc = static_cast<int>(std::llround(truncation / h));
  const int count = grid.count;
  const int n = spec.n();
  const int taps = m_trunc + count - 1;  // kernel values at midpoints
  const int len = m_trunc + count - 1;   // Wiener increments

  std::vector<double> g(taps);
  const double sqrt_h = std::sqrt(h);
  for (int q = 0; q < taps; ++q) g[q] = spec.scalar_eval((q + 0.5) * h) * sqrt_h;

  const std::size_t P = next_pow2(static_cast<std::size_t>(taps + len));
  std::vector<std::complex<double>> gf(P, 0.0);
  for (int q = 0; q < taps; ++q) gf[q] = g[q];
  fft_radix2(gf, -1);

  GaussianEnsemble ens;
  ens.grid = grid;
  ens.n = n;
  ens.master_seed = master_seed;
  ens.method = SampleMethod::moving_average;
  ens.truncation = m_trunc * h;
  ens.truncation_tail = spec.tail_energy(m_trunc * h);
  ens.paths.resize(n_paths);

  parallel_for(n_paths, threads, [&](int p) {
    GaussianRng rng(ens.path_seed(p));
    Eigen::MatrixXd out(count, n);
    std::vector<std::complex<double>> xf(P);
    for (int c = 0; c < n; ++c) {
      std::fill(xf.begin(), xf.end(), std::complex<double>(0.0, 0.0));
      for (int i = 0; i < len; ++i) xf[i] = rng.normal();
      fft_radix2(xf, -1);
      for (std::size_t k = 0; k < P; ++k) xf[k] *= gf[k];
      fft_radix2(xf, +1);
      const double inv = 1.0 / static_cast<double>(P);
      // y_j picks up convolution slot m_trunc + j - 1
      for (int j = 0; j < count; ++j)
        out(j, c) = xf[static_cast<std::size_t>(m_trunc + j - 1)].real() * inv;
    }
    ens.paths[p] = std::move(out);
  });
  return ens;
}

}  // namespace vlab
