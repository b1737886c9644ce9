#include "vlab/sampler.hpp"

#include <cmath>

#include "doctest.h"
#include "vlab/rng.hpp"

using namespace vlab;

namespace {
PathGrid short_grid() { return PathGrid::make(0.0, 2.0, 0.1); }
}  // namespace

TEST_CASE("zero covariance gives identically zero paths") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::zero());
  auto ens = simulate_stationary(cov, short_grid(), 8, 42);
  for (const auto& p : ens.paths) CHECK(p.norm() == 0.0);
}

TEST_CASE("same seed twice gives bit-identical ensembles") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true));
  auto a = simulate_stationary(cov, short_grid(), 16, 12345);
  auto b = simulate_stationary(cov, short_grid(), 16, 12345);
  for (int i = 0; i < 16; ++i) CHECK(a.paths[i] == b.paths[i]);
}

TEST_CASE("thread count does not change the ensemble") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true));
  auto a = simulate_stationary(cov, short_grid(), 32, 7, SampleMethod::circulant, 1);
  auto b = simulate_stationary(cov, short_grid(), 32, 7, SampleMethod::circulant, 8);
  for (int i = 0; i < 32; ++i) CHECK(a.paths[i] == b.paths[i]);
}

TEST_CASE("circulant sampler reproduces the exp_ou law") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true));
  auto grid = PathGrid::make(0.0, 10.0, 1.0);
  const int P = 10000;
  auto ens = simulate_stationary(cov, grid, P, 2024);
  CHECK(ens.method == SampleMethod::circulant);

  Eigen::MatrixXd mean, se;
  SUBCASE("unit variance at lag 0") {
    ens.lag_covariance(0, mean, se);
    CHECK(std::abs(mean(0, 0) - 1.0) <= 4.0 * se(0, 0));
  }
  SUBCASE("lag-1 correlation near e^{-1}") {
    ens.lag_covariance(1, mean, se);
    CHECK(std::abs(mean(0, 0) - std::exp(-1.0)) <= 4.0 * se(0, 0));
  }
}

TEST_CASE("large ensemble moments at several lags") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true));
  auto grid = PathGrid::make(0.0, 1.0, 0.05);
  const int P = 100000;
  auto ens = simulate_stationary(cov, grid, P, 99, SampleMethod::circulant, 8);

  // empirical mean
  double m = 0.0;
  for (const auto& p : ens.paths) m += p.mean();
  m /= P;
  CHECK(std::abs(m) <= 4.0 / std::sqrt(static_cast<double>(P)));

  Eigen::MatrixXd mean, se;
  for (int lag : {0, 1, 10}) {
    ens.lag_covariance(lag, mean, se);
    const double target = std::exp(-lag * grid.step);
    CHECK(std::abs(mean(0, 0) - target) <= 4.0 * se(0, 0));
  }
}

TEST_CASE("two-component kernels give independent unit components") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true, 2));
  auto ens = simulate_stationary(cov, PathGrid::make(0.0, 5.0, 0.5), 20000, 31);
  Eigen::MatrixXd mean, se;
  ens.lag_covariance(0, mean, se);
  CHECK(std::abs(mean(0, 0) - 1.0) <= 4.0 * se(0, 0));
  CHECK(std::abs(mean(1, 1) - 1.0) <= 4.0 * se(1, 1));
  CHECK(std::abs(mean(0, 1)) <= 4.0 * se(0, 1));
}

TEST_CASE("fbm increment covariance is reproduced (rough kernel, H=0.3)") {
  auto spec = KernelSpec::fbm_increment(0.3);
  auto cov = CovarianceModel::from_kernel(spec);
  auto ens = simulate_stationary(cov, PathGrid::make(0.0, 8.0, 0.5), 20000, 5, SampleMethod::circulant, 8);
  Eigen::MatrixXd mean, se;
  for (int lag : {0, 2, 4}) {
    ens.lag_covariance(lag, mean, se);
    const double target = spec.scalar_covariance(lag * 0.5);
    CHECK(std::abs(mean(0, 0) - target) <= 4.0 * se(0, 0));
  }
}

TEST_CASE("forced dense Cholesky agrees with the law") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true));
  auto ens = simulate_stationary(cov, PathGrid::make(0.0, 3.0, 0.25), 20000, 88,
                                 SampleMethod::cholesky);
  CHECK(ens.method == SampleMethod::cholesky);
  Eigen::MatrixXd mean, se;
  ens.lag_covariance(1, mean, se);
  CHECK(std::abs(mean(0, 0) - std::exp(-0.25)) <= 4.0 * se(0, 0));
}

TEST_CASE("moving average sampler") {
  auto spec = KernelSpec::exp_ou(1.0);
  auto grid = PathGrid::make(0.0, 1.0, 0.01);

  SUBCASE("truncation below step is rejected") {
    CHECK_THROWS_AS(simulate_moving_average(spec, grid, 0.001, 4, 1),
                    std::invalid_argument);
  }
  SUBCASE("truncation report carries the closed-form tail") {
    auto ens = simulate_moving_average(spec, grid, 40.0, 2, 1);
    CHECK(ens.truncation_tail ==
          doctest::Approx(std::exp(-80.0) / 2.0).epsilon(1e-10));
    CHECK(ens.truncation_tail <= std::exp(-80.0) / 2.0 * (1 + 1e-9));
  }
  SUBCASE("zero kernel gives zero paths") {
    auto ens = simulate_moving_average(KernelSpec::zero(), grid, 40.0, 3, 9);
    for (const auto& p : ens.paths) CHECK(p.norm() == 0.0);
  }
  SUBCASE("empirical variance near 1/2") {
    auto ens = simulate_moving_average(spec, grid, 40.0, 4000, 77, 8);
    Eigen::MatrixXd mean, se;
    ens.lag_covariance(0, mean, se);
    CHECK(std::abs(mean(0, 0) - 0.5) <= 4.0 * se(0, 0));
  }
  SUBCASE("agrees with the exact sampler within combined error") {
    auto ens_ma = simulate_moving_average(spec, grid, 40.0, 4000, 101, 8);
    auto ens_ex = simulate_stationary(CovarianceModel::from_kernel(spec), grid,
                                      4000, 202, SampleMethod::circulant, 8);
    Eigen::MatrixXd m1, s1, m2, s2;
    for (int lag : {0, 5}) {
      ens_ma.lag_covariance(lag, m1, s1);
      ens_ex.lag_covariance(lag, m2, s2);
      const double tol = 4.0 * std::hypot(s1(0, 0), s2(0, 0)) +
                         ens_ma.truncation_tail;
      CHECK(std::abs(m1(0, 0) - m2(0, 0)) <= tol);
    }
  }
}

TEST_CASE("per-path seeds derive from the master seed via the mixer") {
  auto cov = CovarianceModel::from_kernel(KernelSpec::exp_ou(1.0, true));
  auto ens = simulate_stationary(cov, short_grid(), 4, 1234);
  CHECK(ens.path_seed(2) == mix64(1234, 2));
  StationarySampler sampler(cov, short_grid());
  CHECK(sampler.sample(mix64(1234, 2)) == ens.paths[2]);
}
