#include "vlab/limits.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "vlab/stats.hpp"

using namespace vlab;

namespace {

std::vector<HermiteExpansion> expand_all(const std::vector<Observable>& gs,
                                         const KernelSpec& kernel, int cap = 6) {
  const double var = kernel.variance();
  Eigen::MatrixXd sigma =
      var * Eigen::MatrixXd::Identity(kernel.n(), kernel.n());
  std::vector<HermiteExpansion> out;
  for (const auto& g : gs)
    out.push_back(expand([&g](const Eigen::VectorXd& y) { return g(y); },
                         sigma, cap));
  return out;
}

std::vector<double> dense_lags(double horizon, double step) {
  std::vector<double> lags;
  for (double r = 0.0; r <= horizon + 1e-12; r += step) lags.push_back(r);
  return lags;
}

}  // namespace

TEST_CASE("stats helpers") {
  SUBCASE("pairwise sum matches sequential") {
    std::vector<double> v;
    for (int i = 1; i <= 1000; ++i) v.push_back(1.0 / i);
    double seq = 0.0;
    for (double x : v) seq += x;
    CHECK(pairwise_sum(v) == doctest::Approx(seq).epsilon(1e-14));
  }
  SUBCASE("KS on its own null") {
    GaussianRng rng(5);
    std::vector<double> s(4000);
    for (auto& x : s) x = rng.normal();
    const double d = ks_statistic(s, [](double x) { return normal_cdf(x); });
    const double p = kolmogorov_pvalue(std::sqrt(4000.0) * d);
    CHECK(p > 1e-3);
    CHECK(kolmogorov_pvalue(0.0) == 1.0);
    CHECK(kolmogorov_pvalue(3.0) < 1e-3);
  }
  SUBCASE("energy distance separates shifted samples") {
    GaussianRng rng(6);
    Eigen::MatrixXd x(150, 2), y(150, 2), y2(150, 2);
    for (int i = 0; i < 150; ++i)
      for (int j = 0; j < 2; ++j) {
        x(i, j) = rng.normal();
        y(i, j) = rng.normal();
        y2(i, j) = rng.normal() + 2.0;
      }
    auto null_test = energy_permutation_test(x, y, 200, 77);
    auto alt_test = energy_permutation_test(x, y2, 200, 77);
    CHECK(null_test.p_value > 0.01);
    CHECK(alt_test.p_value <= 0.01);
    CHECK(alt_test.statistic > null_test.statistic);
  }
}

TEST_CASE("lag correlation estimators agree with closed forms") {
  auto kernel = KernelSpec::exp_ou(1.0, true);
  auto cov = CovarianceModel::from_kernel(kernel);
  std::vector<Observable> gs{Observable::hermite(MultiIndex{1}),
                             Observable::hermite(MultiIndex{2})};
  auto exps = expand_all(gs, kernel);
  auto grid = PathGrid::make(0.0, 50.0, 0.1);
  auto ens = simulate_stationary(cov, grid, 300, 2024, SampleMethod::circulant, 4);
  auto table = lag_correlation(gs, exps, ens, kernel,
                               {0.0, 0.5, 1.0, 2.0});
  REQUIRE(table.lags.size() == 4);
  for (std::size_t q = 0; q < table.lags.size(); ++q) {
    const double r = table.lags[q];
    // H1 x H1 -> e^{-r}; H2 x H2 -> 2 e^{-2r}; cross -> 0
    CHECK(table.analytic[q](0, 0) == doctest::Approx(std::exp(-r)).epsilon(1e-10));
    CHECK(table.analytic[q](1, 1) ==
          doctest::Approx(2.0 * std::exp(-2.0 * r)).epsilon(1e-10));
    CHECK(table.analytic[q](0, 1) == doctest::Approx(0.0).scale(1.0));
  }
  CHECK(table.consistent);
  SUBCASE("lag validation") {
    CHECK_THROWS_AS(lag_correlation(gs, exps, ens, kernel, {0.0, 1e9}),
                    std::invalid_argument);
    CHECK_THROWS_AS(lag_correlation(gs, exps, ens, kernel, {0.05 / 2}),
                    std::invalid_argument);
  }
}

TEST_CASE("limit matrices closed forms and algebra") {
  auto kernel = KernelSpec::exp_ou(1.0, true);
  // exponential tails admit any power bound; pin beta = 2 so rank-1
  // observables clear the m*beta > 1 threshold
  kernel.set_decay(2.0, 1.0);
  const std::vector<double> probe{0.0, 0.5, 1.0, 2.0, 5.0, 20.0};
  REQUIRE(kernel.tail_energy_check(probe).passes);
  std::vector<Observable> gs{Observable::hermite(MultiIndex{1}),
                             Observable::hermite(MultiIndex{2})};
  auto exps = expand_all(gs, kernel);

  // analytic-only table, no ensemble needed
  LagCorrelationTable table;
  table.lags = dense_lags(40.0, 0.02);
  for (double r : table.lags)
    table.analytic.push_back(analytic_lag_correlation(exps, kernel, r));
  auto lm = limit_matrices(table, exps, kernel, true);

  CHECK(lm.lambda(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(lm.lambda(1, 1) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(lm.lambda(0, 1) == doctest::Approx(0.0).scale(1.0));
  // algebra holds exactly by construction
  CHECK((lm.upsilon2 - lm.lambda - lm.lambda.transpose()).norm() == 0.0);
  CHECK((lm.xi + lm.xi.transpose()).norm() == 0.0);
  CHECK((lm.upsilon * lm.upsilon - lm.upsilon2).norm() <=
        1e-12 * lm.upsilon2.norm());
  CHECK(lm.upsilon2(0, 0) == doctest::Approx(2.0).epsilon(1e-4));
  CHECK_FALSE(lm.horizon_warning);
  CHECK(lm.tail_finite);
  // power-law remainder bound ~ ||G|| / horizon for m beta = 2; conservative
  // for the exponential truth but finite and small against Lambda = 1
  CHECK(lm.tail_bound < 0.05);

  SUBCASE("short horizon warns") {
    LagCorrelationTable short_table;
    short_table.lags = dense_lags(2.0, 0.02);
    for (double r : short_table.lags)
      short_table.analytic.push_back(analytic_lag_correlation(exps, kernel, r));
    CHECK(limit_matrices(short_table, exps, kernel, true).horizon_warning);
  }
  SUBCASE("slow decay marks the tail bound infinite") {
    auto rough = KernelSpec::fbm_increment(0.3);  // beta = 0.7
    std::vector<Observable> g1{Observable::hermite(MultiIndex{1})};
    auto e1 = expand_all(g1, rough);
    LagCorrelationTable t1;
    t1.lags = dense_lags(10.0, 0.1);
    for (double r : t1.lags)
      t1.analytic.push_back(analytic_lag_correlation(e1, rough, r));
    CHECK_FALSE(limit_matrices(t1, e1, rough, true).tail_finite);
  }
}

TEST_CASE("clt benchmark at desk scale") {
  auto kernel = KernelSpec::exp_ou(1.0, true);
  kernel.set_decay(2.0, 1.0);  // valid steeper nominal decay (see above)
  auto cov = CovarianceModel::from_kernel(kernel);
  std::vector<Observable> gs{Observable::hermite(MultiIndex{1}),
                             Observable::hermite(MultiIndex{2})};
  auto exps = expand_all(gs, kernel);

  LagCorrelationTable table;
  table.lags = dense_lags(40.0, 0.02);
  for (double r : table.lags)
    table.analytic.push_back(analytic_lag_correlation(exps, kernel, r));
  auto lm = limit_matrices(table, exps, kernel, true);

  const double eps = 1e-2, h_fast = 0.25;
  auto fast_grid = PathGrid::make(0.0, 1.0 / eps, h_fast);
  auto ens = simulate_stationary(cov, fast_grid, 600, 31337,
                                 SampleMethod::circulant, 4);
  auto out = PathGrid::make(0.0, 1.0, 0.05);
  std::vector<ScaledFunctionalPath> paths;
  for (int p = 0; p < ens.n_paths(); ++p) {
    Eigen::MatrixXd g(fast_grid.count, 2);
    for (int k = 0; k < fast_grid.count; ++k) {
      const Eigen::VectorXd y = ens.paths[p].row(k).transpose();
      g(k, 0) = gs[0](y);
      g(k, 1) = gs[1](y);
    }
    paths.push_back(scaled_path(g, h_fast, eps, out));
  }
  auto rep = clt_report(paths, {out.count - 1}, lm, exps, kernel);
  CHECK_FALSE(rep.regime_violation);
  CHECK_FALSE(rep.degenerate);
  CHECK(rep.min_ks_p >= 1e-3);
  CHECK(rep.pass);

  SUBCASE("zero observable is degenerate but passes trivially") {
    std::vector<ScaledFunctionalPath> zero_paths;
    for (int p = 0; p < 10; ++p) {
      ScaledFunctionalPath zp;
      zp.epsilon = eps;
      zp.out_grid = out;
      zp.values = Eigen::MatrixXd::Zero(out.count, 2);
      zero_paths.push_back(zp);
    }
    LimitMatrices zl = lm;
    zl.lambda.setZero();
    zl.upsilon2.setZero();
    zl.xi.setZero();
    zl.upsilon.setZero();
    auto zrep = clt_report(zero_paths, {out.count - 1}, zl, exps, kernel);
    CHECK(zrep.degenerate);
    for (const auto& row : zrep.rows)
      if (row.quantity.rfind("cov", 0) == 0) CHECK(row.estimate == 0.0);
  }
  SUBCASE("regime violation flag from slow decay") {
    auto rough = KernelSpec::fbm_increment(0.6);  // beta = 0.4, rank 2 -> 0.8
    std::vector<Observable> g2{Observable::hermite(MultiIndex{2})};
    auto e2 = expand_all(g2, rough);
    std::vector<ScaledFunctionalPath> dummy;
    for (int p = 0; p < 4; ++p) {
      ScaledFunctionalPath zp;
      zp.epsilon = 1.0;
      zp.out_grid = out;
      zp.values = Eigen::MatrixXd::Zero(out.count, 1);
      dummy.push_back(zp);
    }
    LimitMatrices l1;
    l1.lambda = l1.upsilon2 = l1.xi = l1.upsilon = Eigen::MatrixXd::Zero(1, 1);
    auto vrep = clt_report(dummy, {1}, l1, e2, rough);
    CHECK(vrep.regime_violation);
  }
}

TEST_CASE("area report recovers the Ito drift") {
  auto kernel = KernelSpec::exp_ou(1.0, true);
  auto cov = CovarianceModel::from_kernel(kernel);
  std::vector<Observable> gs{Observable::hermite(MultiIndex{1}),
                             Observable::hermite(MultiIndex{2})};
  auto exps = expand_all(gs, kernel);
  LagCorrelationTable table;
  table.lags = dense_lags(40.0, 0.02);
  for (double r : table.lags)
    table.analytic.push_back(analytic_lag_correlation(exps, kernel, r));
  auto lm = limit_matrices(table, exps, kernel, true);

  // lift accumulated at fast-grid resolution (out step = eps * h_fast)
  const double eps = 1e-2, h_fast = 0.05;
  auto fast_grid = PathGrid::make(0.0, 1.0 / eps, h_fast);
  auto ens = simulate_stationary(cov, fast_grid, 400, 4242,
                                 SampleMethod::circulant, 4);
  auto out = PathGrid::make(0.0, 1.0, eps * h_fast);
  std::vector<RoughLift> lifts;
  for (int p = 0; p < ens.n_paths(); ++p) {
    Eigen::MatrixXd g(fast_grid.count, 2);
    for (int k = 0; k < fast_grid.count; ++k) {
      const Eigen::VectorXd y = ens.paths[p].row(k).transpose();
      g(k, 0) = gs[0](y);
      g(k, 1) = gs[1](y);
    }
    lifts.push_back(lift_discrete(scaled_path(g, h_fast, eps, out)));
  }
  auto rep = area_report(lifts, out.count - 1, lm);
  // diagonal means near t*Lambda = 1, cross entries near 0, all within 4 SE
  CHECK(rep.pass);
  bool saw_diag = false;
  for (const auto& row : rep.rows)
    if (row.quantity == "area_mean[0,0]") {
      saw_diag = true;
      CHECK(row.target == doctest::Approx(1.0).epsilon(1e-3));
      CHECK(std::abs(row.estimate - 1.0) <= 4.0 * row.se + 0.05);
    }
  CHECK(saw_diag);

  SUBCASE("scalar lift has exactly zero antisymmetric part") {
    std::vector<RoughLift> ones;
    for (int p = 0; p < 8; ++p) {
      ScaledFunctionalPath sp;
      sp.epsilon = 1.0;
      sp.out_grid = PathGrid::make(0.0, 1.0, 0.25);
      sp.values.resize(5, 1);
      for (int k = 0; k < 5; ++k) sp.values(k, 0) = 0.1 * k * k + 0.01 * p;
      ones.push_back(lift_discrete(sp));
    }
    LimitMatrices l1;
    l1.lambda = Eigen::MatrixXd::Zero(1, 1);
    l1.upsilon2 = l1.xi = l1.upsilon = l1.lambda;
    auto srep = area_report(ones, 4, l1);
    for (const auto& row : srep.rows)
      if (row.quantity.rfind("area_antisym", 0) == 0) CHECK(row.estimate == 0.0);
  }
}

TEST_CASE("clt variance approaches the limit along epsilon") {
  auto kernel = KernelSpec::exp_ou(1.0, true);
  auto cov = CovarianceModel::from_kernel(kernel);
  Observable g = Observable::hermite(MultiIndex{1});
  const double h_fast = 0.25;
  std::vector<double> gaps, ses;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    auto fast_grid = PathGrid::make(0.0, 1.0 / eps, h_fast);
    auto ens = simulate_stationary(cov, fast_grid, 400, 777,
                                   SampleMethod::circulant, 4);
    auto out = PathGrid::make(0.0, 1.0, 0.25);
    std::vector<double> sq(ens.n_paths());
    for (int p = 0; p < ens.n_paths(); ++p) {
      Eigen::MatrixXd gv(fast_grid.count, 1);
      for (int k = 0; k < fast_grid.count; ++k)
        gv(k, 0) = g(ens.paths[p].row(k).transpose());
      auto sp = scaled_path(gv, h_fast, eps, out);
      sq[p] = sp.values(out.count - 1, 0) * sp.values(out.count - 1, 0);
    }
    gaps.push_back(std::abs(sample_mean(sq) - 2.0));
    ses.push_back(sample_se(sq));
  }
  // |Var - 2| decreasing along eps within 2 SE slack
  CHECK(gaps[1] <= gaps[0] + 2.0 * (ses[0] + ses[1]));
  CHECK(gaps[2] <= gaps[1] + 2.0 * (ses[1] + ses[2]));
  CHECK(gaps[2] <= 0.2);
}

TEST_CASE("report csv format") {
  std::vector<ReportRow> rows{{"alpha", 1.5, 0.5, 1.0, 1.0},
                              {"beta", 0.0, 0.0, 0.0, 0.0}};
  std::ostringstream os;
  write_report_csv(rows, os);
  const std::string s = os.str();
  CHECK(s.substr(0, s.find('\n')) == "quantity,estimate,se,target,z");
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
  CHECK(s.find("alpha,1.5,0.5,1,1") != std::string::npos);
}
