#include "vlab/roughlift.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "vlab/observable.hpp"
#include "vlab/sampler.hpp"

using namespace vlab;

namespace {

ScaledFunctionalPath make_path(const PathGrid& grid,
                               const std::function<Eigen::VectorXd(double)>& x) {
  ScaledFunctionalPath p;
  p.epsilon = 1.0;
  p.out_grid = grid;
  const int N = static_cast<int>(x(0.0).size());
  p.values.resize(grid.count, N);
  for (int k = 0; k < grid.count; ++k)
    p.values.row(k) = x(grid.time(k)).transpose();
  return p;
}

}  // namespace

TEST_CASE("scaled_path basics") {
  const double eps = 0.01, h_fast = 0.5;
  const auto out = PathGrid::make(0.0, 1.0, 0.1);
  const long long m = 201;  // covers [0, 100]

  SUBCASE("zero observable gives the zero path") {
    auto p = scaled_path(Eigen::MatrixXd::Zero(m, 2), h_fast, eps, out);
    CHECK(p.values.norm() == 0.0);
  }
  SUBCASE("constant observable integrates exactly") {
    auto p = scaled_path(Eigen::MatrixXd::Ones(m, 1), h_fast, eps, out);
    for (int k = 0; k < out.count; ++k)
      CHECK(p.values(k, 0) ==
            doctest::Approx(out.time(k) / std::sqrt(eps)).epsilon(1e-13));
  }
  SUBCASE("linearity in the observable values") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd g1(m, 1), g2(m, 1);
    for (long long j = 0; j < m; ++j) {
      g1(j, 0) = nd(rng);
      g2(j, 0) = nd(rng);
    }
    auto pa = scaled_path(2.0 * g1 - 3.0 * g2, h_fast, eps, out);
    auto p1 = scaled_path(g1, h_fast, eps, out);
    auto p2 = scaled_path(g2, h_fast, eps, out);
    CHECK((pa.values - 2.0 * p1.values + 3.0 * p2.values).norm() <= 1e-12);
  }
  SUBCASE("grid mismatch throws") {
    // out time 0.1 -> fast time 10, not a multiple of step 0.3
    CHECK_THROWS_AS(scaled_path(Eigen::MatrixXd::Zero(m, 1), 0.3, eps, out),
                    std::invalid_argument);
    // fast grid too short for T/eps = 100
    CHECK_THROWS_AS(scaled_path(Eigen::MatrixXd::Zero(100, 1), h_fast, eps, out),
                    std::invalid_argument);
  }
}

TEST_CASE("discrete lift closed forms") {
  SUBCASE("constant path has zero area") {
    auto grid = PathGrid::make(0.0, 1.0, 0.1);
    auto p = make_path(grid, [](double) { return Eigen::Vector2d(1.0, -2.0); });
    auto lift = lift_discrete(p);
    for (const auto& a : lift.area0) CHECK(a.norm() == 0.0);
  }
  SUBCASE("linear path left-Riemann area") {
    const double h = 0.05;
    auto grid = PathGrid::make(0.0, 1.0, h);
    Eigen::Vector2d v(0.7, -1.3);
    auto p = make_path(grid, [&](double t) { return Eigen::Vector2d(v * t); });
    auto lift = lift_discrete(p);
    for (auto [si, ti] : {std::pair{0, 20}, {4, 16}, {7, 8}}) {
      const double span = h * (ti - si);
      const Eigen::MatrixXd expected =
          v * v.transpose() * span * (span - h) / 2.0;
      CHECK((lift.area(si, ti) - expected).norm() <= 1e-12);
    }
  }
  SUBCASE("scalar symmetric-part identity") {
    auto grid = PathGrid::make(0.0, 1.0, 0.125);
    auto p = make_path(grid, [](double t) {
      return Eigen::VectorXd::Constant(1, std::sin(3.0 * t) + t * t);
    });
    auto lift = lift_discrete(p);
    for (auto [si, ti] : {std::pair{0, 8}, {2, 6}}) {
      double sq = 0.0;
      for (int j = si; j < ti; ++j) {
        const double d = p.values(j + 1, 0) - p.values(j, 0);
        sq += d * d;
      }
      const double inc = p.values(ti, 0) - p.values(si, 0);
      CHECK(lift.area(si, ti)(0, 0) ==
            doctest::Approx(0.5 * inc * inc - 0.5 * sq).epsilon(1e-12));
    }
  }
}

TEST_CASE("Chen relation is exact for discrete lifts") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  auto grid = PathGrid::make(0.0, 1.0, 0.01);
  double scale2 = 0.0;
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    ScaledFunctionalPath p;
    p.epsilon = 1.0;
    p.out_grid = grid;
    p.values.resize(grid.count, 3);
    p.values.row(0).setZero();
    for (int k = 1; k < grid.count; ++k)
      for (int c = 0; c < 3; ++c)
        p.values(k, c) = p.values(k - 1, c) + 0.1 * nd(rng);
    auto lift = lift_discrete(p);
    const double ps = p.values.cwiseAbs().maxCoeff();
    scale2 = std::max(scale2, ps * ps);
    std::uniform_int_distribution<int> pick(0, grid.count - 1);
    for (int trial = 0; trial < 100; ++trial) {
      int a = pick(rng), b = pick(rng), c = pick(rng);
      if (a > b) std::swap(a, b);
      if (b > c) std::swap(b, c);
      if (a > b) std::swap(a, b);
      worst = std::max(worst,
                       chen_defect(lift, a, b, c).cwiseAbs().maxCoeff());
    }
    CHECK(chen_defect(lift, 5, 5, 70).norm() == 0.0);
  }
  CHECK(worst <= 1e-12 * scale2);

  SUBCASE("corrupted area is flagged by a nonzero raw defect") {
    ScaledFunctionalPath p;
    p.epsilon = 1.0;
    p.out_grid = PathGrid::make(0.0, 1.0, 0.25);
    p.values.resize(5, 2);
    for (int k = 0; k < 5; ++k) p.values.row(k) << 0.3 * k, 0.1 * k * k;
    auto lift = lift_discrete(p);
    Eigen::MatrixXd a_st = lift.area(0, 3);
    a_st(0, 1) += 0.5;
    CHECK(chen_defect_raw(a_st, lift.area(0, 2), lift.area(2, 3),
                          p.increment(0, 2), p.increment(2, 3))
              .cwiseAbs()
              .maxCoeff() > 0.1);
    // uncorrupted raw areas pass
    CHECK(chen_defect_raw(lift.area(0, 3), lift.area(0, 2), lift.area(2, 3),
                          p.increment(0, 2), p.increment(2, 3))
              .cwiseAbs()
              .maxCoeff() <= 1e-14);
  }
}

TEST_CASE("Holder seminorms") {
  auto grid = PathGrid::make(0.0, 1.0, 0.01);
  SUBCASE("zero path") {
    auto p = make_path(grid, [](double) { return Eigen::VectorXd::Zero(2); });
    CHECK(holder_seminorm(p, 0.5) == 0.0);
    CHECK(two_param_holder(lift_discrete(p), 1.0) == 0.0);
  }
  SUBCASE("linear path attains |v| at full span for gamma = 1/2") {
    Eigen::Vector2d v(3.0, -4.0);  // |v| = 5
    auto p = make_path(grid, [&](double t) { return Eigen::Vector2d(v * t); });
    CHECK(holder_seminorm(p, 0.5) == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("homogeneity") {
    auto p = make_path(grid, [](double t) {
      return Eigen::VectorXd::Constant(1, std::sin(5.0 * t));
    });
    auto q = p;
    q.values *= -2.5;
    CHECK(holder_seminorm(q, 0.3) ==
          doctest::Approx(2.5 * holder_seminorm(p, 0.3)).epsilon(1e-12));
  }
  SUBCASE("dyadic subsample above 4096 nodes stays within the exact bounds") {
    auto big = PathGrid::make(0.0, 1.0, 1.0 / 8192.0);
    Eigen::Vector2d v(1.0, 2.0);
    auto p = make_path(big, [&](double t) { return Eigen::Vector2d(v * t); });
    // linear path: the sup lives at the full span, which the subsample includes
    CHECK(holder_seminorm(p, 0.5) == doctest::Approx(v.norm()).epsilon(1e-12));
  }
  SUBCASE("parameter validation") {
    auto p = make_path(grid, [](double) { return Eigen::VectorXd::Zero(1); });
    CHECK_THROWS_AS(holder_seminorm(p, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(two_param_holder(lift_discrete(p), 2.5),
                    std::invalid_argument);
  }
}

TEST_CASE("refinement consistency of the lift on a smooth path") {
  // area from step h and from step h/2 differ by O(h)
  auto x = [](double t) { return Eigen::Vector2d(std::sin(t), std::cos(2.0 * t)); };
  std::vector<double> diffs, steps;
  double prev = HUGE_VAL;
  Eigen::MatrixXd prev_area;
  for (int r = 0; r <= 4; ++r) {
    const double h = 0.1 / (1 << r);
    auto grid = PathGrid::make(0.0, 2.0, h);
    auto lift = lift_discrete(make_path(grid, x));
    const Eigen::MatrixXd a = lift.area0.back();
    if (r > 0) {
      diffs.push_back((a - prev_area).norm());
      steps.push_back(h);
    }
    prev_area = a;
    (void)prev;
  }
  // log-log slope of the successive differences vs step
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(diffs.size());
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(steps[i]), ly = std::log(diffs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope >= 0.9);
}

TEST_CASE("scaled increments stay bounded across epsilon (moment diagnostic)") {
  // L4 moment of |X_st| / |t-s|^{1/2} over an (s,t) grid, for
  // eps in {1e-1, 1e-2, 1e-3}: bounded, with log-bound flat in log eps.
  auto kernel = KernelSpec::exp_ou(1.0, true);
  auto cov = CovarianceModel::from_kernel(kernel);
  const int n_paths = 200;
  std::vector<double> bounds;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const double h_fast = 0.5;
    auto fast_grid = PathGrid::make(0.0, 1.0 / eps, h_fast);
    auto ens = simulate_stationary(cov, fast_grid, n_paths, 99, SampleMethod::circulant, 4);
    auto out = PathGrid::make(0.0, 1.0, 0.05);
    double bound = 0.0;
    std::vector<ScaledFunctionalPath> paths;
    for (int ip = 0; ip < n_paths; ++ip)
      paths.push_back(scaled_path(ens.paths[ip], h_fast, eps, out));
    for (int si = 0; si < out.count; ++si)
      for (int ti = si + 1; ti < out.count; ++ti) {
        double m4 = 0.0;
        for (const auto& p : paths) {
          const double d = p.increment(si, ti).norm();
          m4 += d * d * d * d;
        }
        m4 = std::pow(m4 / n_paths, 0.25);
        bound = std::max(bound, m4 / std::sqrt(out.step * (ti - si)));
      }
    bounds.push_back(bound);
  }
  // slope of log bound against log eps within +-0.1 of zero
  const double slope = (std::log(bounds[2]) - std::log(bounds[0])) /
                       (std::log(1e-3) - std::log(1e-1));
  CHECK(std::abs(slope) <= 0.1);
  for (double b : bounds) CHECK(b < 10.0);
}

TEST_CASE("lift csv export shape") {
  auto grid = PathGrid::make(0.0, 1.0, 0.5);
  auto p = make_path(grid, [](double t) { return Eigen::Vector2d(t, t * t); });
  auto lift = lift_discrete(p);
  std::ostringstream os;
  write_lift_csv(lift, os);
  const std::string s = os.str();
  CHECK(s.substr(0, s.find('\n')) == "t,X1,X2,A1_1,A1_2,A2_1,A2_2");
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);  // header + 3 rows
}
