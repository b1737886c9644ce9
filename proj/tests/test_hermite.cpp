#include "vlab/hermite.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "vlab/quad.hpp"

using namespace vlab;

TEST_CASE("hermite_1d values and recurrence identities") {
  CHECK(hermite_1d(0, 1.7) == 1.0);
  CHECK(hermite_1d(1, 1.7) == doctest::Approx(1.7));
  CHECK(hermite_1d(2, 2.0) == doctest::Approx(3.0));   // x^2 - 1
  CHECK(hermite_1d(3, 1.0) == doctest::Approx(-2.0));  // x^3 - 3x
  CHECK(hermite_1d(4, 0.0) == doctest::Approx(3.0));   // x^4 - 6x^2 + 3
  CHECK_THROWS_AS(hermite_1d(-1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(hermite_1d(61, 0.0), std::invalid_argument);
}

TEST_CASE("hermite orthogonality under Gauss-Hermite") {
  auto rule = gauss_hermite(40);
  for (int m = 0; m <= 6; ++m) {
    for (int n = 0; n <= 6; ++n) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q)
        s += rule.weights[q] * hermite_1d(m, rule.nodes[q]) *
             hermite_1d(n, rule.nodes[q]);
      double fac = 1.0;
      for (int k = 2; k <= m; ++k) fac *= k;
      const double target = (m == n) ? fac : 0.0;
      CHECK(s == doctest::Approx(target).epsilon(1e-8).scale(fac));
    }
  }
}

TEST_CASE("multi-index order, factorial and enumeration") {
  MultiIndex l{3, 0, 2};
  CHECK(l.order() == 5);
  CHECK(l.factorial() == 12);
  CHECK_THROWS_AS((MultiIndex{21}).factorial(), std::overflow_error);
  auto idx = multi_indices_up_to(2, 3);
  CHECK(idx.size() == 10);  // C(3+2, 2)
  for (const auto& i : idx) CHECK(i.order() <= 3);
}

TEST_CASE("normalizer on diag(4,1)") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 4.0, 0.0, 0.0, 1.0;
  auto nm = normalize_covariance(sigma, 2.0);
  CHECK(nm.rank() == 2);
  CHECK(nm.D(0) == doctest::Approx(4.0));
  CHECK(nm.D(1) == doctest::Approx(1.0));
  CHECK(nm.theta_hat == doctest::Approx(2.0));
  Eigen::VectorXd y(2);
  y << 2.0, -3.0;
  Eigen::VectorXd z = nm.normalize(y);
  CHECK(nm.denormalize(z).isApprox(y, 1e-12));
  // z has unit marginals: z = D^{-1/2} O^T y
  CHECK(std::abs(z(0)) == doctest::Approx(1.0));
  CHECK(std::abs(z(1)) == doctest::Approx(3.0));
}

TEST_CASE("normalizer drops the null direction of a rank-1 matrix") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 1.0, 1.0, 1.0;
  auto nm = normalize_covariance(sigma);
  CHECK(nm.rank() == 1);
  CHECK(nm.D(0) == doctest::Approx(2.0));
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalue -1
  CHECK_THROWS_AS(normalize_covariance(bad), std::invalid_argument);
}

TEST_CASE("expansion of the generating function has c_l = a^l / l!") {
  // exp(a x - a^2/2) = sum_l a^l H_l(x) / l!
  const double a = 0.6;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(1, 1);
  auto exp1 = expand(
      [a](const Eigen::VectorXd& y) {
        return std::exp(a * y(0) - 0.5 * a * a);
      },
      sigma, 8);
  double fac = 1.0;
  for (int m = 0; m <= 8; ++m) {
    if (m > 0) fac *= m;
    CHECK(exp1.coeff(MultiIndex{m}) ==
          doctest::Approx(std::pow(a, m) / fac).epsilon(1e-8).scale(1.0));
  }
  CHECK_FALSE(exp1.accuracy_warning);
  CHECK(exp1.rank() == 0);
}

TEST_CASE("expansion respects a non-identity covariance") {
  // G(y) = y^2 with y ~ N(0, 4): y = 2z, G = 4 z^2 = 4 H_2(z) + 4 H_0(z)
  Eigen::MatrixXd sigma = 4.0 * Eigen::MatrixXd::Identity(1, 1);
  auto e = expand([](const Eigen::VectorXd& y) { return y(0) * y(0); }, sigma, 4);
  CHECK(e.coeff(MultiIndex{0}) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(e.coeff(MultiIndex{2}) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(e.coeff(MultiIndex{1}) == doctest::Approx(0.0).scale(1.0));
  CHECK(e.coeff(MultiIndex{4}) == doctest::Approx(0.0).scale(1.0));
  // ||G||^2 = E y^4 = 3 * 16; Parseval: 16 * 0! + 16 * 2! = 48, residual 0
  CHECK(e.l2_norm2 == doctest::Approx(48.0).epsilon(1e-10));
  CHECK(e.residual == doctest::Approx(0.0).scale(48.0).epsilon(1e-6));
  CHECK(e.rank() == 0);
}

TEST_CASE("bivariate expansion and reconstruction") {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(2, 2);
  auto G = [](const Eigen::VectorXd& y) {
    return std::sin(y(0)) * (y(1) * y(1) - 1.0) + 0.3 * y(0) * y(1);
  };
  auto e = expand(G, sigma, 9);
  // sin has only odd coefficients; y1^2 - 1 = H_2
  CHECK(e.coeff(MultiIndex{1, 2}) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-8));
  CHECK(e.coeff(MultiIndex{1, 1}) == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(e.coeff(MultiIndex{2, 2}) == doctest::Approx(0.0).scale(1.0));
  CHECK(e.rank() == 2);
  // Parseval residual: the leading excluded term is (9,2) with mass
  // 2 e^{-1} / 9! ~ 2e-6, so the residual is small but nonzero
  CHECK(e.residual <= 1e-5 * e.l2_norm2);
  CHECK(e.residual >= 1e-7 * e.l2_norm2);
  // pointwise reconstruction at random standard-normal points, against the
  // analytically truncated series: sin = e^{-1/2} sum (-1)^k H_{2k+1}/(2k+1)!
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd z(2);
    z << nd(rng), nd(rng);
    double truth = 0.3 * z(0) * z(1);
    double fac = 1.0;
    for (int k = 0; 2 * k + 3 <= 9; ++k) {
      if (k > 0) fac *= (2 * k) * (2 * k + 1);
      truth += (k % 2 ? -1.0 : 1.0) * std::exp(-0.5) / fac *
               hermite_1d(2 * k + 1, z(0)) * (z(1) * z(1) - 1.0);
    }
    CHECK(e.evaluate(z) == doctest::Approx(truth).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("sparse expansion above rank 4 matches known coefficients") {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(5, 5);
  auto G = [](const Eigen::VectorXd& y) {
    return y(0) * y(4) + 2.0 * (y(2) * y(2) - 1.0);
  };
  auto e = expand(G, sigma, 3);
  CHECK(e.coeff(MultiIndex{1, 0, 0, 0, 1}) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.coeff(MultiIndex{0, 0, 2, 0, 0}) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(e.coeff(MultiIndex{0, 0, 0, 0, 0}) == doctest::Approx(0.0).scale(1.0));
  CHECK(e.rank() == 2);
}

TEST_CASE("chaos decay sum for a finite expansion") {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(1, 1);
  auto e = expand([](const Eigen::VectorXd& y) { return y(0) * y(0) - 1.0; },
                  sigma, 6);
  // single term c_2 = 1: sum = (p-1)^1 * sqrt(2)
  auto s = chaos_decay_sum(e, 3.0);
  CHECK(s.value == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-7));
  CHECK_THROWS_AS(chaos_decay_sum(e, 1.0), std::invalid_argument);
}

TEST_CASE("pairing enumeration") {
  SUBCASE("odd total order has no pairings") {
    CHECK(enumerate_pairings(MultiIndex{2, 1}).empty());
  }
  SUBCASE("self-loops are excluded") {
    CHECK(enumerate_pairings(MultiIndex{2}).empty());
  }
  SUBCASE("l = (1,1) has one matching") {
    auto g = enumerate_pairings(MultiIndex{1, 1});
    REQUIRE(g.size() == 1);
    CHECK(g[0].multiplicity == 1);
    CHECK(g[0].edges(0, 1) == 1);
  }
  SUBCASE("l = (2,2) has multiplicity 2 on the double edge") {
    auto g = enumerate_pairings(MultiIndex{2, 2});
    REQUIRE(g.size() == 1);
    CHECK(g[0].edges(0, 1) == 2);
    CHECK(g[0].multiplicity == 2);
  }
  SUBCASE("l = (2,1,1) has two matchings on one multigraph") {
    auto g = enumerate_pairings(MultiIndex{2, 1, 1});
    std::uint64_t total = 0;
    for (const auto& x : g) total += x.multiplicity;
    CHECK(total == 2);
  }
  SUBCASE("total multiplicity bound sqrt(l!) (N-1)^{|l|/2}") {
    for (const auto& l :
         {MultiIndex{1, 1}, MultiIndex{2, 2}, MultiIndex{2, 1, 1},
          MultiIndex{3, 3}, MultiIndex{2, 2, 2}, MultiIndex{4, 2, 2}}) {
      double total = 0;
      for (const auto& x : enumerate_pairings(l)) total += x.multiplicity;
      const double bound = std::sqrt(static_cast<double>(l.factorial())) *
                           std::pow(l.dim() - 1.0, l.order() / 2.0);
      CHECK(total <= bound * (1.0 + 1e-12));
    }
  }
  SUBCASE("|l| > 16 throws") {
    CHECK_THROWS_AS(enumerate_pairings(MultiIndex{9, 9}), std::length_error);
  }
}

TEST_CASE("diagram expectation reproduces E[H_m(X) H_m(Y)] = m! rho^m") {
  for (double rho : {-0.7, 0.0, 0.4}) {
    Eigen::MatrixXd R(2, 2);
    R << 1.0, rho, rho, 1.0;
    double fac = 1.0;
    for (int m = 1; m <= 5; ++m) {
      fac *= m;
      const double d = diagram_expectation(MultiIndex{m, m}, R);
      CHECK(d == doctest::Approx(fac * std::pow(rho, m))
                     .epsilon(1e-12)
                     .scale(fac));
    }
  }
}

TEST_CASE("diagram expectation: odd order and asymmetric input") {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2, 2);
  CHECK(diagram_expectation(MultiIndex{2, 1}, R) == 0.0);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.5, 0.2, 1.0;
  CHECK_THROWS_AS(diagram_expectation(MultiIndex{1, 1}, bad),
                  std::invalid_argument);
}

TEST_CASE("cross hermite covariance") {
  const int n = 2;
  const double rho = 0.35;
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  // same-component correlation rho across the lag, none across components
  R(0, 2) = R(2, 0) = rho;
  R(1, 3) = R(3, 1) = rho;
  SUBCASE("different orders vanish") {
    CHECK(cross_hermite_covariance(MultiIndex{1, 0}, MultiIndex{1, 1}, R) == 0.0);
  }
  SUBCASE("diagonal product indices give l! rho^{|l|}") {
    CHECK(cross_hermite_covariance(MultiIndex{2, 1}, MultiIndex{2, 1}, R) ==
          doctest::Approx(2.0 * std::pow(rho, 3)).epsilon(1e-12));
  }
  SUBCASE("mismatched components decorrelate") {
    CHECK(cross_hermite_covariance(MultiIndex{1, 0}, MultiIndex{0, 1}, R) ==
          doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("identity-block requirement enforced") {
    Eigen::MatrixXd bad = R;
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(
        cross_hermite_covariance(MultiIndex{1, 0}, MultiIndex{1, 0}, bad),
        std::invalid_argument);
  }
}

TEST_CASE("conditional hermite norm closed forms for exp_ou") {
  auto k = KernelSpec::exp_ou(1.0, true);
  for (double s : {0.0, 0.5, 2.0}) {
    // a = e^{-s}; ||E[H_1|F]|| = a, ||E[H_2|F]|| = sqrt(2) a^2
    CHECK(conditional_hermite_norm(MultiIndex{1}, s, k) ==
          doctest::Approx(std::exp(-s)).epsilon(1e-10));
    CHECK(conditional_hermite_norm(MultiIndex{2}, s, k) ==
          doctest::Approx(std::sqrt(2.0) * std::exp(-2.0 * s)).epsilon(1e-10));
  }
  CHECK(conditional_hermite_norm(MultiIndex{0, 0}, 1.0, k) == 1.0);
  CHECK_THROWS_AS(conditional_hermite_norm(MultiIndex{1}, -1.0, k),
                  std::invalid_argument);
}

TEST_CASE("conditional hermite norm obeys the a^{|l|} sqrt(l!) (2n-1)^{|l|/2} bound") {
  auto k = KernelSpec::fbm_increment(0.3, 2);
  for (double s : {0.5, 3.0}) {
    const double a = std::sqrt(k.tail_energy(s) / k.variance());
    for (const auto& l : {MultiIndex{1, 1}, MultiIndex{2, 0}, MultiIndex{2, 2}}) {
      const double norm = conditional_hermite_norm(l, s, k);
      const double bound = std::pow(a, l.order()) *
                           std::sqrt(static_cast<double>(l.factorial())) *
                           std::pow(2.0 * l.dim() - 1.0, l.order() / 2.0);
      CHECK(norm <= bound * (1.0 + 1e-12));
      CHECK(norm >= 0.0);
    }
  }
}

TEST_CASE("conditional decay integral") {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(1, 1);
  SUBCASE("H_1 against exp_ou integrates to 1") {
    auto e = expand([](const Eigen::VectorXd& y) { return y(0); }, sigma, 4);
    auto k = KernelSpec::exp_ou(1.0, true);
    // exponential tails satisfy any power bound; pin a decay with rank*beta > 2
    k.set_decay(3.0, 2.0);
    const std::vector<double> probe{0.5, 1.0, 3.0, 10.0};
    REQUIRE(k.tail_energy_check(probe).passes);
    auto d = conditional_decay_integral(e, k, 40.0);
    CHECK(d.finite);
    CHECK(d.value == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("rank * beta <= 2 reports divergence") {
    auto e = expand([](const Eigen::VectorXd& y) { return y(0); }, sigma, 4);
    auto k = KernelSpec::fbm_increment(0.3);  // beta = 0.7, rank 1
    auto d = conditional_decay_integral(e, k, 20.0);
    CHECK_FALSE(d.finite);
    CHECK(d.value > 0.0);
  }
  SUBCASE("rank 2 with beta > 1 converges; the mean never decays") {
    auto k = KernelSpec::fbm_increment(0.25);  // beta = 0.75, rank 2 => 1.5 < 2
    auto e2 = expand([](const Eigen::VectorXd& y) { return y(0) * y(0) - 1.0; },
                     sigma, 4);
    CHECK_FALSE(conditional_decay_integral(e2, k, 20.0).finite);
    auto ke = KernelSpec::exp_ou(2.0, true);
    ke.set_decay(2.0, 1.0);  // rank 2 * beta 2 > 2
    CHECK(conditional_decay_integral(e2, ke, 40.0).finite);
    auto e3 = expand([](const Eigen::VectorXd& y) { return 1.0 + y(0); }, sigma, 4);
    CHECK_FALSE(conditional_decay_integral(e3, ke, 40.0).finite);
  }
}
