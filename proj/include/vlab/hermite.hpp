#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "vlab/kernel.hpp"

namespace vlab {

// Probabilists' Hermite polynomial H_m(x), 0 <= m <= 60.
double hermite_1d(int m, double x);

struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  MultiIndex(std::initializer_list<int> e) : entries(e) {}
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {}

  int dim() const { return static_cast<int>(entries.size()); }
  int order() const;                // |l|
  std::uint64_t factorial() const;  // l!, exact for |l| <= 20

  bool operator<(const MultiIndex& o) const { return entries < o.entries; }
  bool operator==(const MultiIndex& o) const { return entries == o.entries; }
};

double hermite_multi(const MultiIndex& l, const Eigen::VectorXd& x);

// All multi-indices of the given dimension with |l| <= cap, sorted.
std::vector<MultiIndex> multi_indices_up_to(int dim, int cap);

// Diagonalizing map z = D^{-1/2} O^T y for y ~ N(0, Sigma), reduced to the
// numerical rank m of Sigma.
struct Normalizer {
  Eigen::MatrixXd O;   // n x m, orthonormal columns
  Eigen::VectorXd D;   // m positive eigenvalues, descending
  double theta_hat = 1.0;

  int rank() const { return static_cast<int>(D.size()); }
  Eigen::VectorXd normalize(const Eigen::VectorXd& y) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const;  // O D^{1/2} z
};

Normalizer normalize_covariance(const Eigen::MatrixXd& sigma, double theta = 1.0);

struct HermiteExpansion {
  std::map<MultiIndex, double> coeffs;  // c_l with G = sum c_l H_l
  int degree_cap = 0;
  Eigen::MatrixXd sigma;
  int quadrature_order = 0;
  double l2_norm2 = 0.0;  // ||G||^2 in L2(N(0, Sigma))
  double residual = 0.0;  // L2 mass beyond the cap
  bool accuracy_warning = false;

  double default_coeff_tol() const;
  double coeff(const MultiIndex& l) const;
  double evaluate(const Eigen::VectorXd& z) const;
  int rank(double coeff_tol = -1.0) const;  // INT_MAX when no coefficient survives
};

// Hermite coefficients of G against N(0, Sigma): c_l = <G(O D^{1/2} .), H_l> / l!.
// Dense tensor Gauss-Hermite for rank <= 4, sparse (combination technique)
// above; quadrature_order <= 0 selects a default from the degree cap.
HermiteExpansion expand(const std::function<double(const Eigen::VectorXd&)>& G,
                        const Eigen::MatrixXd& sigma, int degree_cap,
                        int quadrature_order = 0);

struct ChaosDecaySum {
  double value = 0.0;
  bool converged = true;
};
ChaosDecaySum chaos_decay_sum(const HermiteExpansion& exp, double p);

struct PairingGraph {
  MultiIndex node_degrees;
  Eigen::MatrixXi edges;  // gamma_{i,j}, symmetric, zero diagonal
  std::uint64_t multiplicity = 0;
};

// All complete pairings of the legs (node i carries l_i legs) without
// self-loops, grouped by multigraph. Guard |l| <= 16.
std::vector<PairingGraph> enumerate_pairings(const MultiIndex& l);

// E[H_l(X)] for X jointly Gaussian with covariance R and unit variances:
// sum over pairings of the product of R over the edges.
double diagram_expectation(const MultiIndex& l, const Eigen::MatrixXd& R);

// E[H_l(z_0) H_k(z_lag)] from the 2n x 2n joint covariance; zero when
// |l| != |k|. Both diagonal blocks must be the identity.
double cross_hermite_covariance(const MultiIndex& l, const MultiIndex& k,
                                const Eigen::MatrixXd& R_joint);

// ||E[H_l(z_t) | F_tau]||_{L2} at gap = t - tau for the normalized process
// of the kernel (components iid): a^{|l|} sqrt(diagram of the duplicated
// index) with a^2 the normalized-kernel tail energy at the gap.
double conditional_hermite_norm(const MultiIndex& l, double gap,
                                const KernelSpec& kernel);

struct DecayIntegral {
  double value = 0.0;
  bool finite = false;
};

// Upper bound on int_0^horizon ||E[G(z_s)|F_0]|| ds via the chaos-wise
// triangle inequality; the non-decaying mean term is excluded and forces
// finite = false. The finite flag follows the rank(G) * beta > 2 criterion.
DecayIntegral conditional_decay_integral(const HermiteExpansion& exp,
                                         const KernelSpec& kernel, double horizon,
                                         int quad_order = 16);

}  // namespace vlab
