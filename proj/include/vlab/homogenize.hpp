#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vlab/grid.hpp"
#include "vlab/limits.hpp"
#include "vlab/observable.hpp"
#include "vlab/stats.hpp"

namespace vlab {

// Spatial factor h(x) with derivatives up to order 3 (scalar slow variable).
struct SpatialFn {
  std::string name;
  std::function<double(double, int)> eval;  // (x, derivative order)

  static SpatialFn sine(double freq = 1.0);
  static SpatialFn cosine(double freq = 1.0);
  static SpatialFn polynomial(std::vector<double> coeffs);  // sum c_k x^k
  // quintic ramp: 1 on [-R, R], 0 outside [-2R, 2R], C^2 in between
  static SpatialFn bump(double radius);
  static SpatialFn one();
};

// Separable scalar field f(x, y) = sum_m h_m(x) G_m(y) on R x R^n.
struct FieldModel {
  struct Term {
    SpatialFn h;
    Observable g;
  };
  std::vector<Term> terms;
  std::vector<double> spatial_grid;

  // d^k/dx^k f(x, y)
  double eval(double x, const Eigen::VectorXd& y, int x_deriv = 0) const;
  bool empty_field() const;
};

struct FieldConditionReport {
  int min_rank = 0;          // over grid points and derivative orders <= 3
  int min_rank_underived = 0;  // over grid points, k = 0 only
  double rank_threshold = 0.0;  // 2 / beta
  bool violation = false;    // min_rank <= 2/beta
  bool boundary = false;     // equality within 1e-12
  bool degenerate = false;   // field vanishes identically
  bool rank_monotone = true;  // rank(D_k f) >= rank(f) at every grid point
  std::vector<double> supnorm_sum;  // per derivative order, sup over grid
  std::vector<ReportRow> rows;
};

// Hermite-rank and chaos-decay diagnostics of the field on its grid:
// checks min_x rank(f(x,.)) > 2/beta and evaluates the weighted coefficient
// sum sum_l |c_l| (4n-1)^{|l|/2} (p-1)^{|l|/2} sqrt(l!) per derivative order.
FieldConditionReport field_condition_check(const FieldModel& field,
                                           const KernelSpec& kernel, double p,
                                           int degree_cap = 8);

struct SlowPath {
  PathGrid grid;  // slow time
  Eigen::VectorXd values;
  bool blown_up = false;
};

// Heun integration of dx = eps^{-1/2} f(x, y_{t/eps}) dt against the
// piecewise-linear interpolation of the fast path; h_slow = eps * h_fast *
// substep. Aborts with a flag when |x| exceeds 1e6.
SlowPath integrate_fast_slow(const FieldModel& field,
                             const Eigen::MatrixXd& fast_path, double h_fast,
                             double eps, double x0, double substep = 1.0);

struct EffectiveModel {
  std::vector<double> grid;
  Eigen::VectorXd gamma;        // drift at grid points
  Eigen::MatrixXd sigma;        // sigma(x_a, x_b) on grid x grid
  Eigen::MatrixXd lambda;       // Lambda(x_a, x_b)
  Eigen::VectorXd gamma_se;
  Eigen::MatrixXd lambda_se;
  double horizon = 0.0;

  double gamma_at(double x) const;               // linear interpolation
  double sigma_at(double x, double z) const;     // bilinear interpolation
};

// Chaos-analytic effective coefficients on the spatial grid, optionally
// cross-validated against a Monte Carlo estimate on a stationary ensemble
// (disagreement beyond 5 combined SE raises, naming the worst cell).
EffectiveModel effective_coefficients(const FieldModel& field,
                                      const KernelSpec& kernel,
                                      const std::vector<double>& r_grid,
                                      const GaussianEnsemble* ensemble = nullptr,
                                      int degree_cap = 8);

struct NPointRun {
  PathGrid grid;
  Eigen::MatrixXd values;  // count x N trajectories
  double max_jitter = 0.0;
};

// Euler-Maruyama for the N-point motion: joint increment covariance
// sigma(x_a, x_b) dt, Cholesky with adaptive jitter <= 1e-10 * trace.
NPointRun kunita_npoint_euler(const EffectiveModel& model,
                              const std::vector<double>& x0s, double T,
                              double dt, std::uint64_t seed);

struct FlowCompareReport {
  std::vector<ReportRow> rows;
  EnergyTest energy;
  bool pass = true;  // mean/cov within 4 combined SE and energy p above 1e-3
};

// Law comparison of two samples (rows = realizations, columns = coordinates
// of the N-point state). bias_allowance widens the moment bands by a fixed
// absolute amount, absorbing the O(eps^gamma) discretization bias.
FlowCompareReport limit_flow_compare(const Eigen::MatrixXd& eps_sample,
                                     const Eigen::MatrixXd& limit_sample,
                                     std::uint64_t seed = 2024,
                                     int permutations = 200,
                                     double bias_allowance = 0.0);

}  // namespace vlab
