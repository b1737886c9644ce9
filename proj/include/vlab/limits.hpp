#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vlab/hermite.hpp"
#include "vlab/kernel.hpp"
#include "vlab/observable.hpp"
#include "vlab/roughlift.hpp"
#include "vlab/sampler.hpp"

namespace vlab {

// Flat report row; z is (estimate - target) / se (0 when se = 0).
struct ReportRow {
  std::string quantity;
  double estimate = 0.0;
  double se = 0.0;
  double target = 0.0;
  double z = 0.0;
};

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& os);

// rho_{ij}(r) = E[G_i(y_r) G_j(y_0)] on a lag grid, by two estimators:
// Monte Carlo (path + time-shift averaged) and chaos-analytic through the
// cross-Hermite covariance.
struct LagCorrelationTable {
  std::vector<double> lags;
  std::vector<Eigen::MatrixXd> mc;        // N x N per lag
  std::vector<Eigen::MatrixXd> mc_se;
  std::vector<Eigen::MatrixXd> analytic;
  bool consistent = true;  // within 4 combined SE everywhere
  double worst_z = 0.0;
};

LagCorrelationTable lag_correlation(const std::vector<Observable>& gs,
                                    const std::vector<HermiteExpansion>& exps,
                                    const GaussianEnsemble& ensemble,
                                    const KernelSpec& kernel,
                                    const std::vector<double>& lags);

// Chaos-analytic rho alone (no ensemble required).
Eigen::MatrixXd analytic_lag_correlation(const std::vector<HermiteExpansion>& exps,
                                         const KernelSpec& kernel, double lag);

struct LimitMatrices {
  Eigen::MatrixXd lambda;    // primitive
  Eigen::MatrixXd upsilon2;  // Lambda + Lambda^T, by construction
  Eigen::MatrixXd xi;        // (Lambda - Lambda^T)/2, by construction
  Eigen::MatrixXd upsilon;   // PSD square root of upsilon2
  Eigen::MatrixXd se;        // per-entry SE of lambda (0 for analytic input)
  double horizon = 0.0;
  double tail_bound = 0.0;   // remainder bound beyond the horizon
  double clamp_magnitude = 0.0;  // largest eigenvalue clamped in the root
  bool tail_finite = true;
  bool horizon_warning = false;  // horizon < 5 correlation times
};

// Integrate the lag table (trapezoid) into Lambda and derive the rest.
// use_analytic selects which estimator column to integrate. The tail
// remainder uses the chaos bound sum |c_l| sqrt(l!) (2n-1)^{|l|/2} a(r)^{|l|}
// with a^2(r) = theta_hat r^{-2 beta}.
LimitMatrices limit_matrices(const LagCorrelationTable& table,
                             const std::vector<HermiteExpansion>& exps,
                             const KernelSpec& kernel, bool use_analytic = true);

struct CltReport {
  std::vector<ReportRow> rows;
  double min_ks_p = 1.0;
  bool regime_violation = false;
  bool degenerate = false;
  bool pass = true;  // all |z| <= 4 and min KS p >= 1e-3
};

// Scaled-functional ensemble against the Gaussian limit N(0, t Upsilon^2):
// per-time covariance z-scores, direction-wise KS (N axes + 8 fixed random
// directions), and an increment-independence diagnostic.
CltReport clt_report(const std::vector<ScaledFunctionalPath>& paths,
                     const std::vector<int>& time_indices,
                     const LimitMatrices& limits,
                     const std::vector<HermiteExpansion>& exps,
                     const KernelSpec& kernel);

struct AreaReport {
  std::vector<ReportRow> rows;
  bool pass = true;  // all |z| <= 4
};

// Mean discrete lift at grid index t_idx against t*Lambda (Ito
// normalization) and its antisymmetric part against t*Xi.
AreaReport area_report(const std::vector<RoughLift>& lifts, int t_idx,
                       const LimitMatrices& limits);

}  // namespace vlab
