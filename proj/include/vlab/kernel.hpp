#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vlab {

enum class KernelVariant { exp_ou, fbm_increment, fou, tabulated };

struct TailCheckReport {
  double max_violation = 0.0;
  bool passes = false;
};

// Causal moving-average kernel of a stationary Volterra process, together
// with its decay parameters (beta, theta). Multi-dimensional specs are
// diagonal stacks of n iid copies of the scalar kernel, K(t) = k(t) I_n.
class KernelSpec {
 public:
  static KernelSpec exp_ou(double rate, bool unit_variance = false, int n = 1);
  static KernelSpec fbm_increment(double hurst, int n = 1);
  // Explicit normalization constant (default: unit stationary variance).
  static KernelSpec fbm_increment_with_ch(double hurst, double c_h, int n = 1);
  static KernelSpec fou(double hurst, int n = 1);
  static KernelSpec tabulated(std::vector<double> ts, std::vector<double> values,
                              double beta, double theta);
  static KernelSpec zero(int n = 1);

  KernelVariant variant() const { return variant_; }
  int n() const { return n_; }
  int d() const { return n_; }
  double beta() const { return beta_; }
  double theta() const { return theta_; }
  double hurst() const { return hurst_; }
  double rate() const { return rate_; }
  double normalization() const { return c_; }

  void set_decay(double beta, double theta) {
    beta_ = beta;
    theta_ = theta;
  }

  // Scalar kernel value k(t); zero for t < 0.
  double scalar_eval(double t) const;

  // K(t) = k(t) * I_n (n x d matrix).
  Eigen::MatrixXd eval(double t) const;

  // int_0^inf k(u) k(u + lag) du by composite quadrature with tail
  // truncation (the slow, oracle-grade route).
  double scalar_covariance_quad(double lag, int quad_order = 16) const;
  Eigen::MatrixXd covariance_of_lag(double lag, int quad_order = 16) const;

  // Fast covariance: closed form where available, cached interpolation
  // otherwise. Cross-validated against the quadrature route in tests.
  double scalar_covariance(double lag) const;

  // Stationary variance of one component.
  double variance() const { return scalar_covariance(0.0); }

  // int_t^inf k(u)^2 du.
  double tail_energy(double t) const;

  // max over the grid of tail(t) - theta (1 ^ t^{-2 beta}); passes iff
  // below 1e-8 * theta.
  TailCheckReport tail_energy_check(std::span<const double> ts) const;

  bool is_zero() const { return variant_ == KernelVariant::tabulated && zero_; }

  std::string describe() const;

 private:
  // interpolation table for tail_energy of the rough variants
  struct TailTable {
    std::vector<double> t;  // t[0] = 0, log-spaced beyond
    std::vector<double> log_v;
    double v0 = 0.0;           // tail at t = 0 (the variance)
    double small_exponent = 1.0;  // tail(t) ~ v0 - C t^{2H} near 0
    double decay_exponent = -2.0;  // log-log slope beyond the table
  };

  KernelSpec() = default;
  void build_fou_table();
  void build_cov_table();
  double tail_energy_direct(double t) const;
  double fou_raw(double t) const;  // c_H = 1 branch integrals
  double cov_quad_impl(double lag, int quad_order, double rel, double tail_abs,
                       double tail_rel) const;
  double smooth_eval(double t) const;
  double table_eval(double t) const;

  KernelVariant variant_ = KernelVariant::exp_ou;
  int n_ = 1;
  double beta_ = 1.0;
  double theta_ = 1.0;
  double hurst_ = 0.5;
  double rate_ = 1.0;
  double c_ = 1.0;  // normalization constant
  double var_ = 1.0;  // stationary variance of one component
  bool zero_ = false;

  // tabulated kernel (user supplied or internal fou table; abscissae in log t)
  std::vector<double> tab_t_;
  std::vector<double> tab_v_;
  bool tab_log_spaced_ = false;
  double small_t_exponent_ = 0.0;
  double large_t_exponent_ = 0.0;

  // cached covariance table for variants without a closed form
  std::vector<double> cov_lag_;
  std::vector<double> cov_val_;

  // lazily built, shared across copies
  mutable std::shared_ptr<const TailTable> tail_tab_;
};

// Stationary covariance structure derived from a kernel: Sigma, the lag
// correlation function and the decay constant of the normalized process.
struct CovarianceModel {
  Eigen::MatrixXd sigma0;
  std::function<Eigen::MatrixXd(double)> corr;  // E[y_0 (x) y_lag]
  double beta = 1.0;
  double theta = 1.0;
  double theta_hat = 1.0;

  static CovarianceModel from_kernel(const KernelSpec& spec);
  static CovarianceModel scalar(std::function<double(double)> rho, double beta,
                                double theta);
};

}  // namespace vlab
