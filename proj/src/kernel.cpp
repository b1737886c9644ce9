#include "vlab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "vlab/quad.hpp"

namespace vlab {

namespace {

double pos_pow(double x, double p) { return x > 0.0 ? std::pow(x, p) : 0.0; }

}  // namespace

KernelSpec KernelSpec::exp_ou(double rate, bool unit_variance, int n) {
  if (rate <= 0.0) throw std::invalid_argument("exp_ou: rate must be > 0");
  if (n < 1) throw std::invalid_argument("KernelSpec: n must be >= 1");
  KernelSpec s;
  s.variant_ = KernelVariant::exp_ou;
  s.rate_ = rate;
  s.n_ = n;
  s.c_ = unit_variance ? std::sqrt(2.0 * rate) : 1.0;
  // tail(t) = c^2 e^{-2 rate t} / (2 rate); sup of tail(t) / (1 ^ t^{-2})
  const double var = s.c_ * s.c_ / (2.0 * rate);
  s.var_ = var;
  double sup = var;
  if (rate < 1.0) sup = std::max(sup, var * std::exp(-2.0) / (rate * rate));
  s.beta_ = 1.0;
  s.theta_ = sup * (1.0 + 1e-6);
  return s;
}

KernelSpec KernelSpec::fbm_increment_with_ch(double hurst, double c_h, int n) {
  if (hurst <= 0.0 || hurst >= 1.0)
    throw std::invalid_argument("fbm_increment: hurst must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("KernelSpec: n must be >= 1");
  // calibration is quadrature-heavy; memoize per (hurst, c_h)
  static std::mutex cache_mutex;
  static std::map<std::pair<double, double>, KernelSpec> cache;
  const auto key = std::make_pair(hurst, c_h);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) {
      KernelSpec s = it->second;
      s.n_ = n;
      return s;
    }
  }
  KernelSpec s;
  s.variant_ = KernelVariant::fbm_increment;
  s.hurst_ = hurst;
  s.n_ = n;
  s.c_ = c_h;
  s.beta_ = 1.0 - hurst;
  // closed-form int_0^inf k^2 (validated against quadrature in the tests)
  s.var_ = c_h * c_h * std::tgamma(hurst + 0.5) * std::tgamma(2.0 - 2.0 * hurst) /
           (2.0 * hurst * std::tgamma(1.5 - hurst));
  // Calibrate Theta so the decay bound holds with beta = 1 - H.
  double sup = 0.0;
  for (double t = 0.0; t <= 64.0; t += (t < 4.0 ? 0.125 : 1.0)) {
    const double bound = std::min(1.0, std::pow(std::max(t, 1e-300), -2.0 * s.beta_));
    sup = std::max(sup, s.tail_energy(t) / bound);
  }
  s.theta_ = sup * (1.0 + 1e-6);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(key, s);
  }
  KernelSpec out = s;
  out.n_ = n;
  return out;
}

KernelSpec KernelSpec::fbm_increment(double hurst, int n) {
  // int_0^inf (u^{H-1/2} - (u-1)_+^{H-1/2})^2 du in closed form
  // (the reciprocal of the squared moving-average normalization of fBm);
  // cross-checked against the quadrature route in the tests.
  const double var = std::tgamma(hurst + 0.5) * std::tgamma(2.0 - 2.0 * hurst) /
                     (2.0 * hurst * std::tgamma(1.5 - hurst));
  return fbm_increment_with_ch(hurst, 1.0 / std::sqrt(var), n);
}

KernelSpec KernelSpec::fou(double hurst, int n) {
  if (hurst <= 0.0 || hurst >= 1.0)
    throw std::invalid_argument("fou: hurst must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("KernelSpec: n must be >= 1");
  // the tabulation is expensive; memoize per Hurst parameter
  static std::mutex cache_mutex;
  static std::map<double, KernelSpec> cache;
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(hurst);
    if (it != cache.end()) {
      KernelSpec s = it->second;
      s.n_ = n;
      return s;
    }
  }
  KernelSpec s;
  s.variant_ = KernelVariant::fou;
  s.hurst_ = hurst;
  s.n_ = n;
  s.beta_ = 1.0 - hurst;
  s.c_ = 1.0;
  s.build_fou_table();
  // Unit stationary variance.
  const double var = s.scalar_covariance_quad(0.0);
  s.c_ = 1.0 / std::sqrt(var);
  s.build_cov_table();
  s.var_ = s.cov_val_[0];
  double sup = 0.0;
  for (double t = 0.0; t <= 64.0; t += (t < 4.0 ? 0.125 : 1.0)) {
    const double bound = std::min(1.0, std::pow(std::max(t, 1e-300), -2.0 * s.beta_));
    sup = std::max(sup, s.tail_energy(t) / bound);
  }
  s.theta_ = sup * (1.0 + 1e-6);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(hurst, s);
  }
  KernelSpec out = s;
  out.n_ = n;
  return out;
}

KernelSpec KernelSpec::tabulated(std::vector<double> ts, std::vector<double> values,
                                 double beta, double theta) {
  if (ts.size() != values.size() || ts.size() < 2)
    throw std::invalid_argument("tabulated: need >= 2 matching (t, value) rows");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!std::isfinite(ts[i]) || !std::isfinite(values[i]))
      throw std::invalid_argument("tabulated: non-finite entry");
    if (i > 0 && ts[i] <= ts[i - 1])
      throw std::invalid_argument("tabulated: grid must be strictly increasing");
  }
  if (ts.front() < 0.0) throw std::invalid_argument("tabulated: grid must start at t >= 0");
  if (beta <= 0.0 || theta <= 0.0)
    throw std::invalid_argument("tabulated: beta and theta must be > 0");
  KernelSpec s;
  s.variant_ = KernelVariant::tabulated;
  s.tab_t_ = std::move(ts);
  s.tab_v_ = std::move(values);
  s.beta_ = beta;
  s.theta_ = theta;
  s.zero_ = std::all_of(s.tab_v_.begin(), s.tab_v_.end(),
                        [](double v) { return v == 0.0; });
  s.var_ = s.zero_ ? 0.0 : s.scalar_covariance_quad(0.0);
  return s;
}

KernelSpec KernelSpec::zero(int n) {
  KernelSpec s = tabulated({0.0, 1.0}, {0.0, 0.0}, 1.0, 1e-30);
  s.n_ = n;
  return s;
}

// Unnormalized fOU kernel, both Hurst branches, by the convergent series
//   H > 1/2:  k(r) = e^{-r} sum_m r^{a+m} / (m! (a+m)),           a = H - 1/2
//   H < 1/2:  k(r) = e^{-r} [ r^{a}/(-a) - sum_{m>=1} r^{a+m}/(m! (a+m)) ]
// valid for r <= ~60, with the algebraic asymptote r^{H-3/2} beyond.
double KernelSpec::fou_raw(double t) const {
  if (t <= 0.0) return 0.0;
  const double a = hurst_ - 0.5;
  if (t <= 40.0) {
    if (hurst_ > 0.5) {
      double term = std::pow(t, a);  // r^a / 0!
      double sum = term / a;
      for (int m = 1; m < 400; ++m) {
        term *= t / m;
        const double add = term / (a + m);
        sum += add;
        if (add < 1e-17 * sum && m > 4) break;
      }
      return std::exp(-t) * sum;
    }
    double head = std::pow(t, a) / (-a);
    double term = std::pow(t, a);
    double sum = 0.0;
    for (int m = 1; m < 400; ++m) {
      term *= t / m;
      const double add = term / (a + m);
      sum += add;
      if (add < 1e-17 * sum && m > 4) break;
    }
    return std::exp(-t) * (head - sum);
  }
  // Repeated integration by parts:
  //   int_0^r e^v v^{a-1} dv ~ e^r r^{a-1} (1 + (1-a)/r + (1-a)(2-a)/r^2 + ...)
  // truncated at the smallest term; the remainder is then O(e^{-r}), which
  // joins the series branch seamlessly at r = 40.
  double asym = 1.0, term = 1.0;
  for (int j = 1; j <= 80; ++j) {
    const double next = term * (j - a) / t;
    if (std::abs(next) >= std::abs(term)) break;
    asym += next;
    term = next;
    if (std::abs(next) < 1e-17 * std::abs(asym)) break;
  }
  const double body = std::pow(t, a - 1.0) * asym;
  if (hurst_ > 0.5) return body;
  return std::exp(-t) * std::pow(t, a) / (-a) - body;
}

void KernelSpec::build_fou_table() {
  const int m = 1200;
  const double lo = std::log(1e-6), hi = std::log(300.0);
  tab_t_.resize(m);
  tab_v_.resize(m);
  for (int i = 0; i < m; ++i) {
    const double t = std::exp(lo + (hi - lo) * i / (m - 1));
    tab_t_[i] = t;
    tab_v_[i] = fou_raw(t);
  }
  tab_log_spaced_ = true;
  small_t_exponent_ = hurst_ - 0.5;
  large_t_exponent_ = hurst_ - 1.5;
}

// Catmull-Rom cubic through the tabulated values; log-spaced tables
// interpolate in log t and extend by their algebraic asymptotes.
double KernelSpec::table_eval(double t) const {
  if (t <= 0.0) return 0.0;
  const auto& xs = tab_t_;
  const auto& ys = tab_v_;
  if (tab_log_spaced_) {
    if (t < xs.front())
      return ys.front() * std::pow(t / xs.front(), small_t_exponent_);
    if (t > xs.back())
      return ys.back() * std::pow(t / xs.back(), large_t_exponent_);
  } else {
    if (t < xs.front()) return ys.front();
    if (t > xs.back()) return 0.0;
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), t);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
      0, it - xs.begin() - 1));
  if (i >= xs.size() - 1) i = xs.size() - 2;
  auto coord = [&](std::size_t k) {
    return tab_log_spaced_ ? std::log(xs[k]) : xs[k];
  };
  const double x = tab_log_spaced_ ? std::log(t) : t;
  const double x1 = coord(i), x2 = coord(i + 1);
  const double h = x2 - x1;
  const double s = (x - x1) / h;
  const double y1 = ys[i], y2 = ys[i + 1];
  // one-sided slopes at the ends of the bracket
  const double m1 = (i > 0) ? (y2 - ys[i - 1]) / (x2 - coord(i - 1)) : (y2 - y1) / h;
  const double m2 = (i + 2 < xs.size()) ? (ys[i + 2] - y1) / (coord(i + 2) - x1)
                                        : (y2 - y1) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y1 + (s3 - 2 * s2 + s) * h * m1 +
         (-2 * s3 + 3 * s2) * y2 + (s3 - s2) * h * m2;
}

double KernelSpec::scalar_eval(double t) const {
  if (t < 0.0) return 0.0;
  switch (variant_) {
    case KernelVariant::exp_ou:
      return c_ * std::exp(-rate_ * t);
    case KernelVariant::fbm_increment: {
      const double p = hurst_ - 0.5;
      if (t == 0.0) return (p == 0.0) ? c_ : (p > 0.0 ? 0.0 : c_ * HUGE_VAL);
      if (t > 2.0)  // cancellation-free form of t^p - (t-1)^p
        return -c_ * std::pow(t, p) * std::expm1(p * std::log1p(-1.0 / t));
      return c_ * (std::pow(t, p) - pos_pow(t - 1.0, p));
    }
    case KernelVariant::fou:
      return c_ * table_eval(t);
    case KernelVariant::tabulated:
      return table_eval(t);
  }
  return 0.0;
}

Eigen::MatrixXd KernelSpec::eval(double t) const {
  return scalar_eval(t) * Eigen::MatrixXd::Identity(n_, n_);
}

double KernelSpec::scalar_covariance_quad(double lag, int quad_order) const {
  return cov_quad_impl(lag, quad_order, 1e-11, 1e-16, 1e-12);
}

// fou quadratures use the series evaluator directly: it is smooth, while
// the interpolation table has knot kinks that stall panel refinement.
double KernelSpec::smooth_eval(double t) const {
  if (variant_ == KernelVariant::fou) return t > 0.0 ? c_ * fou_raw(t) : 0.0;
  return scalar_eval(t);
}

double KernelSpec::cov_quad_impl(double lag, int quad_order, double rel,
                                 double tail_abs, double tail_rel) const {
  lag = std::abs(lag);
  auto f = [this, lag](double u) {
    return smooth_eval(u) * smooth_eval(u + lag);
  };

  if (variant_ == KernelVariant::tabulated) {
    if (zero_) return 0.0;
    const double t_last = tab_t_.back();
    if (lag >= t_last) return 0.0;
    const double r = integrate(f, 0.0, t_last - lag, rel, quad_order);
    if (!std::isfinite(r)) {
      std::ostringstream msg;
      msg << "covariance_of_lag: tabulated kernel integral diverged (residual "
          << r << ")";
      throw std::runtime_error(msg.str());
    }
    return r;
  }

  // Breakpoints: the kernel's own kinks/singularities at 0 and (fbm) 1,
  // plus the shifted copy's kink at 1 - lag.
  std::vector<double> bp{0.0};
  if (variant_ == KernelVariant::fbm_increment) {
    if (lag < 1.0 && lag > 0.0) bp.push_back(1.0 - lag);
    bp.push_back(1.0);
  }
  if (bp.size() == 1) bp.push_back(1.0);
  std::sort(bp.begin(), bp.end());
  double total = 0.0;
  if (variant_ == KernelVariant::exp_ou) {
    total += integrate_to_infinity(f, 0.0, tail_abs, tail_rel);
    if (!std::isfinite(total))
      throw std::runtime_error("covariance_of_lag: integral diverged");
    return total;
  }
  // Each breakpoint can carry an algebraic singularity (in the value near 0,
  // or in a derivative at a kink), so every panel — including the first unit
  // of the tail — is integrated with a left-endpoint substitution.
  for (std::size_t i = 0; i + 1 < bp.size(); ++i)
    total += integrate_left_singular(f, bp[i], bp[i + 1], rel);
  total += integrate_left_singular(f, bp.back(), bp.back() + 1.0, rel);
  total += integrate_to_infinity(f, bp.back() + 1.0, tail_abs, tail_rel);
  if (!std::isfinite(total))
    throw std::runtime_error("covariance_of_lag: integral diverged");
  return total;
}

Eigen::MatrixXd KernelSpec::covariance_of_lag(double lag, int quad_order) const {
  return scalar_covariance_quad(lag, quad_order) *
         Eigen::MatrixXd::Identity(n_, n_);
}

void KernelSpec::build_cov_table() {
  const int m = 240;
  const double lo = std::log(1e-4), hi = std::log(2.5e4);
  cov_lag_.resize(m + 1);
  cov_val_.resize(m + 1);
  cov_lag_[0] = 0.0;
  cov_val_[0] = cov_quad_impl(0.0, 16, 1e-9, 1e-13, 1e-9);
  for (int i = 0; i < m; ++i) {
    const double lag = std::exp(lo + (hi - lo) * i / (m - 1));
    cov_lag_[i + 1] = lag;
    cov_val_[i + 1] = cov_quad_impl(lag, 16, 1e-9, 1e-13, 1e-9);
  }
}

double KernelSpec::scalar_covariance(double lag) const {
  lag = std::abs(lag);
  switch (variant_) {
    case KernelVariant::exp_ou:
      return c_ * c_ * std::exp(-rate_ * lag) / (2.0 * rate_);
    case KernelVariant::fbm_increment: {
      // fBm increment covariance, scaled by the squared normalization
      // relative to the unit-variance constant.
      const double H2 = 2.0 * hurst_;
      const double unit = 0.5 * (std::pow(lag + 1.0, H2) + std::pow(std::abs(lag - 1.0), H2) -
                                 2.0 * std::pow(lag, H2));
      return var_ * unit;
    }
    case KernelVariant::fou: {
      if (lag >= cov_lag_.back())
        return cov_val_.back() *
               std::pow(lag / cov_lag_.back(), 2.0 * hurst_ - 2.0);
      if (lag <= cov_lag_[1]) {
        const double w = lag / cov_lag_[1];
        return (1.0 - w) * cov_val_[0] + w * cov_val_[1];
      }
      // linear in log-lag between table nodes
      const auto it = std::upper_bound(cov_lag_.begin() + 1, cov_lag_.end(), lag);
      const std::size_t i = static_cast<std::size_t>(it - cov_lag_.begin() - 1);
      const double x1 = std::log(cov_lag_[i]), x2 = std::log(cov_lag_[i + 1]);
      const double w = (std::log(lag) - x1) / (x2 - x1);
      return (1.0 - w) * cov_val_[i] + w * cov_val_[i + 1];
    }
    case KernelVariant::tabulated:
      return scalar_covariance_quad(lag);
  }
  return 0.0;
}

double KernelSpec::tail_energy_direct(double t) const {
  auto f2 = [this](double u) {
    const double v = smooth_eval(u);
    return v * v;
  };
  double total = 0.0;
  double start = t;
  if (t < 1.0) {
    total += integrate_left_singular(f2, t, 1.0, 1e-11);
    start = 1.0;
  }
  total += integrate_left_singular(f2, start, start + 1.0, 1e-11);
  total += integrate_to_infinity(f2, start + 1.0, 1e-14, 1e-10);
  return total;
}

double KernelSpec::tail_energy(double t) const {
  t = std::max(t, 0.0);
  switch (variant_) {
    case KernelVariant::exp_ou:
      return c_ * c_ * std::exp(-2.0 * rate_ * t) / (2.0 * rate_);
    case KernelVariant::fbm_increment:
    case KernelVariant::fou: {
      if (!tail_tab_) {
        // tail_energy is hit thousands of times by the decay integrals;
        // tabulate once and interpolate a cubic in log-log coordinates
        static std::mutex build_mutex;
        std::lock_guard<std::mutex> lock(build_mutex);
        if (!tail_tab_) {
          auto tab = std::make_shared<TailTable>();
          const int m = 280;
          const double lo = std::log(1e-3), hi = std::log(5e4);
          tab->t.resize(m + 1);
          tab->log_v.resize(m + 1);
          tab->t[0] = 0.0;
          tab->v0 = tail_energy_direct(0.0);
          tab->log_v[0] = std::log(tab->v0);
          for (int i = 0; i < m; ++i) {
            const double ti = std::exp(lo + (hi - lo) * i / (m - 1));
            tab->t[i + 1] = ti;
            tab->log_v[i + 1] = std::log(tail_energy_direct(ti));
          }
          // k ~ t^{H-1/2} near 0 and t^{H-3/2} at infinity
          tab->small_exponent = 2.0 * hurst_;
          tab->decay_exponent = 2.0 * hurst_ - 2.0;
          tail_tab_ = std::move(tab);
        }
      }
      const TailTable& tab = *tail_tab_;
      const std::size_t last = tab.t.size() - 1;
      if (t >= tab.t[last])
        return std::exp(tab.log_v[last]) *
               std::pow(t / tab.t[last], tab.decay_exponent);
      if (t <= tab.t[1]) {
        // tail(0) - tail(t) grows like t^{2H} near the origin
        const double drop = tab.v0 - std::exp(tab.log_v[1]);
        return tab.v0 - drop * std::pow(t / tab.t[1], tab.small_exponent);
      }
      const auto it = std::upper_bound(tab.t.begin() + 1, tab.t.end(), t);
      std::size_t i = static_cast<std::size_t>(it - tab.t.begin() - 1);
      i = std::min(std::max<std::size_t>(i, 1), last - 1);
      // Catmull-Rom cubic in (log t, log tail); one-sided slopes at the ends
      // (node 0 sits at t = 0 and has no log coordinate)
      const double x = std::log(t);
      const double x1 = std::log(tab.t[i]), x2 = std::log(tab.t[i + 1]);
      const double h = x2 - x1;
      const double s = (x - x1) / h;
      const double y1 = tab.log_v[i], y2 = tab.log_v[i + 1];
      const double m1 = (i >= 2)
                            ? (y2 - tab.log_v[i - 1]) / (x2 - std::log(tab.t[i - 1]))
                            : (y2 - y1) / h;
      const double m2 = (i + 2 <= last)
                            ? (tab.log_v[i + 2] - y1) / (std::log(tab.t[i + 2]) - x1)
                            : (y2 - y1) / h;
      const double s2 = s * s, s3 = s2 * s;
      return std::exp((2 * s3 - 3 * s2 + 1) * y1 + (s3 - 2 * s2 + s) * h * m1 +
                      (-2 * s3 + 3 * s2) * y2 + (s3 - s2) * h * m2);
    }
    case KernelVariant::tabulated: {
      if (zero_) return 0.0;
      if (t >= tab_t_.back()) return 0.0;
      auto f2 = [this](double u) {
        const double v = scalar_eval(u);
        return v * v;
      };
      return integrate(f2, t, tab_t_.back(), 1e-11);
    }
  }
  return 0.0;
}

TailCheckReport KernelSpec::tail_energy_check(std::span<const double> ts) const {
  TailCheckReport rep;
  double worst = -HUGE_VAL;
  for (double t : ts) {
    const double bound =
        theta_ * std::min(1.0, std::pow(std::max(t, 1e-300), -2.0 * beta_));
    // n iid rows share the scalar tail
    worst = std::max(worst, tail_energy(t) - bound);
  }
  rep.max_violation = worst;
  rep.passes = worst <= 1e-8 * theta_;
  return rep;
}

std::string KernelSpec::describe() const {
  std::ostringstream os;
  switch (variant_) {
    case KernelVariant::exp_ou:
      os << "exp_ou(rate=" << rate_ << ", c=" << c_ << ")";
      break;
    case KernelVariant::fbm_increment:
      os << "fbm_increment(H=" << hurst_ << ", c=" << c_ << ")";
      break;
    case KernelVariant::fou:
      os << "fou(H=" << hurst_ << ", c=" << c_ << ")";
      break;
    case KernelVariant::tabulated:
      os << "tabulated(" << tab_t_.size() << " rows)";
      break;
  }
  os << " n=" << n_ << " beta=" << beta_ << " theta=" << theta_;
  return os.str();
}

CovarianceModel CovarianceModel::from_kernel(const KernelSpec& spec) {
  CovarianceModel m;
  const int n = spec.n();
  const double var = spec.variance();
  m.sigma0 = var * Eigen::MatrixXd::Identity(n, n);
  KernelSpec copy = spec;
  m.corr = [copy, n](double lag) {
    return copy.scalar_covariance(lag) * Eigen::MatrixXd::Identity(n, n);
  };
  m.beta = spec.beta();
  m.theta = spec.theta();
  m.theta_hat = (var > 0.0) ? spec.theta() / var : spec.theta();
  return m;
}

CovarianceModel CovarianceModel::scalar(std::function<double(double)> rho,
                                        double beta, double theta) {
  CovarianceModel m;
  m.sigma0 = rho(0.0) * Eigen::MatrixXd::Identity(1, 1);
  m.corr = [rho](double lag) {
    return rho(std::abs(lag)) * Eigen::MatrixXd::Identity(1, 1);
  };
  m.beta = beta;
  m.theta = theta;
  const double v = m.sigma0(0, 0);
  m.theta_hat = (v > 0.0) ? theta / v : theta;
  return m;
}

}  // namespace vlab
