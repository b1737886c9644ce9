#include "vlab/limits.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vlab/rng.hpp"
#include "vlab/stats.hpp"

namespace vlab {

void write_report_csv(const std::vector<ReportRow>& rows, std::ostream& os) {
  os << "quantity,estimate,se,target,z\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.quantity << "," << r.estimate << "," << r.se << "," << r.target
       << "," << r.z << "\n";
}

namespace {

double zscore(double estimate, double target, double se) {
  if (se <= 0.0) return estimate == target ? 0.0 : HUGE_VAL;
  return (estimate - target) / se;
}

Eigen::MatrixXd joint_correlation(const KernelSpec& kernel, double lag) {
  const int n = kernel.n();
  const double var = kernel.variance();
  const double rho = var > 0.0 ? kernel.scalar_covariance(lag) / var : 0.0;
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) R(i, n + i) = R(n + i, i) = rho;
  return R;
}

}  // namespace

Eigen::MatrixXd analytic_lag_correlation(const std::vector<HermiteExpansion>& exps,
                                         const KernelSpec& kernel, double lag) {
  const int N = static_cast<int>(exps.size());
  const Eigen::MatrixXd R = joint_correlation(kernel, lag);
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (const auto& [l, cl] : exps[i].coeffs) {
        if (l.order() == 0) continue;  // centered cross-covariance terms only
        for (const auto& [k, ck] : exps[j].coeffs) {
          if (k.order() != l.order()) continue;
          s += cl * ck * cross_hermite_covariance(l, k, R);
        }
      }
      // constant terms contribute their product (not a covariance term,
      // but E[G_i G_j] includes it)
      const MultiIndex zero_i(std::vector<int>(kernel.n(), 0));
      s += exps[i].coeff(zero_i) * exps[j].coeff(zero_i);
      rho(i, j) = s;
    }
  return rho;
}

LagCorrelationTable lag_correlation(const std::vector<Observable>& gs,
                                    const std::vector<HermiteExpansion>& exps,
                                    const GaussianEnsemble& ensemble,
                                    const KernelSpec& kernel,
                                    const std::vector<double>& lags) {
  const int N = static_cast<int>(gs.size());
  if (exps.size() != gs.size())
    throw std::invalid_argument("lag_correlation: one expansion per observable");
  const int P = ensemble.n_paths();
  if (P < 2) throw std::invalid_argument("lag_correlation: need >= 2 paths");
  const auto& grid = ensemble.grid;

  // observable values along every path, computed once
  std::vector<Eigen::MatrixXd> gv(P, Eigen::MatrixXd(grid.count, N));
  for (int p = 0; p < P; ++p)
    for (int k = 0; k < grid.count; ++k) {
      const Eigen::VectorXd y = ensemble.paths[p].row(k).transpose();
      for (int i = 0; i < N; ++i) gv[p](k, i) = gs[i](y);
    }

  LagCorrelationTable table;
  table.lags = lags;
  for (double r : lags) {
    const double pos = r / grid.step;
    const int steps = static_cast<int>(std::llround(pos));
    if (r < 0.0 || std::abs(pos - steps) > 1e-9 || steps >= grid.count)
      throw std::invalid_argument(
          "lag_correlation: lag must be a grid multiple within the span");
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd se = Eigen::MatrixXd::Zero(N, N);
    const int T = grid.count - steps;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        std::vector<double> per_path(P);
        for (int p = 0; p < P; ++p) {
          double acc = 0.0;
          for (int k = 0; k < T; ++k) acc += gv[p](k + steps, i) * gv[p](k, j);
          per_path[p] = acc / T;
        }
        mean(i, j) = sample_mean(per_path);
        se(i, j) = sample_se(per_path);
      }
    table.mc.push_back(mean);
    table.mc_se.push_back(se);
    table.analytic.push_back(analytic_lag_correlation(exps, kernel, r));
  }

  for (std::size_t q = 0; q < table.lags.size(); ++q)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double z = zscore(table.mc[q](i, j), table.analytic[q](i, j),
                                table.mc_se[q](i, j));
        if (std::abs(z) > std::abs(table.worst_z)) table.worst_z = z;
      }
  table.consistent = std::abs(table.worst_z) <= 4.0;
  return table;
}

LimitMatrices limit_matrices(const LagCorrelationTable& table,
                             const std::vector<HermiteExpansion>& exps,
                             const KernelSpec& kernel, bool use_analytic) {
  const std::size_t q = table.lags.size();
  if (q < 2 || table.lags.front() != 0.0)
    throw std::invalid_argument("limit_matrices: lag table must start at 0");
  const auto& rho = use_analytic ? table.analytic : table.mc;
  const int N = static_cast<int>(rho[0].rows());

  LimitMatrices out;
  out.horizon = table.lags.back();
  out.lambda = Eigen::MatrixXd::Zero(N, N);
  out.se = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t k = 0; k + 1 < q; ++k) {
    const double w = 0.5 * (table.lags[k + 1] - table.lags[k]);
    out.lambda += w * (rho[k] + rho[k + 1]);
    if (!use_analytic) {
      // trapezoid weight per node: endpoints w, interior sum of halves
      out.se += (w * w) * (table.mc_se[k].array().square() +
                           table.mc_se[k + 1].array().square())
                              .matrix();
    }
  }
  if (!use_analytic) out.se = out.se.array().sqrt().matrix();

  // chaos tail bound beyond the horizon: |rho_ij(r)| <= ||G_i|| *
  // sum_l |c^j_l| sqrt(l!) (2n-1)^{|l|/2} (theta_hat^{1/2} r^{-beta})^{|l|}
  const double var = kernel.variance();
  const double theta_hat = var > 0.0 ? kernel.theta() / var : 0.0;
  const double beta = kernel.beta();
  const int n = kernel.n();
  const double h0 = std::max(out.horizon, 1.0);
  double worst_tail = 0.0;
  bool finite = true;
  for (int i = 0; i < N && finite; ++i)
    for (int j = 0; j < N; ++j) {
      const double norm_i = std::sqrt(std::max(exps[i].l2_norm2, 0.0));
      double tail = 0.0;
      for (const auto& [l, c] : exps[j].coeffs) {
        if (std::abs(c) <= exps[j].default_coeff_tol()) continue;
        const int m = l.order();
        if (m == 0) continue;  // mean terms excluded (centered integrand)
        if (m * beta <= 1.0) {
          finite = false;
          break;
        }
        tail += std::abs(c) * std::sqrt(static_cast<double>(l.factorial())) *
                std::pow((2.0 * n - 1.0) * theta_hat, m / 2.0) *
                std::pow(h0, 1.0 - m * beta) / (m * beta - 1.0);
      }
      worst_tail = std::max(worst_tail, norm_i * tail);
      if (!finite) break;
    }
  out.tail_bound = worst_tail;
  out.tail_finite = finite;

  // correlation time: first lag where |rho_ii| drops below rho_ii(0)/e
  double corr_time = 0.0;
  for (int i = 0; i < N; ++i) {
    const double r0 = std::abs(rho[0](i, i));
    if (r0 <= 0.0) continue;
    double ct = out.horizon;
    for (std::size_t k = 0; k < q; ++k)
      if (std::abs(rho[k](i, i)) <= r0 / 2.718281828459045) {
        ct = table.lags[k];
        break;
      }
    corr_time = std::max(corr_time, ct);
  }
  out.horizon_warning = out.horizon < 5.0 * corr_time;

  out.upsilon2 = out.lambda + out.lambda.transpose();
  out.xi = 0.5 * (out.lambda - out.lambda.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.upsilon2);
  const double trace = std::max(out.upsilon2.trace(), 0.0);
  const double floor = -1e-8 * std::max(trace, 1e-300);
  if (es.eigenvalues().minCoeff() < floor) {
    std::ostringstream msg;
    msg << "limit_matrices: upsilon^2 not PSD (min eigenvalue "
        << es.eigenvalues().minCoeff() << ")";
    throw std::runtime_error(msg.str());
  }
  out.clamp_magnitude = std::max(0.0, -es.eigenvalues().minCoeff());
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  out.upsilon = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  return out;
}

CltReport clt_report(const std::vector<ScaledFunctionalPath>& paths,
                     const std::vector<int>& time_indices,
                     const LimitMatrices& limits,
                     const std::vector<HermiteExpansion>& exps,
                     const KernelSpec& kernel) {
  CltReport rep;
  const int P = static_cast<int>(paths.size());
  if (P < 2) throw std::invalid_argument("clt_report: need >= 2 paths");
  const int N = paths[0].components();
  const auto& grid = paths[0].out_grid;

  // validity regime: min Hermite rank > 1/beta
  int min_rank = INT_MAX;
  for (const auto& e : exps) min_rank = std::min(min_rank, e.rank());
  rep.regime_violation =
      (min_rank == INT_MAX) || (min_rank * kernel.beta() <= 1.0);

  double total_mass = 0.0;
  for (const auto& p : paths) total_mass += p.values.cwiseAbs().maxCoeff();
  rep.degenerate = total_mass == 0.0;

  auto add_row = [&rep](const std::string& q, double est, double se, double tgt) {
    rep.rows.push_back({q, est, se, tgt, zscore(est, tgt, se)});
  };

  for (int k : time_indices) {
    const double t = grid.time(k);
    // per-time covariance against t * Upsilon^2
    for (int a = 0; a < N; ++a)
      for (int b = a; b < N; ++b) {
        std::vector<double> prod(P);
        for (int p = 0; p < P; ++p)
          prod[p] = paths[p].values(k, a) * paths[p].values(k, b);
        std::ostringstream q;
        q << "cov[t=" << t << "][" << a << "," << b << "]";
        add_row(q.str(), sample_mean(prod), sample_se(prod),
                t * limits.upsilon2(a, b));
      }

    // direction-wise KS against the Gaussian marginals
    std::vector<Eigen::VectorXd> dirs;
    for (int a = 0; a < N; ++a) dirs.push_back(Eigen::VectorXd::Unit(N, a));
    GaussianRng dir_rng(0x9d5c0f2b1ull);  // fixed directions, reproducible
    for (int d = 0; d < 8; ++d) {
      Eigen::VectorXd v(N);
      for (int a = 0; a < N; ++a) v(a) = dir_rng.normal();
      if (v.norm() > 0.0) dirs.push_back(v / v.norm());
    }
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const double sd2 = t * dirs[d].dot(limits.upsilon2 * dirs[d]);
      std::vector<double> sample(P);
      for (int p = 0; p < P; ++p)
        sample[p] = dirs[d].dot(paths[p].values.row(k).transpose());
      std::ostringstream q;
      q << "ks_p[t=" << t << "][dir=" << d << "]";
      if (sd2 <= 0.0) {
        // degenerate direction: statistics are exact zeros or flagged
        const bool all_zero =
            std::all_of(sample.begin(), sample.end(),
                        [](double x) { return x == 0.0; });
        add_row(q.str(), all_zero ? 1.0 : 0.0, 0.0, 1.0);
        if (!all_zero) rep.pass = false;
        continue;
      }
      const double sd = std::sqrt(sd2);
      const double D = ks_statistic(
          sample, [sd](double x) { return normal_cdf(x / sd); });
      const double p_val = kolmogorov_pvalue(std::sqrt(double(P)) * D);
      rep.min_ks_p = std::min(rep.min_ks_p, p_val);
      add_row(q.str(), p_val, 0.0, p_val);  // informational row, z = 0
    }

    // increment independence across [0, t/2] and [t/2, t]
    const int mid = k / 2;
    if (mid > 0 && mid < k) {
      for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b) {
          std::vector<double> y1(P), y2(P);
          for (int p = 0; p < P; ++p) {
            y1[p] = paths[p].values(mid, a) - paths[p].values(0, a);
            y2[p] = paths[p].values(k, b) - paths[p].values(mid, b);
          }
          const double m1 = sample_mean(y1), m2 = sample_mean(y2);
          double num = 0.0, v1 = 0.0, v2 = 0.0;
          for (int p = 0; p < P; ++p) {
            num += (y1[p] - m1) * (y2[p] - m2);
            v1 += (y1[p] - m1) * (y1[p] - m1);
            v2 += (y2[p] - m2) * (y2[p] - m2);
          }
          const double corr =
              (v1 > 0.0 && v2 > 0.0) ? num / std::sqrt(v1 * v2) : 0.0;
          std::ostringstream q;
          q << "incr_corr[t=" << t << "][" << a << "," << b << "]";
          add_row(q.str(), corr, 1.0 / std::sqrt(double(P)), 0.0);
        }
    }
  }

  for (const auto& r : rep.rows)
    if (std::isfinite(r.z) ? std::abs(r.z) > 4.0 : true) rep.pass = false;
  if (!rep.degenerate && rep.min_ks_p < 1e-3) rep.pass = false;
  return rep;
}

AreaReport area_report(const std::vector<RoughLift>& lifts, int t_idx,
                       const LimitMatrices& limits) {
  AreaReport rep;
  const int P = static_cast<int>(lifts.size());
  if (P < 2) throw std::invalid_argument("area_report: need >= 2 lifts");
  const int N = lifts[0].base.components();
  const double t = lifts[0].base.out_grid.time(t_idx);

  auto add_row = [&rep](const std::string& q, double est, double se, double tgt) {
    rep.rows.push_back({q, est, se, tgt, zscore(est, tgt, se)});
    const auto& r = rep.rows.back();
    if (!(std::isfinite(r.z)) || std::abs(r.z) > 4.0) rep.pass = false;
  };

  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      std::vector<double> v(P);
      for (int p = 0; p < P; ++p) v[p] = lifts[p].area0[t_idx](a, b);
      std::ostringstream q;
      q << "area_mean[" << a << "," << b << "]";
      add_row(q.str(), sample_mean(v), sample_se(v), t * limits.lambda(a, b));
    }
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      std::vector<double> v(P);
      for (int p = 0; p < P; ++p)
        v[p] = 0.5 * (lifts[p].area0[t_idx](a, b) - lifts[p].area0[t_idx](b, a));
      std::ostringstream q;
      q << "area_antisym[" << a << "," << b << "]";
      add_row(q.str(), sample_mean(v), sample_se(v), t * limits.xi(a, b));
    }
  return rep;
}

}  // namespace vlab
