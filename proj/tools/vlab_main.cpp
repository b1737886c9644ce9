// Configuration-driven experiment runner: ties the sampler, chaos expansion,
// rough-lift, limit-theorem and homogenization modules into reproducible
// studies with CSV outputs and a machine-readable run manifest.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vlab/homogenize.hpp"
#include "vlab/limits.hpp"
#include "vlab/observable.hpp"
#include "vlab/rng.hpp"
#include "vlab/roughlift.hpp"
#include "vlab/sampler.hpp"
#include "vlab/stats.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace vlab;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(join(path, key) + ": missing required field");
  return j.at(key);
}

double need_num(const json& j, const std::string& key, const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number()) throw ConfigError(join(path, key) + ": expected a number");
  return v.get<double>();
}

double num_or(const json& j, const std::string& key, double fallback,
              const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw ConfigError(join(path, key) + ": expected a number");
  return j.at(key).get<double>();
}

std::string need_str(const json& j, const std::string& key,
                     const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_string()) throw ConfigError(join(path, key) + ": expected a string");
  return v.get<std::string>();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MultiIndex parse_index(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an integer array");
  std::vector<int> e;
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<int>() < 0)
      throw ConfigError(path + ": indices must be non-negative integers");
    e.push_back(x.get<int>());
  }
  return MultiIndex(std::move(e));
}

KernelSpec parse_kernel(const json& cfg) {
  const json& j = need(cfg, "kernel", "");
  const std::string type = need_str(j, "type", "kernel");
  const int n = static_cast<int>(num_or(j, "n", 1.0, "kernel"));
  KernelSpec k = KernelSpec::exp_ou(1.0);
  if (type == "exp_ou") {
    const bool unit = j.value("unit_variance", true);
    k = KernelSpec::exp_ou(num_or(j, "rate", 1.0, "kernel"), unit, n);
  } else if (type == "fbm_increment") {
    const double hurst = need_num(j, "hurst", "kernel");
    if (j.contains("c_h"))
      k = KernelSpec::fbm_increment_with_ch(hurst, need_num(j, "c_h", "kernel"), n);
    else
      k = KernelSpec::fbm_increment(hurst, n);
  } else if (type == "fou") {
    k = KernelSpec::fou(need_num(j, "hurst", "kernel"), n);
  } else if (type == "tabulated") {
    const std::string file = need_str(j, "file", "kernel");
    std::ifstream in(file);
    if (!in) throw ConfigError("kernel.file: cannot open '" + file + "'");
    std::vector<double> ts, vs;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      double t, v;
      char comma;
      if (!(ls >> t >> comma >> v))
        throw ConfigError("kernel.file: malformed row '" + line + "'");
      ts.push_back(t);
      vs.push_back(v);
    }
    k = KernelSpec::tabulated(std::move(ts), std::move(vs),
                              need_num(j, "beta", "kernel"),
                              need_num(j, "theta", "kernel"));
  } else {
    throw ConfigError("kernel.type: unknown kernel '" + type + "'");
  }
  // optional steeper decay envelope pinned for the regime arithmetic
  if (j.contains("beta") && type != "tabulated")
    k.set_decay(need_num(j, "beta", "kernel"), need_num(j, "theta", "kernel"));
  return k;
}

Observable parse_observable(const json& j, const std::string& path) {
  const std::string type = need_str(j, "type", path);
  if (type == "hermite") return Observable::hermite(parse_index(need(j, "index", path), join(path, "index")));
  if (type == "generating")
    return Observable::generating(need_num(j, "a", path),
                                  static_cast<int>(num_or(j, "axis", 0.0, path)));
  if (type == "sin")
    return Observable::sine(num_or(j, "freq", 1.0, path),
                            static_cast<int>(num_or(j, "axis", 0.0, path)));
  if (type == "cos")
    return Observable::cosine(num_or(j, "freq", 1.0, path),
                              static_cast<int>(num_or(j, "axis", 0.0, path)));
  if (type == "polynomial") {
    const json& rows = need(j, "monomials", path);
    if (!rows.is_array()) throw ConfigError(join(path, "monomials") + ": expected an array");
    std::map<MultiIndex, double> mono;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string rp = join(path, "monomials[" + std::to_string(i) + "]");
      mono[parse_index(need(rows[i], "index", rp), join(rp, "index"))] =
          need_num(rows[i], "coeff", rp);
    }
    return Observable::polynomial(std::move(mono));
  }
  if (type == "zero") return Observable::zero();
  throw ConfigError(join(path, "type") + ": unknown observable '" + type + "'");
}

std::vector<Observable> parse_observables(const json& cfg) {
  const json& arr = need(cfg, "observables", "");
  if (!arr.is_array() || arr.empty())
    throw ConfigError("observables: expected a non-empty array");
  std::vector<Observable> out;
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(parse_observable(arr[i], "observables[" + std::to_string(i) + "]"));
  return out;
}

SpatialFn parse_spatial(const json& j, const std::string& path) {
  const std::string type = need_str(j, "type", path);
  if (type == "sin") return SpatialFn::sine(num_or(j, "freq", 1.0, path));
  if (type == "cos") return SpatialFn::cosine(num_or(j, "freq", 1.0, path));
  if (type == "one") return SpatialFn::one();
  if (type == "bump") return SpatialFn::bump(need_num(j, "radius", path));
  if (type == "polynomial") {
    const json& c = need(j, "coeffs", path);
    if (!c.is_array()) throw ConfigError(join(path, "coeffs") + ": expected an array");
    std::vector<double> coeffs;
    for (const auto& x : c) coeffs.push_back(x.get<double>());
    return SpatialFn::polynomial(std::move(coeffs));
  }
  throw ConfigError(join(path, "type") + ": unknown spatial factor '" + type + "'");
}

FieldModel parse_field(const json& cfg) {
  const json& j = need(cfg, "field", "");
  FieldModel f;
  const json& terms = need(j, "terms", "field");
  if (!terms.is_array() || terms.empty())
    throw ConfigError("field.terms: expected a non-empty array");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string tp = "field.terms[" + std::to_string(i) + "]";
    f.terms.push_back({parse_spatial(need(terms[i], "spatial", tp), join(tp, "spatial")),
                       parse_observable(need(terms[i], "observable", tp),
                                        join(tp, "observable"))});
  }
  const json& g = need(j, "grid", "field");
  const double lo = need_num(g, "min", "field.grid");
  const double hi = need_num(g, "max", "field.grid");
  const double st = need_num(g, "step", "field.grid");
  if (st <= 0.0 || hi <= lo)
    throw ConfigError("field.grid: need min < max and step > 0");
  for (double x = lo; x <= hi + 1e-12 * (hi - lo); x += st) f.spatial_grid.push_back(x);
  return f;
}

std::vector<double> lag_grid(const json& numeric) {
  const double horizon = num_or(numeric, "lag_horizon", 20.0, "numeric");
  const double step = num_or(numeric, "lag_step", 0.01, "numeric");
  if (horizon <= 0.0 || step <= 0.0)
    throw ConfigError("numeric.lag_horizon: horizon and lag_step must be > 0");
  std::vector<double> lags;
  const int q = static_cast<int>(std::llround(horizon / step));
  for (int k = 0; k <= q; ++k) lags.push_back(step * k);
  return lags;
}

LagCorrelationTable analytic_table(const std::vector<HermiteExpansion>& exps,
                                   const KernelSpec& kernel,
                                   const std::vector<double>& lags) {
  LagCorrelationTable t;
  t.lags = lags;
  for (double r : lags)
    t.analytic.push_back(analytic_lag_correlation(exps, kernel, r));
  return t;
}

std::vector<HermiteExpansion> expand_observables(
    const std::vector<Observable>& gs, const KernelSpec& kernel, int cap) {
  const Eigen::MatrixXd sigma =
      kernel.variance() * Eigen::MatrixXd::Identity(kernel.n(), kernel.n());
  std::vector<HermiteExpansion> out;
  for (const auto& g : gs) {
    if (g.dim > kernel.n())
      throw ConfigError("observables: observable needs dimension " +
                        std::to_string(g.dim) + " but kernel.n = " +
                        std::to_string(kernel.n()));
    out.push_back(expand(g.fn, sigma, cap));
  }
  return out;
}

void open_csv(std::ofstream& os, const fs::path& p) {
  os.open(p, std::ios::binary);  // '\n' endings on every platform
  if (!os) throw std::runtime_error("cannot open output file " + p.string());
  os.precision(17);
}

struct Runner {
  json cfg;
  std::string cfg_bytes;
  fs::path out_dir;
  int threads = 1;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, bool>> checks;

  json numeric() const { return cfg.value("numeric", json::object()); }
  double nnum(const std::string& key, double fallback) const {
    return num_or(numeric(), key, fallback, "numeric");
  }
  int n_paths() const {
    const double p = nnum("n_paths", 100.0);
    if (p < 1.0) throw ConfigError("numeric.n_paths: must be >= 1");
    return static_cast<int>(p);
  }
  std::vector<double> epsilons() const {
    const json nm = numeric();
    std::vector<double> eps;
    if (nm.contains("epsilon")) {
      if (nm.at("epsilon").is_array())
        for (const auto& e : nm.at("epsilon")) eps.push_back(e.get<double>());
      else
        eps.push_back(nm.at("epsilon").get<double>());
    } else {
      eps.push_back(1e-2);
    }
    for (double e : eps)
      if (e <= 0.0) throw ConfigError("numeric.epsilon: must be > 0");
    return eps;
  }

  void check(const std::string& name, bool pass) { checks.emplace_back(name, pass); }

  void write_rows(const std::string& file, const std::vector<ReportRow>& rows) {
    std::ofstream os;
    open_csv(os, out_dir / file);
    write_report_csv(rows, os);
  }

  void run_simulate(const KernelSpec& kernel) {
    const auto grid = PathGrid::make(0.0, nnum("t_final", 10.0), nnum("step", 0.05));
    const auto ens = simulate_stationary(CovarianceModel::from_kernel(kernel), grid,
                                         n_paths(), seed, SampleMethod::circulant,
                                         threads);
    std::ofstream os;
    open_csv(os, out_dir / "paths.csv");
    os << "path,t";
    for (int i = 0; i < kernel.n(); ++i) os << ",y" << (i + 1);
    os << "\n";
    for (int p = 0; p < ens.n_paths(); ++p)
      for (int k = 0; k < grid.count; ++k) {
        os << p << "," << grid.time(k);
        for (int i = 0; i < kernel.n(); ++i) os << "," << ens.paths[p](k, i);
        os << "\n";
      }
    check("simulate", true);
  }

  void run_expand(const KernelSpec& kernel) {
    const auto gs = parse_observables(cfg);
    const int cap = static_cast<int>(nnum("degree_cap", 8.0));
    const auto exps = expand_observables(gs, kernel, cap);
    std::ofstream os;
    open_csv(os, out_dir / "coefficients.csv");
    os << "observable,index,coefficient\n";
    bool accurate = true;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      for (const auto& [l, c] : exps[i].coeffs) {
        if (std::abs(c) <= exps[i].default_coeff_tol()) continue;
        os << i << ",";
        for (int a = 0; a < l.dim(); ++a) os << (a ? " " : "") << l.entries[a];
        os << "," << c << "\n";
      }
      accurate = accurate && !exps[i].accuracy_warning;
    }
    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      const int r = exps[i].rank();
      rows.push_back({"rank[" + std::to_string(i) + "]",
                      r == INT_MAX ? -1.0 : double(r), 0.0, 0.0, 0.0});
      rows.push_back({"l2_norm2[" + std::to_string(i) + "]", exps[i].l2_norm2,
                      0.0, 0.0, 0.0});
      rows.push_back({"residual[" + std::to_string(i) + "]", exps[i].residual,
                      0.0, 0.0, 0.0});
    }
    write_rows("expand_report.csv", rows);
    check("expansion_accuracy", accurate);
  }

  LimitMatrices make_limits(const std::vector<HermiteExpansion>& exps,
                            const KernelSpec& kernel) {
    return limit_matrices(analytic_table(exps, kernel, lag_grid(numeric())), exps,
                          kernel, true);
  }

  void run_limits(const KernelSpec& kernel) {
    const auto gs = parse_observables(cfg);
    const int cap = static_cast<int>(nnum("degree_cap", 8.0));
    const auto exps = expand_observables(gs, kernel, cap);
    const auto lags = lag_grid(numeric());

    bool consistent = true;
    LagCorrelationTable table;
    if (nnum("n_paths", 0.0) >= 2.0) {
      const auto grid =
          PathGrid::make(0.0, nnum("t_final", 40.0), nnum("step", 0.05));
      const auto ens = simulate_stationary(CovarianceModel::from_kernel(kernel),
                                           grid, n_paths(), seed,
                                           SampleMethod::circulant, threads);
      table = lag_correlation(gs, exps, ens, kernel, lags);
      consistent = table.consistent;
    } else {
      table = analytic_table(exps, kernel, lags);
    }
    const auto lm = limit_matrices(table, exps, kernel, true);

    const int N = static_cast<int>(lm.lambda.rows());
    std::vector<ReportRow> rows;
    auto emit = [&rows](const std::string& name, const Eigen::MatrixXd& m,
                        const Eigen::MatrixXd* target) {
      for (int a = 0; a < static_cast<int>(m.rows()); ++a)
        for (int b = 0; b < static_cast<int>(m.cols()); ++b) {
          const double tgt = target ? (*target)(a, b) : m(a, b);
          rows.push_back({name + "[" + std::to_string(a) + "," +
                              std::to_string(b) + "]",
                          m(a, b), 0.0, tgt, 0.0});
        }
    };
    emit("lambda", lm.lambda, nullptr);
    emit("upsilon2", lm.upsilon2, nullptr);
    const Eigen::MatrixXd zero_target = Eigen::MatrixXd::Zero(N, N);
    emit("xi", lm.xi, N == 1 ? &zero_target : nullptr);
    emit("upsilon", lm.upsilon, nullptr);
    rows.push_back({"tail_bound", lm.tail_bound, 0.0, 0.0, 0.0});
    rows.push_back({"horizon", lm.horizon, 0.0, 0.0, 0.0});
    write_rows("limits.csv", rows);
    check("lag_consistency", consistent);
    check("tail_finite", lm.tail_finite);
  }

  // scaled functional paths of one ensemble at the given epsilon
  std::vector<ScaledFunctionalPath> scaled_ensemble(
      const KernelSpec& kernel, const std::vector<Observable>& gs, double eps,
      double t_final, double h_fast, double out_step, std::uint64_t eps_salt) {
    const auto fast_grid = PathGrid::make(0.0, t_final / eps, h_fast);
    const auto out_grid = PathGrid::make(0.0, t_final, out_step);
    const auto ens = simulate_stationary(CovarianceModel::from_kernel(kernel),
                                         fast_grid, n_paths(),
                                         mix64(seed, eps_salt),
                                         SampleMethod::circulant, threads);
    std::vector<ScaledFunctionalPath> paths;
    const int N = static_cast<int>(gs.size());
    for (int p = 0; p < ens.n_paths(); ++p) {
      Eigen::MatrixXd fine_g(fast_grid.count, N);
      for (int k = 0; k < fast_grid.count; ++k) {
        const Eigen::VectorXd y = ens.paths[p].row(k).transpose();
        for (int i = 0; i < N; ++i) fine_g(k, i) = gs[i](y);
      }
      paths.push_back(scaled_path(fine_g, h_fast, eps, out_grid));
    }
    return paths;
  }

  void run_clt(const KernelSpec& kernel) {
    const auto gs = parse_observables(cfg);
    const auto exps =
        expand_observables(gs, kernel, static_cast<int>(nnum("degree_cap", 8.0)));
    const auto lm = make_limits(exps, kernel);
    const double t_final = nnum("t_final", 1.0);
    const double h_fast = nnum("h_fast", 0.05);
    const auto eps_list = epsilons();
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      const double eps = eps_list[e];
      const double out_step = nnum("out_step", t_final / 10.0);
      const auto paths = scaled_ensemble(kernel, gs, eps, t_final, h_fast,
                                         out_step, static_cast<std::uint64_t>(e));
      const auto rep = clt_report(paths, {paths[0].out_grid.count - 1}, lm, exps,
                                  kernel);
      write_rows("clt_report_" + std::to_string(e) + ".csv", rep.rows);
      check("clt_pass[eps=" + std::to_string(eps) + "]", rep.pass);
    }
  }

  void run_area(const KernelSpec& kernel) {
    const auto gs = parse_observables(cfg);
    const auto exps =
        expand_observables(gs, kernel, static_cast<int>(nnum("degree_cap", 8.0)));
    const auto lm = make_limits(exps, kernel);
    const double t_final = nnum("t_final", 1.0);
    const double h_fast = nnum("h_fast", 0.05);
    const double eps = epsilons().front();
    // lift at fast-grid resolution so the left-point drift is unbiased
    const auto paths =
        scaled_ensemble(kernel, gs, eps, t_final, h_fast, eps * h_fast, 0);
    std::vector<RoughLift> lifts;
    for (const auto& p : paths) lifts.push_back(lift_discrete(p));
    const auto rep = area_report(lifts, paths[0].out_grid.count - 1, lm);
    write_rows("area_report.csv", rep.rows);
    check("area_pass", rep.pass);
  }

  EffectiveModel field_model(const FieldModel& field, const KernelSpec& kernel) {
    return effective_coefficients(field, kernel, lag_grid(numeric()), nullptr,
                                  static_cast<int>(nnum("degree_cap", 8.0)));
  }

  void write_effective(const EffectiveModel& model) {
    std::ofstream os;
    open_csv(os, out_dir / "effective.csv");
    os << "x,gamma,sigma_diag\n";
    for (std::size_t a = 0; a < model.grid.size(); ++a)
      os << model.grid[a] << "," << model.gamma(static_cast<int>(a)) << ","
         << model.sigma(static_cast<int>(a), static_cast<int>(a)) << "\n";
  }

  void run_homogenize(const KernelSpec& kernel) {
    const auto field = parse_field(cfg);
    const double p_moment = nnum("p", 4.0);
    const auto cond = field_condition_check(field, kernel, p_moment,
                                            static_cast<int>(nnum("degree_cap", 8.0)));
    write_rows("field_condition.csv", cond.rows);
    check("field_condition", !cond.violation && !cond.degenerate);

    const auto model = field_model(field, kernel);
    write_effective(model);

    const double eps = epsilons().front();
    const double t_final = nnum("t_final", 1.0);
    const double h_fast = nnum("h_fast", 0.05);
    const double x0 = nnum("x0", 1.0);
    const auto fast_grid = PathGrid::make(0.0, t_final / eps, h_fast);
    const auto ens = simulate_stationary(CovarianceModel::from_kernel(kernel),
                                         fast_grid, n_paths(), seed,
                                         SampleMethod::circulant, threads);
    Eigen::MatrixXd slow_end(ens.n_paths(), 1);
    bool any_blow = false;
    for (int p = 0; p < ens.n_paths(); ++p) {
      const auto sp = integrate_fast_slow(field, ens.paths[p], h_fast, eps, x0,
                                          nnum("substep", 1.0));
      any_blow = any_blow || sp.blown_up;
      slow_end(p, 0) = sp.values(sp.grid.count - 1);
    }
    check("no_blow_up", !any_blow);

    const double dt = nnum("dt", 1e-3);
    Eigen::MatrixXd limit_end(ens.n_paths(), 1);
    const std::uint64_t limit_seed = mix64(seed, 0x4bULL);
    for (int p = 0; p < ens.n_paths(); ++p) {
      const auto run = kunita_npoint_euler(model, {x0}, t_final, dt,
                                           mix64(limit_seed, static_cast<std::uint64_t>(p)));
      limit_end(p, 0) = run.values(run.grid.count - 1, 0);
    }
    const double bias = num_or(cfg.value("tolerances", json::object()),
                               "bias_allowance", 0.05, "tolerances");
    const auto rep = limit_flow_compare(slow_end, limit_end, mix64(seed, 0x77ULL),
                                        200, bias);
    auto rows = rep.rows;
    rows.push_back({"energy_statistic", rep.energy.statistic, 0.0, 0.0, 0.0});
    rows.push_back({"energy_p", rep.energy.p_value, 0.0, 0.0, 0.0});
    write_rows("homogenize_report.csv", rows);
    check("law_match", rep.pass);
  }

  void run_npoint(const KernelSpec& kernel) {
    const auto field = parse_field(cfg);
    const auto model = field_model(field, kernel);
    write_effective(model);

    std::vector<double> x0s;
    const json nm = numeric();
    if (nm.contains("x0s"))
      for (const auto& x : nm.at("x0s")) x0s.push_back(x.get<double>());
    else
      x0s = {nnum("x0", 1.0)};
    const double t_final = nnum("t_final", 1.0);
    const double dt = nnum("dt", 1e-3);
    const int P = n_paths();
    const int N = static_cast<int>(x0s.size());

    std::ofstream os;
    open_csv(os, out_dir / "npoint.csv");
    os << "run,t";
    for (int a = 0; a < N; ++a) os << ",x" << (a + 1);
    os << "\n";
    Eigen::MatrixXd joint_end(P, N);
    for (int p = 0; p < P; ++p) {
      const auto run = kunita_npoint_euler(model, x0s, t_final, dt,
                                           mix64(seed, static_cast<std::uint64_t>(p)));
      joint_end.row(p) = run.values.row(run.grid.count - 1);
      for (int k = 0; k < run.grid.count; ++k) {
        os << p << "," << run.grid.time(k);
        for (int a = 0; a < N; ++a) os << "," << run.values(k, a);
        os << "\n";
      }
    }

    // marginal consistency: first coordinate of the joint run against an
    // independent single-point run from the same start
    Eigen::MatrixXd single_end(P, 1);
    const std::uint64_t alt = mix64(seed, 0x1eadULL);
    for (int p = 0; p < P; ++p) {
      const auto run = kunita_npoint_euler(model, {x0s[0]}, t_final, dt,
                                           mix64(alt, static_cast<std::uint64_t>(p)));
      single_end(p, 0) = run.values(run.grid.count - 1, 0);
    }
    const auto et = energy_permutation_test(joint_end.col(0), single_end, 200,
                                            mix64(seed, 0xe11ULL));
    std::vector<ReportRow> rows;
    rows.push_back({"marginal_energy_p", et.p_value, 0.0, 0.0, 0.0});
    write_rows("npoint_report.csv", rows);
    check("marginal_consistency", et.p_value >= 0.01);
  }

  void describe(const KernelSpec& kernel, const std::string& kind) {
    std::cout.precision(10);
    std::cout << "kind: " << kind << "\n";
    std::cout << "kernel: " << kernel.describe() << "\n";
    std::cout << "seed: " << seed << "\n";
    const double var = kernel.variance();
    const double theta_hat = var > 0.0 ? kernel.theta() / var : 0.0;
    const int n = kernel.n();
    const double p_moment = nnum("p", 4.0);

    double memory = 0.0;
    if (kind == "simulate" || kind == "limits") {
      const auto grid = PathGrid::make(0.0, nnum("t_final", 10.0), nnum("step", 0.05));
      std::cout << "grid: [" << grid.t0 << ", " << grid.t1 << "] step "
                << grid.step << " (" << grid.count << " nodes)\n";
      memory = 8.0 * nnum("n_paths", 100.0) * grid.count * n;
    } else {
      const double eps = epsilons().front();
      const auto fast_grid =
          PathGrid::make(0.0, nnum("t_final", 1.0) / eps, nnum("h_fast", 0.05));
      std::cout << "fast grid: [" << fast_grid.t0 << ", " << fast_grid.t1
                << "] step " << fast_grid.step << " (" << fast_grid.count
                << " nodes)\n";
      memory = 8.0 * nnum("n_paths", 100.0) * fast_grid.count * n;
    }
    std::cout << "n_paths: " << static_cast<long long>(nnum("n_paths", 100.0))
              << "\n";
    std::cout << "memory_estimate_bytes: " << memory << "\n";
    std::cout << "feasible: " << (memory < 8e9 ? "yes" : "no (infeasible)") << "\n";

    // regime arithmetic from the chaos ranks, without any sampling
    std::vector<HermiteExpansion> exps;
    if (cfg.contains("observables"))
      exps = expand_observables(parse_observables(cfg), kernel,
                                static_cast<int>(nnum("degree_cap", 8.0)));
    else if (cfg.contains("field")) {
      const auto field = parse_field(cfg);
      const Eigen::MatrixXd sigma = var * Eigen::MatrixXd::Identity(n, n);
      for (double x : {field.spatial_grid.front(), field.spatial_grid.back()})
        exps.push_back(expand(
            [&field, x](const Eigen::VectorXd& y) { return field.eval(x, y); },
            sigma, static_cast<int>(nnum("degree_cap", 8.0))));
    }
    for (std::size_t i = 0; i < exps.size(); ++i) {
      const int r = exps[i].rank();
      std::cout << "rank[" << i << "]: " << (r == INT_MAX ? -1 : r) << "\n";
      if (r != INT_MAX) {
        std::cout << "  rank*beta > 1 (clt): "
                  << (r * kernel.beta() > 1.0 ? "ok" : "violated") << "\n";
        std::cout << "  rank*beta > 2 (homogenization): "
                  << (r * kernel.beta() > 2.0 ? "ok" : "violated") << "\n";
      }
    }
    std::cout << "chaos_decay_theta(2n-1)+1: " << theta_hat * (2.0 * n - 1.0) + 1.0
              << "\n";
    std::cout << "chaos_decay_theta(4n-1)(p-1)+1: "
              << theta_hat * (4.0 * n - 1.0) * (p_moment - 1.0) + 1.0 << "\n";
  }

  int execute(bool dry_run) {
    if (!cfg.contains("seed"))
      throw ConfigError("seed: missing required field");
    if (!cfg.at("seed").is_number_integer() || cfg.at("seed").get<long long>() < 0)
      throw ConfigError("seed: expected a non-negative integer");
    seed = cfg.at("seed").get<std::uint64_t>();
    const std::string kind = need_str(cfg, "kind", "");
    const auto kernel = parse_kernel(cfg);

    if (dry_run) {
      describe(kernel, kind);
      return 0;
    }

    fs::create_directories(out_dir);
    const auto start = std::chrono::steady_clock::now();
    if (kind == "simulate") run_simulate(kernel);
    else if (kind == "expand") run_expand(kernel);
    else if (kind == "limits") run_limits(kernel);
    else if (kind == "clt") run_clt(kernel);
    else if (kind == "area") run_area(kernel);
    else if (kind == "homogenize") run_homogenize(kernel);
    else if (kind == "npoint") run_npoint(kernel);
    else throw ConfigError("kind: unknown experiment kind '" + kind + "'");
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    bool all_pass = true;
    json manifest;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg_bytes)));
    manifest["config_hash"] = std::string(hash_hex);
    manifest["artifact_version"] = "0.1.0";
    manifest["wall_clock_seconds"] = wall;
    manifest["seed"] = seed;
    manifest["threads"] = threads;
    manifest["checks"] = json::array();
    for (const auto& [name, pass] : checks) {
      manifest["checks"].push_back({{"name", name}, {"pass", pass}});
      all_pass = all_pass && pass;
    }
    manifest["pass"] = all_pass;
    std::ofstream mos(out_dir / "manifest.json", std::ios::binary);
    mos << manifest.dump(2) << "\n";
    return all_pass ? 0 : 2;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"volterra limit-theorem laboratory"};
  std::string config_path;
  std::string out_override;
  int threads = 1;
  bool dry_run = false;
  app.add_option("--config", config_path, "experiment configuration (JSON)")
      ->required();
  app.add_option("--out", out_override, "output directory override");
  app.add_option("--threads", threads, "max worker threads (never affects numbers)");
  app.add_flag("--check", dry_run, "validate and describe the run, no sampling");
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::cerr << "error: cannot open config '" << config_path << "'\n";
      return 1;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    Runner r;
    r.cfg_bytes = buf.str();
    try {
      r.cfg = json::parse(r.cfg_bytes);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (threads < 1) throw ConfigError("threads: must be >= 1");
    r.threads = threads;
    r.out_dir = !out_override.empty()
                    ? fs::path(out_override)
                    : fs::path(r.cfg.value("output", std::string("out")));
    return r.execute(dry_run);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
