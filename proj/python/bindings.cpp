#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vlab/homogenize.hpp"
#include "vlab/limits.hpp"
#include "vlab/observable.hpp"
#include "vlab/roughlift.hpp"
#include "vlab/sampler.hpp"
#include "vlab/stats.hpp"

namespace py = pybind11;
using namespace vlab;

namespace {

MultiIndex to_index(const std::vector<int>& e) { return MultiIndex(e); }

std::vector<Eigen::MatrixXd> simulate(const KernelSpec& kernel, double span,
                                      double step, int n_paths,
                                      std::uint64_t seed, int threads) {
  const auto grid = PathGrid::make(0.0, span, step);
  return simulate_stationary(CovarianceModel::from_kernel(kernel), grid, n_paths,
                             seed, SampleMethod::circulant, threads)
      .paths;
}

HermiteExpansion expand_py(const std::function<double(const Eigen::VectorXd&)>& G,
                           const Eigen::MatrixXd& sigma, int cap, int order) {
  return expand(G, sigma, cap, order);
}

py::dict coeff_dict(const HermiteExpansion& e) {
  py::dict d;
  for (const auto& [l, c] : e.coeffs) {
    if (std::abs(c) <= e.default_coeff_tol()) continue;
    d[py::tuple(py::cast(l.entries))] = c;
  }
  return d;
}

py::dict limits_dict(const LimitMatrices& lm) {
  py::dict d;
  d["lambda"] = lm.lambda;
  d["upsilon2"] = lm.upsilon2;
  d["xi"] = lm.xi;
  d["upsilon"] = lm.upsilon;
  d["horizon"] = lm.horizon;
  d["tail_bound"] = lm.tail_bound;
  d["tail_finite"] = lm.tail_finite;
  return d;
}

LimitMatrices analytic_limits(const std::vector<HermiteExpansion>& exps,
                              const KernelSpec& kernel, double horizon,
                              double step) {
  LagCorrelationTable t;
  const int q = static_cast<int>(std::llround(horizon / step));
  for (int k = 0; k <= q; ++k) {
    t.lags.push_back(step * k);
    t.analytic.push_back(analytic_lag_correlation(exps, kernel, step * k));
  }
  return limit_matrices(t, exps, kernel, true);
}

}  // namespace

PYBIND11_MODULE(_vlab, m) {
  m.doc() = "Volterra limit-theorem laboratory: kernels, chaos expansions, "
            "rough lifts, limit matrices and fast-slow homogenization";

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_static("exp_ou", &KernelSpec::exp_ou, py::arg("rate") = 1.0,
                  py::arg("unit_variance") = false, py::arg("n") = 1)
      .def_static("fbm_increment", &KernelSpec::fbm_increment, py::arg("hurst"),
                  py::arg("n") = 1)
      .def_static("fou", &KernelSpec::fou, py::arg("hurst"), py::arg("n") = 1)
      .def("n", &KernelSpec::n)
      .def("beta", &KernelSpec::beta)
      .def("theta", &KernelSpec::theta)
      .def("variance", &KernelSpec::variance)
      .def("set_decay", &KernelSpec::set_decay, py::arg("beta"), py::arg("theta"))
      .def("scalar_eval", &KernelSpec::scalar_eval, py::arg("t"))
      .def("scalar_covariance", &KernelSpec::scalar_covariance, py::arg("lag"))
      .def("tail_energy", &KernelSpec::tail_energy, py::arg("t"))
      .def("describe", &KernelSpec::describe);

  m.def("simulate", &simulate, py::arg("kernel"), py::arg("span"),
        py::arg("step"), py::arg("n_paths"), py::arg("seed"),
        py::arg("threads") = 1,
        "Stationary ensemble; list of (count x n) arrays, deterministic in "
        "(seed, path index)");

  m.def("hermite", &hermite_1d, py::arg("m"), py::arg("x"));
  m.def("hermite_multi",
        [](const std::vector<int>& l, const Eigen::VectorXd& x) {
          return hermite_multi(to_index(l), x);
        },
        py::arg("index"), py::arg("x"));

  py::class_<HermiteExpansion>(m, "HermiteExpansion")
      .def_property_readonly("coeffs", &coeff_dict)
      .def_property_readonly("l2_norm2",
                             [](const HermiteExpansion& e) { return e.l2_norm2; })
      .def_property_readonly("residual",
                             [](const HermiteExpansion& e) { return e.residual; })
      .def("rank", &HermiteExpansion::rank, py::arg("coeff_tol") = -1.0)
      .def("evaluate", &HermiteExpansion::evaluate, py::arg("z"));

  m.def("expand", &expand_py, py::arg("G"), py::arg("sigma"),
        py::arg("degree_cap"), py::arg("quadrature_order") = 0,
        "Hermite coefficients of a callable against N(0, sigma)");

  py::class_<Observable>(m, "Observable")
      .def_static("hermite",
                  [](const std::vector<int>& l) {
                    return Observable::hermite(to_index(l));
                  },
                  py::arg("index"))
      .def_static("generating", &Observable::generating, py::arg("a"),
                  py::arg("axis") = 0)
      .def_static("sine", &Observable::sine, py::arg("freq") = 1.0,
                  py::arg("axis") = 0)
      .def_static("cosine", &Observable::cosine, py::arg("freq") = 1.0,
                  py::arg("axis") = 0)
      .def("__call__", &Observable::operator(), py::arg("y"));

  m.def("expand_observable",
        [](const Observable& g, const KernelSpec& kernel, int cap) {
          const Eigen::MatrixXd sigma =
              kernel.variance() *
              Eigen::MatrixXd::Identity(kernel.n(), kernel.n());
          return expand(g.fn, sigma, cap);
        },
        py::arg("observable"), py::arg("kernel"), py::arg("degree_cap"));

  py::class_<ScaledFunctionalPath>(m, "ScaledFunctionalPath")
      .def_property_readonly(
          "values", [](const ScaledFunctionalPath& p) { return p.values; })
      .def_property_readonly("times", [](const ScaledFunctionalPath& p) {
        Eigen::VectorXd t(p.out_grid.count);
        for (int k = 0; k < p.out_grid.count; ++k) t(k) = p.out_grid.time(k);
        return t;
      });

  m.def("scaled_path",
        [](const Eigen::MatrixXd& fine_g, double fast_step, double eps,
           double t_final, double out_step) {
          return scaled_path(fine_g, fast_step, eps,
                             PathGrid::make(0.0, t_final, out_step));
        },
        py::arg("fine_g"), py::arg("fast_step"), py::arg("epsilon"),
        py::arg("t_final"), py::arg("out_step"));

  py::class_<RoughLift>(m, "RoughLift")
      .def_property_readonly("base", [](const RoughLift& l) { return l.base; })
      .def_property_readonly("areas", [](const RoughLift& l) { return l.area0; })
      .def("area", &RoughLift::area, py::arg("s_idx"), py::arg("t_idx"));

  m.def("lift_discrete", &lift_discrete, py::arg("path"));
  m.def("chen_defect", &chen_defect, py::arg("lift"), py::arg("s_idx"),
        py::arg("u_idx"), py::arg("t_idx"));

  m.def("limit_matrices",
        [](const std::vector<HermiteExpansion>& exps, const KernelSpec& kernel,
           double horizon, double step) {
          return limits_dict(analytic_limits(exps, kernel, horizon, step));
        },
        py::arg("expansions"), py::arg("kernel"), py::arg("horizon") = 20.0,
        py::arg("step") = 0.01,
        "Lambda, Upsilon^2, Xi and the PSD root from the analytic lag table");

  py::class_<SpatialFn>(m, "SpatialFn")
      .def_static("sine", &SpatialFn::sine, py::arg("freq") = 1.0)
      .def_static("cosine", &SpatialFn::cosine, py::arg("freq") = 1.0)
      .def_static("polynomial", &SpatialFn::polynomial, py::arg("coeffs"))
      .def_static("bump", &SpatialFn::bump, py::arg("radius"))
      .def_static("one", &SpatialFn::one)
      .def("__call__",
           [](const SpatialFn& f, double x, int k) { return f.eval(x, k); },
           py::arg("x"), py::arg("deriv") = 0);

  py::class_<FieldModel>(m, "FieldModel")
      .def(py::init<>())
      .def("add_term",
           [](FieldModel& f, const SpatialFn& h, const Observable& g) {
             f.terms.push_back({h, g});
           },
           py::arg("spatial"), py::arg("observable"))
      .def_property(
          "spatial_grid", [](const FieldModel& f) { return f.spatial_grid; },
          [](FieldModel& f, std::vector<double> g) {
            f.spatial_grid = std::move(g);
          })
      .def("eval", &FieldModel::eval, py::arg("x"), py::arg("y"),
           py::arg("x_deriv") = 0);

  m.def("integrate_fast_slow",
        [](const FieldModel& field, const Eigen::MatrixXd& fast_path,
           double h_fast, double eps, double x0, double substep) {
          const auto sp =
              integrate_fast_slow(field, fast_path, h_fast, eps, x0, substep);
          return py::make_tuple(sp.values, sp.blown_up);
        },
        py::arg("field"), py::arg("fast_path"), py::arg("h_fast"),
        py::arg("epsilon"), py::arg("x0"), py::arg("substep") = 1.0);

  py::class_<EffectiveModel>(m, "EffectiveModel")
      .def_property_readonly("grid",
                             [](const EffectiveModel& e) { return e.grid; })
      .def_property_readonly("gamma",
                             [](const EffectiveModel& e) { return e.gamma; })
      .def_property_readonly("sigma",
                             [](const EffectiveModel& e) { return e.sigma; })
      .def("gamma_at", &EffectiveModel::gamma_at, py::arg("x"))
      .def("sigma_at", &EffectiveModel::sigma_at, py::arg("x"), py::arg("z"));

  m.def("effective_coefficients",
        [](const FieldModel& field, const KernelSpec& kernel, double horizon,
           double step, int cap) {
          std::vector<double> r_grid;
          const int q = static_cast<int>(std::llround(horizon / step));
          for (int k = 0; k <= q; ++k) r_grid.push_back(step * k);
          return effective_coefficients(field, kernel, r_grid, nullptr, cap);
        },
        py::arg("field"), py::arg("kernel"), py::arg("horizon") = 20.0,
        py::arg("step") = 0.01, py::arg("degree_cap") = 8);

  m.def("kunita_npoint_euler",
        [](const EffectiveModel& model, const std::vector<double>& x0s, double T,
           double dt, std::uint64_t seed) {
          return kunita_npoint_euler(model, x0s, T, dt, seed).values;
        },
        py::arg("model"), py::arg("x0s"), py::arg("T"), py::arg("dt"),
        py::arg("seed"));

  m.def("limit_flow_compare",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
           std::uint64_t seed, int permutations, double bias) {
          const auto rep = limit_flow_compare(a, b, seed, permutations, bias);
          py::dict d;
          d["pass"] = rep.pass;
          d["energy_statistic"] = rep.energy.statistic;
          d["energy_p"] = rep.energy.p_value;
          return d;
        },
        py::arg("eps_sample"), py::arg("limit_sample"), py::arg("seed") = 2024,
        py::arg("permutations") = 200, py::arg("bias_allowance") = 0.0);

  m.def("energy_distance", &energy_distance, py::arg("x"), py::arg("y"));
}
