#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "canonflow/error.hpp"
#include "canonflow/flowcore.hpp"
#include "canonflow/gridspace.hpp"
#include "canonflow/hamiltonians.hpp"
#include "canonflow/metricmap.hpp"
#include "canonflow/propagators.hpp"
#include "canonflow/scenario.hpp"
#include "canonflow/verify.hpp"

namespace py = pybind11;
using namespace canonflow;
using namespace pybind11::literals;

namespace {

PyObject* g_error_type = nullptr;

template <class Range>
auto to_array(const Range& v) {
  using T = std::remove_cv_t<typename Range::value_type>;
  py::array_t<T> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<cplx> from_array(const py::array_t<cplx, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw Error(ErrorKind::InvalidArgument, "gridspace", "values must be one-dimensional");
  return {a.data(), a.data() + a.size()};
}

py::dict trajectory_arrays(const Trajectory& traj) {
  const std::size_t n = traj.rows.size();
  std::vector<double> t(n), norm(n), fid(n), xm(n), pm(n), en(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = traj.rows[k];
    t[k] = r.t, norm[k] = r.norm, fid[k] = r.fidelity_vs_exact;
    xm[k] = r.x_mean, pm[k] = r.p_mean, en[k] = r.energy;
  }
  return py::dict("t"_a = to_array(t), "norm"_a = to_array(norm), "fidelity_vs_exact"_a = to_array(fid),
                  "x_mean"_a = to_array(xm), "p_mean"_a = to_array(pm), "energy"_a = to_array(en));
}

// Scalar and elementwise-array overloads of fn(f, eps, x).
template <class Fn>
void def_pointwise(py::module_& m, const char* name, Fn fn) {
  m.def(name, fn, "f"_a, "eps"_a, "x"_a);
  m.def(
      name,
      [fn](const GeneratorSpec& f, double eps, const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        py::array_t<double> out(std::vector<py::ssize_t>(x.shape(), x.shape() + x.ndim()));
        const double* in = x.data();
        double* dst = out.mutable_data();
        for (py::ssize_t k = 0; k < x.size(); ++k) dst[k] = fn(f, eps, in[k]);
        return out;
      },
      "f"_a, "eps"_a, "x"_a);
}

py::dict check_dict(const CheckResult& r) {
  py::list metrics;
  for (const auto& m : r.metrics) {
    metrics.append(py::dict("name"_a = m.name, "value"_a = m.value, "bound"_a = m.bound,
                            "comparison"_a = m.upper ? "<=" : ">=", "passed"_a = m.passed()));
  }
  return py::dict("id"_a = r.id, "module"_a = r.module, "title"_a = r.title, "passed"_a = r.passed,
                  "metrics"_a = metrics, "notes"_a = r.notes, "error"_a = r.error,
                  "wall_time"_a = r.wall_time);
}

}  // namespace

PYBIND11_MODULE(_canonflow, m) {
  m.attr("__version__") = std::string(kVersion);

  g_error_type = PyErr_NewException("canonflow.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = py::handle(g_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(g_error_type)(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("module") = e.module();
      PyErr_SetObject(g_error_type, exc.ptr());
    }
  });

  // flowcore
  py::class_<FlowOptions>(m, "FlowOptions")
      .def(py::init<>())
      .def_readwrite("rtol", &FlowOptions::rtol)
      .def_readwrite("atol", &FlowOptions::atol)
      .def_readwrite("blowup_bound", &FlowOptions::blowup_bound)
      .def_readwrite("max_steps", &FlowOptions::max_steps);

  py::class_<GeneratorSpec>(m, "Generator")
      .def_static("linear", &GeneratorSpec::linear)
      .def_static("quadratic", &GeneratorSpec::quadratic)
      .def_static("exp_decay", &GeneratorSpec::exp_decay, "lam"_a = 1.0)
      .def_static("constant", &GeneratorSpec::constant, "value"_a)
      .def_static(
          "custom",
          [](std::function<double(double)> f, std::optional<std::function<double(double)>> df, double lo,
             double hi, std::string label) {
            return GeneratorSpec::custom(std::move(f), df.value_or(nullptr), lo, hi, std::move(label));
          },
          "f"_a, "df"_a = py::none(), "lo"_a = -std::numeric_limits<double>::infinity(),
          "hi"_a = std::numeric_limits<double>::infinity(), "label"_a = "custom")
      .def("__call__", &GeneratorSpec::value)
      .def("value", &GeneratorSpec::value)
      .def("derivative", &GeneratorSpec::derivative)
      .def("as_custom", &GeneratorSpec::as_custom)
      .def_property_readonly("is_closed_form", &GeneratorSpec::is_closed_form)
      .def_property_readonly("name", &GeneratorSpec::name)
      .def("__repr__", [](const GeneratorSpec& g) { return "Generator(" + g.name() + ")"; });

  py::class_<FlowEvaluation>(m, "FlowEvaluation")
      .def_readonly("x_out", &FlowEvaluation::x_out)
      .def_readonly("jacobian", &FlowEvaluation::jacobian)
      .def_readonly("f2", &FlowEvaluation::f2)
      .def_readonly("domain_ok", &FlowEvaluation::domain_ok);

  def_pointwise(m, "flow_map", [](const GeneratorSpec& f, double eps, double x) { return flow_map(f, eps, x); });
  def_pointwise(m, "conjugation_factor",
                [](const GeneratorSpec& f, double eps, double x) { return conjugation_factor(f, eps, x); });
  def_pointwise(m, "flow_jacobian",
                [](const GeneratorSpec& f, double eps, double x) { return flow_jacobian(f, eps, x); });
  m.def("evaluate_flow", &evaluate_flow, "f"_a, "eps"_a, "x"_a, "options"_a = FlowOptions{});
  m.def("try_evaluate_flow", &try_evaluate_flow, "f"_a, "eps"_a, "x"_a, "options"_a = FlowOptions{});
  m.def("bracket_f3", &bracket_f3, "f1"_a, "f2"_a);

  // gridspace
  py::class_<Grid>(m, "Grid")
      .def(py::init<double, double, std::size_t>(), "x0"_a, "dx"_a, "n"_a)
      .def_static("over", &Grid::over, "lo"_a, "hi"_a, "n"_a)
      .def_property_readonly("x0", &Grid::x0)
      .def_property_readonly("dx", &Grid::dx)
      .def_property_readonly("size", &Grid::size)
      .def("__len__", &Grid::size)
      .def("points", [](const Grid& g) { return to_array(g.points()); })
      .def("__eq__", [](const Grid& a, const Grid& b) { return a == b; });

  py::class_<WaveFunction>(m, "WaveFunction")
      .def(py::init([](const Grid& g, const py::array_t<cplx, py::array::c_style | py::array::forcecast>& v) {
             return WaveFunction(g, from_array(v));
           }),
           "grid"_a, "values"_a)
      .def_property_readonly("grid", &WaveFunction::grid)
      .def_property_readonly("values", [](const WaveFunction& w) { return to_array(w.values()); })
      .def("norm", &WaveFunction::norm)
      .def("normalized", &WaveFunction::normalized);

  py::class_<GaussianState>(m, "GaussianState")
      .def(py::init([](cplx width, double center, double momentum, double phase) {
             GaussianState g{width, center, momentum, phase};
             g.validate();
             return g;
           }),
           "width"_a = cplx{1.0, 0.0}, "center"_a = 0.0, "momentum"_a = 0.0, "phase"_a = 0.0)
      .def_readwrite("width", &GaussianState::width)
      .def_readwrite("center", &GaussianState::center)
      .def_readwrite("momentum", &GaussianState::momentum)
      .def_readwrite("phase", &GaussianState::phase)
      .def("__call__", &GaussianState::operator())
      .def("rasterize", &GaussianState::rasterize, "grid"_a);

  py::enum_<Interpolant>(m, "Interpolant")
      .value("SPECTRAL", Interpolant::Spectral)
      .value("CUBIC_SPLINE", Interpolant::CubicSpline);

  py::class_<PointUnitaryOptions>(m, "PointUnitaryOptions")
      .def(py::init<>())
      .def_readwrite("interpolant", &PointUnitaryOptions::interpolant)
      .def_readwrite("leak_tolerance", &PointUnitaryOptions::leak_tolerance)
      .def_readwrite("edge_threshold", &PointUnitaryOptions::edge_threshold)
      .def_readwrite("edge_fraction", &PointUnitaryOptions::edge_fraction)
      .def_readwrite("flow", &PointUnitaryOptions::flow);

  m.def("inner_product", &inner_product, "a"_a, "b"_a);
  m.def("fidelity", &fidelity, "a"_a, "b"_a);
  m.def("phase_aligned_distance", &phase_aligned_distance, "a"_a, "b"_a);
  m.def("apply_point_unitary", &apply_point_unitary, "f"_a, "eps"_a, "psi"_a,
        "options"_a = PointUnitaryOptions{});
  m.def("apply_point_unitary_adjoint", &apply_point_unitary_adjoint, "f"_a, "eps"_a, "psi"_a,
        "options"_a = PointUnitaryOptions{});
  m.def("apply_quadratic_phase", &apply_quadratic_phase, "chi"_a, "psi"_a);
  m.def(
      "expectation",
      [](const std::string& kind, const WaveFunction& psi, double a, double b, double c) {
        Observable obs = kind == "x"             ? Observable::x()
                         : kind == "x2"          ? Observable::x2()
                         : kind == "p"           ? Observable::p()
                         : kind == "p2"          ? Observable::p2()
                         : kind == "anticomm_xp" ? Observable::anticomm_xp()
                         : kind == "quadratic"
                             ? Observable::quadratic(a, b, c)
                             : throw Error(ErrorKind::InvalidArgument, "gridspace", "unknown observable " + kind);
        const Expectation e = expectation(obs, psi);
        return py::make_tuple(e.value, e.imag_residue);
      },
      "kind"_a, "psi"_a, "a"_a = 0.0, "b"_a = 0.0, "c"_a = 0.0);
  m.def(
      "verify_bracket_identities",
      [](const GeneratorSpec& f1, const GeneratorSpec& f2, const Grid& grid, const std::vector<WaveFunction>& probes) {
        const BracketReport r = verify_bracket_identities(f1, f2, grid, probes);
        return py::make_tuple(r.first_residual, r.second_residual);
      },
      "f1"_a, "f2"_a, "grid"_a, "probes"_a);
  m.def("satisfies_edge_decay", &satisfies_edge_decay, "psi"_a, "threshold"_a = 1e-10, "fraction"_a = 0.02);

  // hamiltonians
  py::class_<QuadraticHamiltonian>(m, "QuadraticHamiltonian")
      .def(py::init([](double a, double b, double c) { return QuadraticHamiltonian{a, b, c}; }), "a"_a = 0.0,
           "b"_a = 0.0, "c"_a = 0.0)
      .def_static("standard_oscillator", &QuadraticHamiltonian::standard_oscillator, "mass"_a, "omega"_a)
      .def_readwrite("a", &QuadraticHamiltonian::a)
      .def_readwrite("b", &QuadraticHamiltonian::b)
      .def_readwrite("c", &QuadraticHamiltonian::c)
      .def("__add__", &QuadraticHamiltonian::operator+)
      .def("__eq__", [](const QuadraticHamiltonian& x, const QuadraticHamiltonian& y) { return x == y; })
      .def("__iter__", [](const QuadraticHamiltonian& h) { return py::iter(py::make_tuple(h.a, h.b, h.c)); })
      .def("__repr__", [](const QuadraticHamiltonian& h) {
        return "QuadraticHamiltonian(a=" + format_double(h.a) + ", b=" + format_double(h.b) +
               ", c=" + format_double(h.c) + ")";
      });

  py::class_<TimeProfile>(m, "TimeProfile")
      .def_static("constant", &TimeProfile::constant, "value"_a)
      .def_static("exponential", &TimeProfile::exponential, "initial"_a, "rate"_a)
      .def_static("sampled", &TimeProfile::sampled, "fn"_a, "timescale"_a = 1.0)
      .def("__call__", &TimeProfile::value)
      .def("derivatives", [](const TimeProfile& p, double t) {
        const Derivatives d = p.at(t);
        return py::make_tuple(d.value, d.first, d.second);
      });

  py::class_<MassProfile>(m, "MassProfile")
      .def(py::init([](TimeProfile p) { return MassProfile{std::move(p)}; }), "profile"_a)
      .def("__call__", [](const MassProfile& p, double t) { return p.at(t).value; });
  py::class_<FrequencyProfile>(m, "FrequencyProfile")
      .def(py::init([](TimeProfile p) { return FrequencyProfile{std::move(p)}; }), "profile"_a)
      .def("__call__", [](const FrequencyProfile& p, double t) { return p.at(t).value; });

  py::class_<SolvableFamily>(m, "SolvableFamily")
      .def(py::init([](double m0, double mu, double nu, double alpha, double Omega0, bool oscillatory) {
             SolvableFamily f{m0, mu, nu, alpha, Omega0, oscillatory};
             f.validate();
             return f;
           }),
           "m0"_a = 1.0, "mu"_a = 1.0, "nu"_a = 0.0, "alpha"_a = 0.0, "Omega0"_a = 1.0, "oscillatory"_a = false)
      .def_static("caldirola_kanai", &SolvableFamily::caldirola_kanai, "m0"_a, "gamma"_a, "Omega0"_a)
      .def_readwrite("m0", &SolvableFamily::m0)
      .def_readwrite("mu", &SolvableFamily::mu)
      .def_readwrite("nu", &SolvableFamily::nu)
      .def_readwrite("alpha", &SolvableFamily::alpha)
      .def_readwrite("Omega0", &SolvableFamily::Omega0)
      .def_readwrite("oscillatory", &SolvableFamily::oscillatory)
      .def_property_readonly("omega", &SolvableFamily::omega)
      .def("mass_profile", &SolvableFamily::mass_profile)
      .def("frequency_profile", &SolvableFamily::frequency_profile);

  m.def("dilation_transform", &dilation_transform, "h"_a, "eps"_a, "deps"_a);
  m.def("quadratic_phase_transform", &quadratic_phase_transform, "h"_a, "chi"_a, "dchi"_a);
  m.def("effective_frequency", &effective_frequency, "mass"_a, "omega"_a, "t"_a);
  m.def("omega_from_mass", &omega_from_mass, "mass"_a, "Omega0"_a, "t"_a);
  m.def(
      "solvable_mass",
      [](const SolvableFamily& f, double t) {
        const Derivatives d = solvable_mass(f, t);
        return py::make_tuple(d.value, d.first, d.second);
      },
      "family"_a, "t"_a);
  m.def("solvability_residual", &solvability_residual, "family"_a, "t"_a);
  m.def("reduced_hamiltonian", &reduced_hamiltonian, "mass"_a, "omega"_a, "t"_a, "m_ref"_a);

  // propagators
  py::class_<TimeGrid>(m, "TimeGrid")
      .def_static("span", &TimeGrid::span, "t0"_a, "t1"_a, "dt"_a, "stride"_a = 1)
      .def_readonly("t0", &TimeGrid::t0)
      .def_readonly("dt", &TimeGrid::dt)
      .def_readonly("steps", &TimeGrid::steps)
      .def_readonly("stride", &TimeGrid::stride)
      .def_property_readonly("end", &TimeGrid::end);

  py::class_<StepperReport>(m, "StepperReport")
      .def_readonly("steps", &StepperReport::steps)
      .def_readonly("max_norm_drift", &StepperReport::max_norm_drift)
      .def_readonly("max_residual", &StepperReport::max_residual)
      .def_readonly("wall_time", &StepperReport::wall_time);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("final_state", [](const Trajectory& t) { return t.final_state; })
      .def_readonly("report", &Trajectory::report)
      .def("__len__", [](const Trajectory& t) { return t.rows.size(); })
      .def("arrays", &trajectory_arrays);

  m.def(
      "split_step_propagate",
      [](const MassProfile& mass, const FrequencyProfile& omega, const WaveFunction& psi, const TimeGrid& time,
         std::optional<ExactReference> exact, double resolution_tail, double residual_bound) {
        SplitStepOptions opts;
        if (exact) opts.exact = *exact;
        opts.resolution_tail = resolution_tail;
        opts.residual_bound = residual_bound;
        return split_step_propagate(mass, omega, psi, time, opts);
      },
      "mass"_a, "omega"_a, "psi"_a, "time"_a, "exact"_a = py::none(), "resolution_tail"_a = 1e-10,
      "residual_bound"_a = std::numeric_limits<double>::infinity());
  m.def(
      "exact_solvable_propagate",
      [](const SolvableFamily& fam, const WaveFunction& psi0, double t, std::optional<double> m_ref) {
        ExactOptions opts;
        opts.m_ref = m_ref;
        return exact_solvable_propagate(fam, psi0, t, opts);
      },
      "family"_a, "psi0"_a, "t"_a, "m_ref"_a = py::none());
  m.def("gaussian_oscillator_evolve", &gaussian_oscillator_evolve, "g"_a, "M"_a, "Omega"_a, "t"_a);
  m.def("gaussian_exact_propagate", &gaussian_exact_propagate, "family"_a, "g0"_a, "t"_a,
        "m_ref"_a = py::none());
  m.def(
      "hermite_propagate",
      [](const WaveFunction& psi, double m0, double Omega0, double t) {
        return hermite_propagate(psi, HermiteBasis::fitted(psi.grid(), m0, Omega0), t);
      },
      "psi"_a, "m0"_a, "Omega0"_a, "t"_a);
  m.def(
      "crank_nicolson_curved",
      [](const MetricProfile& g, double mass, const WaveFunction& psi, const TimeGrid& time,
         std::optional<ExactReference> exact, int order) {
        CrankNicolsonOptions opts;
        opts.order = order;
        if (exact) opts.exact = *exact;
        return crank_nicolson_curved(g, mass, psi, time, opts);
      },
      "metric"_a, "mass"_a, "psi"_a, "time"_a, "exact"_a = py::none(), "order"_a = kDefaultStencilOrder);
  m.def("richardson_ratio", &richardson_ratio, "run"_a, "dt"_a);

  // metricmap
  py::class_<MetricProfile>(m, "MetricProfile")
      .def_static("constant", &MetricProfile::constant, "value"_a)
      .def_static(
          "from_function",
          [](std::function<double(double)> g, std::optional<std::function<double(double)>> dg, std::string label) {
            return MetricProfile::from_function(std::move(g), dg.value_or(nullptr), std::move(label));
          },
          "g"_a, "dg"_a = py::none(), "label"_a = "function")
      .def_static("from_table", &MetricProfile::from_table, "x"_a, "g"_a)
      .def_static("from_csv", py::overload_cast<const std::string&>(&MetricProfile::from_csv), "path"_a)
      .def("__call__", &MetricProfile::operator())
      .def("derivative", &MetricProfile::derivative)
      .def_property_readonly("label", &MetricProfile::label);

  py::class_<InverseResult>(m, "InverseResult")
      .def_readonly("generator", &InverseResult::generator)
      .def_readonly("flow", &InverseResult::flow)
      .def_readonly("inverse_flow", &InverseResult::inverse_flow)
      .def_readonly("lo", &InverseResult::lo)
      .def_readonly("hi", &InverseResult::hi)
      .def_readonly("eps", &InverseResult::eps);

  m.def("metric_from_generator", &metric_from_generator, "f"_a, "eps"_a, "options"_a = FlowOptions{});
  m.def(
      "generator_from_metric",
      [](const MetricProfile& g, double eps, double anchor, double lo, double hi, std::optional<double> image) {
        InverseOptions opts;
        opts.anchor_image = image;
        return generator_from_metric(g, eps, anchor, lo, hi, opts);
      },
      "metric"_a, "eps"_a, "anchor"_a, "lo"_a, "hi"_a, "anchor_image"_a = py::none());
  m.def(
      "verify_metric_equivalence",
      [](const GeneratorSpec& f, double eps, const WaveFunction& psi0, double T, double dt, double mass,
         bool halving_check) {
        EquivalenceOptions opts;
        opts.dt = dt;
        opts.mass = mass;
        opts.halving_check = halving_check;
        const EquivalenceReport r = verify_metric_equivalence(f, eps, psi0, T, opts);
        return py::dict("fidelity"_a = r.fidelity, "distance"_a = r.distance,
                        "distance_half_dt"_a = r.distance_half_dt, "halving_ratio"_a = r.halving_ratio,
                        "wall_time"_a = r.wall_time);
      },
      "f"_a, "eps"_a, "psi0"_a, "T"_a, "dt"_a = 1e-3, "mass"_a = 1.0, "halving_check"_a = false);

  // checks and scenarios
  m.def(
      "verify",
      [](const std::string& suite, unsigned threads) {
        const auto checks = suite_checks(suite);
        std::vector<CheckResult> results;
        {
          py::gil_scoped_release release;
          results = run_checks(checks, threads);
        }
        py::list out;
        for (const auto& r : results) out.append(check_dict(r));
        return out;
      },
      "suite"_a = "acceptance", "threads"_a = 1);
  m.def(
      "run_scenario",
      [](const std::string& path, const std::string& out_dir) {
        const Scenario s = load_scenario(path);
        std::optional<RunOutcome> r;
        {
          py::gil_scoped_release release;
          r = run_scenario(s, out_dir);
        }
        return py::dict("name"_a = s.name, "method"_a = std::string(to_string(s.method)),
                        "output_dir"_a = r->output_dir, "written"_a = r->written,
                        "trajectory"_a = r->trajectory);
      },
      "path"_a, "out_dir"_a = "");
}
