#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "mfes/cartpole.hpp"
#include "mfes/config.hpp"
#include "mfes/entropy_search.hpp"
#include "mfes/errors.hpp"
#include "mfes/experiment.hpp"
#include "mfes/gp_model.hpp"
#include "mfes/lqr.hpp"
#include "mfes/optimizer.hpp"

namespace py = pybind11;
using namespace mfes;

namespace {

py::dict run_result_dict(const RunResult& result) {
  // Route through the canonical JSON schema so python sees the same keys as
  // the runlog.json files.
  const nlohmann::json doc = run_log_json(result);
  py::object loads = py::module_::import("json").attr("loads");
  return loads(doc.dump());
}

}  // namespace

PYBIND11_MODULE(_mfes, m) {
  m.doc() = "Multi-fidelity entropy-search optimization core";

  py::register_exception<ConditioningError>(m, "ConditioningError");
  py::register_exception<NotStabilizableError>(m, "NotStabilizableError");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::enum_<Fidelity>(m, "Fidelity")
      .value("SIMULATION", Fidelity::simulation)
      .value("PHYSICAL", Fidelity::physical);

  py::enum_<KernelVariant>(m, "KernelVariant")
      .value("RATIONAL_QUADRATIC", KernelVariant::rational_quadratic)
      .value("SQUARED_EXPONENTIAL", KernelVariant::squared_exponential);

  py::enum_<RepresenterStrategy>(m, "RepresenterStrategy")
      .value("UNIFORM_GRID", RepresenterStrategy::uniform_grid)
      .value("POSTERIOR_WEIGHTED_SAMPLE", RepresenterStrategy::posterior_weighted_sample);

  py::class_<ExtendedPoint>(m, "ExtendedPoint")
      .def(py::init([](Eigen::VectorXd theta, Fidelity delta) {
             return ExtendedPoint{std::move(theta), delta};
           }),
           py::arg("theta"), py::arg("delta") = Fidelity::physical)
      .def_readwrite("theta", &ExtendedPoint::theta)
      .def_readwrite("delta", &ExtendedPoint::delta);

  py::class_<BoxDomain>(m, "BoxDomain")
      .def(py::init<Eigen::VectorXd, Eigen::VectorXd>(), py::arg("lower"), py::arg("upper"))
      .def_readonly("lower", &BoxDomain::lower)
      .def_readonly("upper", &BoxDomain::upper)
      .def("contains", &BoxDomain::contains, py::arg("theta"), py::arg("tol") = 0.0)
      .def("dim", &BoxDomain::dim);

  py::class_<KernelSpec>(m, "KernelSpec")
      .def(py::init([](KernelVariant variant, double output_variance,
                       Eigen::VectorXd length_scales, double alpha) {
             return KernelSpec{variant, output_variance, std::move(length_scales), alpha};
           }),
           py::arg("variant"), py::arg("output_variance"), py::arg("length_scales"),
           py::arg("alpha") = 0.25)
      .def_readwrite("variant", &KernelSpec::variant)
      .def_readwrite("output_variance", &KernelSpec::output_variance)
      .def_readwrite("length_scales", &KernelSpec::length_scales)
      .def_readwrite("alpha", &KernelSpec::alpha)
      .def("__call__", &KernelSpec::operator());

  py::class_<CompositeKernel>(m, "CompositeKernel")
      .def(py::init([](KernelSpec sim, KernelSpec err) {
             return CompositeKernel{std::move(sim), std::move(err)};
           }),
           py::arg("sim"), py::arg("err"))
      .def_readwrite("sim", &CompositeKernel::sim)
      .def_readwrite("err", &CompositeKernel::err)
      .def("__call__", &CompositeKernel::operator());

  m.def("kernel_eval", &kernel_eval, py::arg("kernel"), py::arg("a"), py::arg("b"));

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<double, double>(), py::arg("eta_sim"), py::arg("eta_exp"))
      .def_readwrite("eta_sim", &NoiseModel::eta_sim)
      .def_readwrite("eta_exp", &NoiseModel::eta_exp);

  py::class_<MeanModel>(m, "MeanModel")
      .def(py::init<double, double>(), py::arg("m_sim"), py::arg("m_err"))
      .def_readwrite("m_sim", &MeanModel::m_sim)
      .def_readwrite("m_err", &MeanModel::m_err);

  py::class_<Observation>(m, "Observation")
      .def_readonly("at", &Observation::at)
      .def_readonly("value", &Observation::value);

  py::class_<GpModel>(m, "GpModel")
      .def(py::init<CompositeKernel, MeanModel, NoiseModel, std::vector<Observation>>(),
           py::arg("kernel"), py::arg("mean"), py::arg("noise"),
           py::arg("observations") = std::vector<Observation>{})
      .def("add_observation", &GpModel::add_observation, py::arg("at"), py::arg("value"))
      .def("posterior",
           [](const GpModel& gp, const std::vector<ExtendedPoint>& query) {
             return gp.posterior(query);
           },
           py::arg("query"))
      .def("posterior_marginals",
           [](const GpModel& gp, const std::vector<ExtendedPoint>& query) {
             return gp.posterior_marginals(query);
           },
           py::arg("query"))
      .def("posterior_at", &GpModel::posterior_at, py::arg("query"))
      .def("size", &GpModel::size)
      .def("jitter_used", &GpModel::jitter_used);

  py::class_<RepresenterGrid>(m, "RepresenterGrid")
      .def(py::init([](std::vector<Eigen::VectorXd> points) {
             return RepresenterGrid{std::move(points)};
           }),
           py::arg("points"))
      .def_readonly("points", &RepresenterGrid::points)
      .def("size", &RepresenterGrid::size);

  py::class_<EsSettings>(m, "EsSettings")
      .def(py::init<>())
      .def_readwrite("representers", &EsSettings::representers)
      .def_readwrite("pmin_samples", &EsSettings::pmin_samples)
      .def_readwrite("fantasies", &EsSettings::fantasies)
      .def_readwrite("strategy", &EsSettings::strategy)
      .def_readwrite("softmax_temperature", &EsSettings::softmax_temperature)
      .def_readwrite("max_representers", &EsSettings::max_representers)
      .def_readwrite("max_sample_budget", &EsSettings::max_sample_budget)
      .def_readwrite("refine_top", &EsSettings::refine_top)
      .def_readwrite("refine_sample_factor", &EsSettings::refine_sample_factor);

  py::class_<PminEstimate>(m, "PminEstimate")
      .def_readonly("grid", &PminEstimate::grid)
      .def_readonly("mass", &PminEstimate::mass)
      .def_readonly("entropy", &PminEstimate::entropy);

  py::class_<CandidateScore>(m, "CandidateScore")
      .def_readonly("theta", &CandidateScore::theta)
      .def_readonly("delta", &CandidateScore::delta)
      .def_readonly("entropy_gain", &CandidateScore::entropy_gain)
      .def_readonly("score", &CandidateScore::score);

  py::class_<AcquisitionResult>(m, "AcquisitionResult")
      .def_readonly("best_theta", &AcquisitionResult::best_theta)
      .def_readonly("best_delta", &AcquisitionResult::best_delta)
      .def_readonly("score", &AcquisitionResult::score)
      .def_readonly("table", &AcquisitionResult::table);

  py::class_<EffortModel>(m, "EffortModel")
      .def(py::init<double, double>(), py::arg("t_sim"), py::arg("t_exp"))
      .def_readwrite("t_sim", &EffortModel::t_sim)
      .def_readwrite("t_exp", &EffortModel::t_exp);

  m.def("build_representers", &build_representers, py::arg("domain"), py::arg("count"),
        py::arg("gp"), py::arg("strategy"), py::arg("seed"), py::arg("settings") = EsSettings{});
  m.def("shannon_entropy", &shannon_entropy, py::arg("mass"));
  m.def("estimate_pmin", &estimate_pmin, py::arg("gp"), py::arg("grid"), py::arg("samples"),
        py::arg("seed"));
  m.def("expected_entropy_change", &expected_entropy_change, py::arg("gp"), py::arg("candidate"),
        py::arg("grid"), py::arg("fantasies"), py::arg("samples"), py::arg("seed"),
        py::arg("max_sample_budget") = EsSettings{}.max_sample_budget);
  m.def("select_next", &select_next, py::arg("gp"), py::arg("candidates"), py::arg("efforts"),
        py::arg("grid"), py::arg("fantasies"), py::arg("samples"), py::arg("seed"),
        py::arg("include_simulation") = true, py::arg("refine_top") = 4,
        py::arg("refine_factor") = 8);
  m.def("best_guess", &best_guess, py::arg("gp"), py::arg("domain"));

  py::class_<CartPoleParams>(m, "CartPoleParams")
      .def(py::init<>())
      .def_readwrite("cart_mass", &CartPoleParams::cart_mass)
      .def_readwrite("pole_mass", &CartPoleParams::pole_mass)
      .def_readwrite("pole_length", &CartPoleParams::pole_length)
      .def_readwrite("gravity", &CartPoleParams::gravity)
      .def_readwrite("motor_gain", &CartPoleParams::motor_gain)
      .def_readwrite("cart_friction", &CartPoleParams::cart_friction)
      .def_readwrite("pole_damping", &CartPoleParams::pole_damping)
      .def_readwrite("dt", &CartPoleParams::dt)
      .def_readwrite("horizon", &CartPoleParams::horizon);

  py::class_<CartPoleState>(m, "CartPoleState")
      .def(py::init<>())
      .def(py::init([](double s, double psi, double s_dot, double psi_dot) {
             return CartPoleState{s, psi, s_dot, psi_dot};
           }),
           py::arg("s"), py::arg("psi"), py::arg("s_dot"), py::arg("psi_dot"))
      .def_readwrite("s", &CartPoleState::s)
      .def_readwrite("psi", &CartPoleState::psi)
      .def_readwrite("s_dot", &CartPoleState::s_dot)
      .def_readwrite("psi_dot", &CartPoleState::psi_dot)
      .def("vec", &CartPoleState::vec);

  py::class_<SafetyLimits>(m, "SafetyLimits")
      .def(py::init<>())
      .def_readwrite("cart_position", &SafetyLimits::cart_position)
      .def_readwrite("pole_angle", &SafetyLimits::pole_angle)
      .def_readwrite("voltage", &SafetyLimits::voltage);

  py::class_<RolloutResult>(m, "RolloutResult")
      .def_readonly("cost", &RolloutResult::cost)
      .def_readonly("stable", &RolloutResult::stable)
      .def_readonly("violation_step", &RolloutResult::violation_step)
      .def_property_readonly("trajectory", [](const RolloutResult& r) {
        py::list out;
        for (const auto& [x, u] : r.trajectory) out.append(py::make_tuple(x, u));
        return out;
      });

  m.def("step", &step, py::arg("params"), py::arg("x"), py::arg("u"));
  m.def("rollout", &rollout, py::arg("params"), py::arg("limits"), py::arg("gain"),
        py::arg("x0"), py::arg("penalty"), py::arg("noise_std"), py::arg("seed"));
  m.def("make_simulator_params", &make_simulator_params, py::arg("real"),
        py::arg("pole_mass_scale"), py::arg("frictionless"));

  py::class_<LinearModel>(m, "LinearModel")
      .def_readonly("A", &LinearModel::A)
      .def_readonly("B", &LinearModel::B)
      .def_readonly("dt", &LinearModel::dt);

  m.def("continuous_jacobians", &continuous_jacobians, py::arg("params"));
  m.def("linearize", &linearize, py::arg("params"));
  m.def("solve_dare", &solve_dare, py::arg("A"), py::arg("B"), py::arg("Wx"), py::arg("Wu"),
        py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def("dare_residual", &dare_residual, py::arg("A"), py::arg("B"), py::arg("Wx"),
        py::arg("Wu"), py::arg("P"));
  m.def("gain_from_theta",
        [](const Eigen::Vector2d& theta, const LinearModel& model, double tol, int max_iter) {
          return gain_from_theta(theta, model, tol, max_iter);
        },
        py::arg("theta"), py::arg("model"), py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def("spectral_radius", &spectral_radius, py::arg("matrix"));

  // Config-driven runs: load a config file and execute one run, returning the
  // run-log dictionary (same schema as runlog.json).
  m.def("run_from_config",
        [](const std::filesystem::path& config_path, std::uint64_t seed,
           const std::string& mode, const std::filesystem::path& output_dir) {
          const RunConfig config = load_config(config_path);
          const RunMode run_mode = mode == "es" ? RunMode::es : RunMode::mfes;
          const RunResult result = execute_run(config, run_mode, seed, output_dir);
          return run_result_dict(result);
        },
        py::arg("config_path"), py::arg("seed"), py::arg("mode") = "mfes",
        py::arg("output_dir") = std::filesystem::temp_directory_path() / "mfes_py_runs");
  m.def("validate_config", [](const std::filesystem::path& config_path) {
    load_config(config_path);
    return true;
  });
}
