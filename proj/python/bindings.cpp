#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wdpg/analysis.hpp"
#include "wdpg/errors.hpp"
#include "wdpg/config.hpp"
#include "wdpg/experiments.hpp"

namespace py = pybind11;
using namespace wdpg;

namespace {

EnvState to_state(const std::vector<double>& coords) {
  if (coords.empty() || coords.size() > static_cast<std::size_t>(kMaxStateDim)) {
    throw PreconditionError("state must have between 1 and " + std::to_string(kMaxStateDim) + " coordinates");
  }
  return EnvState(Eigen::Map<const Eigen::VectorXd>(coords.data(), static_cast<Eigen::Index>(coords.size())));
}

std::vector<double> from_state(const EnvState& s) { return {s.coords.data(), s.coords.data() + s.coords.size()}; }

StartRule start_rule(const std::optional<std::vector<double>>& start) {
  StartRule rule;
  if (start) rule.fixed = to_state(*start);
  return rule;
}

BatchPlan plan_for(std::uint64_t seed, int workers, std::uint64_t tag = stream_tag::kBatch) {
  return BatchPlan{seed, tag, workers, 4096};
}

EstimatorKind kind_of(const std::string& name) { return parse_estimator_kind(name); }

}  // namespace

PYBIND11_MODULE(_wdpg, m) {
  m.doc() = "Weak-derivative policy gradients for Gaussian policies";
  m.attr("__version__") = WDPG_VERSION;

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &Rng::uniform_open)
      .def("normal", &Rng::normal);

  // Environments --------------------------------------------------------------
  py::class_<PendulumParams>(m, "PendulumParams")
      .def(py::init<>())
      .def_readwrite("gravity", &PendulumParams::gravity)
      .def_readwrite("mass", &PendulumParams::mass)
      .def_readwrite("length", &PendulumParams::length)
      .def_readwrite("dt", &PendulumParams::dt)
      .def_readwrite("max_torque", &PendulumParams::max_torque)
      .def_readwrite("max_speed", &PendulumParams::max_speed)
      .def("reward_bound", &PendulumParams::reward_bound);

  m.def("wrap_angle", &wrap_angle, py::arg("angle"));
  m.def("pendulum_reward", &pendulum_reward, py::arg("angle"), py::arg("ang_vel"), py::arg("torque"),
        py::arg("params") = PendulumParams{});
  m.def(
      "pendulum_step",
      [](const std::vector<double>& state, double torque, const PendulumParams& p) {
        const StepResult r = pendulum_step(to_state(state), torque, p);
        return py::make_tuple(from_state(r.next), r.reward);
      },
      py::arg("state"), py::arg("torque"), py::arg("params") = PendulumParams{});

  py::class_<Environment, std::shared_ptr<Environment>>(m, "Environment")
      .def_property_readonly("name", &Environment::name)
      .def_property_readonly("state_dim", [](const Environment& e) { return e.spec().state_dim; })
      .def_property_readonly("reward_bound", [](const Environment& e) { return e.spec().reward_bound; })
      .def("reset", [](const Environment& e, Rng& rng) { return from_state(e.reset(rng)); }, py::arg("rng"))
      .def(
          "step",
          [](const Environment& e, const std::vector<double>& s, double a) {
            const StepResult r = e.step(to_state(s), a);
            return py::make_tuple(from_state(r.next), r.reward);
          },
          py::arg("state"), py::arg("action"));

  m.def(
      "make_environment",
      [](const std::string& name, const PendulumParams& p) {
        return std::const_pointer_cast<Environment>(make_environment(name, p));
      },
      py::arg("name"), py::arg("pendulum") = PendulumParams{});

  m.def("sample_horizon", &sample_horizon, py::arg("gamma"), py::arg("rng"));

  // Policy ----------------------------------------------------------------------
  py::class_<GaussianPolicy>(m, "GaussianPolicy")
      .def(py::init([](const Vector& theta, double sigma, const std::string& features, int state_dim) {
             return GaussianPolicy(theta, sigma, make_feature_map(features, state_dim));
           }),
           py::arg("theta"), py::arg("sigma") = 1.0, py::arg("features") = "pendulum", py::arg("state_dim") = 1)
      .def_property_readonly("theta", &GaussianPolicy::theta)
      .def_property_readonly("sigma", &GaussianPolicy::sigma)
      .def_property_readonly("features", [](const GaussianPolicy& p) { return p.features().name(); })
      .def("with_theta", &GaussianPolicy::with_theta, py::arg("theta"))
      .def("mean", [](const GaussianPolicy& p, const std::vector<double>& x) { return p.mean(to_state(x)); })
      .def("sample", [](const GaussianPolicy& p, const std::vector<double>& x, Rng& rng) {
        return p.sample(to_state(x), rng);
      })
      .def("score", [](const GaussianPolicy& p, const std::vector<double>& x, double a) {
        return p.score(to_state(x), a);
      })
      .def("density", [](const GaussianPolicy& p, const std::vector<double>& x, double a) {
        return p.density(to_state(x), a);
      });

  py::enum_<Component>(m, "Component")
      .value("POSITIVE", Component::Positive)
      .value("NEGATIVE", Component::Negative);

  py::class_<JordanPair>(m, "JordanPair")
      .def_readonly("g", &JordanPair::g)
      .def_readonly("mean", &JordanPair::mean)
      .def_readonly("sigma", &JordanPair::sigma)
      .def("sample", [](const JordanPair& j, Component c, Rng& rng) { return j.sample(c, rng); })
      .def("density", &JordanPair::density, py::arg("a"), py::arg("component"));

  m.def(
      "jordan_decompose",
      [](const GaussianPolicy& p, const std::vector<double>& x) { return jordan_decompose(p, to_state(x)); },
      py::arg("policy"), py::arg("state"));

  // Estimators ----------------------------------------------------------------
  py::class_<GradientBatch>(m, "GradientBatch")
      .def_property_readonly("kind", [](const GradientBatch& b) { return std::string(to_string(b.kind)); })
      .def_readonly("samples", &GradientBatch::samples)
      .def_readonly("transitions", &GradientBatch::transitions)
      .def("mean", &GradientBatch::mean)
      .def("variance", &GradientBatch::variance)
      .def("std_error", &GradientBatch::std_error);

  m.def(
      "estimate_batch",
      [](const std::string& kind, const Environment& env, const GaussianPolicy& policy, std::int64_t n,
         double gamma, std::uint64_t seed, std::optional<std::vector<double>> start, bool crn, int workers) {
        py::gil_scoped_release release;
        return estimate_batch(kind_of(kind), env, policy, start_rule(start), n, {gamma, crn},
                              plan_for(seed, workers));
      },
      py::arg("kind"), py::arg("env"), py::arg("policy"), py::arg("n"), py::arg("gamma") = 0.97,
      py::arg("seed") = 0, py::arg("start") = py::none(), py::arg("common_random_numbers") = false,
      py::arg("workers") = 1);

  // Training --------------------------------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &TrainConfig::iterations)
      .def_readwrite("step_exponent", &TrainConfig::step_exponent)
      .def_readwrite("step_scale", &TrainConfig::step_scale)
      .def_readwrite("gamma", &TrainConfig::gamma)
      .def_property(
          "estimator", [](const TrainConfig& c) { return std::string(to_string(c.estimator)); },
          [](TrainConfig& c, const std::string& s) { c.estimator = kind_of(s); })
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("eval_every", &TrainConfig::eval_every)
      .def_property(
          "start_state", [](const TrainConfig& c) { return std::string(to_string(c.start_state)); },
          [](TrainConfig& c, const std::string& s) { c.start_state = parse_start_mode(s); })
      .def_readwrite("episode_len", &TrainConfig::episode_len)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("common_random_numbers", &TrainConfig::common_random_numbers)
      .def("validate", &TrainConfig::validate);

  py::class_<IterateRecord>(m, "IterateRecord")
      .def_readonly("k", &IterateRecord::k)
      .def_readonly("theta", &IterateRecord::theta)
      .def_readonly("grad", &IterateRecord::grad)
      .def_readonly("step", &IterateRecord::step)
      .def_readonly("phantom_transitions", &IterateRecord::phantom_transitions)
      .def_readonly("real_transitions", &IterateRecord::real_transitions)
      .def_readonly("cumulative_transitions", &IterateRecord::cumulative_transitions);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("history", &TrainResult::history)
      .def_readonly("final_theta", &TrainResult::final_theta)
      .def_readonly("diverged", &TrainResult::diverged)
      .def_readonly("diagnostic", &TrainResult::diagnostic);

  m.def("step_size", &step_size, py::arg("k"), py::arg("b"), py::arg("c") = 1.0);
  m.def(
      "train",
      [](const Environment& env, const GaussianPolicy& policy, const TrainConfig& config) {
        py::gil_scoped_release release;
        return train(env, policy, config);
      },
      py::arg("env"), py::arg("policy"), py::arg("config"));

  // Analysis --------------------------------------------------------------------
  py::class_<ReturnEstimate>(m, "ReturnEstimate")
      .def_readonly("mean", &ReturnEstimate::mean)
      .def_readonly("std_error", &ReturnEstimate::std_error)
      .def_readonly("n_trajectories", &ReturnEstimate::n_trajectories)
      .def_readonly("truncation_T", &ReturnEstimate::truncation_T)
      .def_readonly("tail_bound", &ReturnEstimate::tail_bound);

  m.def(
      "evaluate_return",
      [](const Environment& env, const GaussianPolicy& policy, std::int64_t n_traj, double gamma,
         std::int64_t truncation_T, std::uint64_t seed, int workers) {
        py::gil_scoped_release release;
        return evaluate_return(env, policy, n_traj, gamma, truncation_T, plan_for(seed, workers, stream_tag::kEval));
      },
      py::arg("env"), py::arg("policy"), py::arg("n_traj") = 50, py::arg("gamma") = 0.97,
      py::arg("truncation_T") = 500, py::arg("seed") = 0, py::arg("workers") = 1);

  m.def("truncation_tail_bound", &truncation_tail_bound, py::arg("gamma"), py::arg("reward_bound"),
        py::arg("truncation_T"));

  m.def(
      "finite_difference_gradient",
      [](const Environment& env, const GaussianPolicy& policy, double h, std::int64_t n_eval, double gamma,
         std::int64_t truncation_T, std::uint64_t seed, int workers) {
        FiniteDifferenceGradient fd;
        {
          py::gil_scoped_release release;
          fd = finite_difference_gradient(env, policy, h, n_eval, gamma, truncation_T,
                                          plan_for(seed, workers, stream_tag::kOracle));
        }
        return py::make_tuple(fd.gradient, fd.std_error);
      },
      py::arg("env"), py::arg("policy"), py::arg("h") = 1e-2, py::arg("n_eval") = 100000,
      py::arg("gamma") = 0.97, py::arg("truncation_T") = 500, py::arg("seed") = 0, py::arg("workers") = 1);

  py::class_<VarianceConstants>(m, "VarianceConstants")
      .def_readonly("g_wd", &VarianceConstants::g_wd)
      .def_readonly("g_sf_score", &VarianceConstants::g_sf_score)
      .def_readonly("g_sf_density", &VarianceConstants::g_sf_density);

  py::class_<VarianceReport>(m, "VarianceReport")
      .def_property_readonly("kind", [](const VarianceReport& r) { return std::string(to_string(r.kind)); })
      .def_readonly("mean", &VarianceReport::mean)
      .def_readonly("per_coordinate_variance", &VarianceReport::per_coordinate_variance)
      .def_readonly("trace", &VarianceReport::trace)
      .def_readonly("n", &VarianceReport::n)
      .def_readonly("constants", &VarianceReport::constants)
      .def_readonly("bound", &VarianceReport::bound)
      .def_readonly("bound_alt", &VarianceReport::bound_alt);

  py::class_<VarianceComparison>(m, "VarianceComparison")
      .def_readonly("wd", &VarianceComparison::wd)
      .def_readonly("sf", &VarianceComparison::sf)
      .def_readonly("trace_difference", &VarianceComparison::trace_difference)
      .def_readonly("upper_confidence", &VarianceComparison::upper_confidence)
      .def_readonly("confidence", &VarianceComparison::confidence)
      .def_readonly("wd_smaller", &VarianceComparison::wd_smaller)
      .def_readonly("constant_ratio", &VarianceComparison::constant_ratio);

  m.def(
      "gradient_variance",
      [](const Environment& env, const GaussianPolicy& policy, const std::string& kind, std::int64_t n,
         double gamma, std::uint64_t seed, std::optional<std::vector<double>> start, int workers) {
        py::gil_scoped_release release;
        return gradient_variance(env, policy, kind_of(kind), n, start_rule(start), {gamma, false},
                                 plan_for(seed, workers));
      },
      py::arg("env"), py::arg("policy"), py::arg("kind"), py::arg("n"), py::arg("gamma") = 0.97,
      py::arg("seed") = 0, py::arg("start") = py::none(), py::arg("workers") = 1);

  m.def(
      "compare_variance",
      [](const Environment& env, const GaussianPolicy& policy, std::int64_t n, double gamma, std::uint64_t seed,
         std::optional<std::vector<double>> start, std::int64_t resamples, double confidence, int workers) {
        py::gil_scoped_release release;
        return compare_variance(env, policy, n, start_rule(start), {gamma, false}, plan_for(seed, workers),
                                resamples, confidence);
      },
      py::arg("env"), py::arg("policy"), py::arg("n"), py::arg("gamma") = 0.97, py::arg("seed") = 0,
      py::arg("start") = py::none(), py::arg("bootstrap_resamples") = 1000, py::arg("confidence") = 0.99,
      py::arg("workers") = 1);

  py::class_<SampleComplexityStats>(m, "SampleComplexityStats")
      .def_readonly("iterations", &SampleComplexityStats::iterations)
      .def_readonly("mean_per_iter", &SampleComplexityStats::mean_per_iter)
      .def_readonly("std_error", &SampleComplexityStats::std_error)
      .def_readonly("predicted", &SampleComplexityStats::predicted)
      .def_readonly("exclusive_horizon", &SampleComplexityStats::exclusive_horizon)
      .def_readonly("predicted_sd", &SampleComplexityStats::predicted_sd);

  m.def(
      "sample_complexity_stats",
      [](const TrainResult& r, double gamma) { return sample_complexity_stats(r.history, gamma); },
      py::arg("result"), py::arg("gamma"));

  // Experiments -----------------------------------------------------------------
  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config_path,
         std::optional<std::string> out, std::optional<std::uint64_t> seed, std::optional<int> workers) {
        ExperimentConfig c = load_config(config_path);
        if (out) c.out = *out;
        if (seed) c.seed = *seed;
        if (workers) c.workers = *workers;
        py::gil_scoped_release release;
        return run_command(command, c);
      },
      py::arg("command"), py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
      py::arg("workers") = py::none());
}
