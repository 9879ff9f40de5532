#include "wdpg/experiments.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>

#include "wdpg/analysis.hpp"
#include "wdpg/errors.hpp"

namespace wdpg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::uint64_t run_seed(std::uint64_t master, std::int64_t run) {
  return derive_seed(master, stream_tag::kSeed, static_cast<std::uint64_t>(run));
}

std::uint64_t eval_seed(std::uint64_t master, std::int64_t run) {
  return derive_seed(master, stream_tag::kEval, static_cast<std::uint64_t>(run));
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train", "compare", "eval", "gradcheck", "variance", "complexity"};
  return names;
}

namespace {

/// JSON numbers cannot hold NaN/inf; those become strings.
json num(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

json vec(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

class OutputFiles {
 public:
  explicit OutputFiles(fs::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file '" + (dir_ / name).string() + "'");
    outcome_.files.emplace_back(name);
    return out;
  }

  void write_jsonl(const std::string& name, const std::vector<json>& lines) {
    auto out = open(name);
    for (const auto& l : lines) out << l.dump() << '\n';
  }

  CommandOutcome& outcome() { return outcome_; }

 private:
  fs::path dir_;
  CommandOutcome outcome_;
};

struct EvalPoint {
  std::int64_t k = 0;
  Vector theta;
  double grad_norm = 0.0;
  double step = 0.0;
  std::int64_t cumulative_transitions = 0;
  ReturnEstimate ret;
};

struct RunTrace {
  std::int64_t run = 0;
  std::vector<EvalPoint> points;
  bool diverged = false;
  std::string diagnostic;
};

StartRule default_start(const Environment& env) {
  StartRule rule;
  if (env.single_state()) {
    Rng unused(0);
    rule.fixed = env.reset(unused);
  }
  return rule;
}

RunTrace run_training(const ExperimentConfig& config, const Environment& env,
                      const GaussianPolicy& initial, EstimatorKind kind, std::int64_t run) {
  TrainConfig tc = config.train;
  tc.seed = run_seed(config.seed, run);
  tc.estimator = kind;
  const BatchPlan eval_plan{eval_seed(config.seed, run), stream_tag::kEval, 1, 4096};
  const auto& a = config.analysis;
  auto evaluate = [&](const Vector& theta) {
    return evaluate_return(env, initial.with_theta(theta), a.n_traj, tc.gamma, a.truncation_T, eval_plan);
  };

  RunTrace trace;
  trace.run = run;
  trace.points.push_back({0, initial.theta(), 0.0, 0.0, 0, evaluate(initial.theta())});
  auto observer = [&](const IterateRecord& rec, const Vector& next) {
    if (rec.k % tc.eval_every == 0 || rec.k == tc.iterations) {
      trace.points.push_back({rec.k, next, rec.grad.norm(), rec.step, rec.cumulative_transitions, evaluate(next)});
    }
  };
  TrainResult result = train(env, initial, tc, observer);
  trace.diverged = result.diverged;
  trace.diagnostic = result.diagnostic;
  return trace;
}

/// Independent runs fan out over config.workers; output order is by run index.
std::vector<RunTrace> run_all(const ExperimentConfig& config, const Environment& env,
                              const GaussianPolicy& initial, EstimatorKind kind) {
  const BatchPlan plan{config.seed, stream_tag::kSeed, config.workers, 1};
  return run_chunked<RunTrace>(config.analysis.seeds, plan,
                               [&](std::int64_t run, std::int64_t, std::int64_t, Rng&) {
                                 return run_training(config, env, initial, kind, run);
                               });
}

std::vector<Vector> check_points(const ExperimentConfig& config, const GaussianPolicy& policy) {
  std::vector<Vector> out;
  for (const auto& t : config.analysis.thetas) {
    if (static_cast<int>(t.size()) != policy.dim()) {
      throw ConfigError("field 'analysis.thetas': entry has dimension " + std::to_string(t.size()) +
                        ", policy has " + std::to_string(policy.dim()));
    }
    out.push_back(Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size())));
  }
  if (out.empty()) out.push_back(policy.theta());
  return out;
}

json return_json(const ReturnEstimate& r) {
  return {{"mean", num(r.mean)},
          {"std_error", num(r.std_error)},
          {"n_trajectories", r.n_trajectories},
          {"truncation_T", r.truncation_T},
          {"gamma", r.gamma},
          {"tail_bound", num(r.tail_bound)}};
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// --- train --------------------------------------------------------------------

CommandOutcome cmd_train(const ExperimentConfig& config) {
  const auto env = build_environment(config);
  const GaussianPolicy initial = build_policy(config, *env);
  OutputFiles files(config.out);
  const auto runs = run_all(config, *env, initial, config.train.estimator);

  {
    auto out = files.open("history.csv");
    out << "run,k";
    for (int i = 0; i < initial.dim(); ++i) out << ",theta_" << i;
    out << ",grad_norm,step,cumulative_transitions,return_mean,return_se\n";
    for (const auto& trace : runs) {
      for (const auto& p : trace.points) {
        out << trace.run << ',' << p.k;
        for (Eigen::Index i = 0; i < p.theta.size(); ++i) out << ',' << format_number(p.theta[i]);
        out << ',' << format_number(p.grad_norm) << ',' << format_number(p.step) << ','
            << p.cumulative_transitions << ',' << format_number(p.ret.mean) << ','
            << format_number(p.ret.std_error) << '\n';
      }
    }
  }

  std::vector<json> lines;
  for (const auto& trace : runs) {
    lines.push_back({{"run", trace.run},
                     {"seed", run_seed(config.seed, trace.run)},
                     {"estimator", std::string(to_string(config.train.estimator))},
                     {"initial_return", num(trace.points.front().ret.mean)},
                     {"final_return", num(trace.points.back().ret.mean)},
                     {"final_theta", vec(trace.points.back().theta)},
                     {"diverged", trace.diverged},
                     {"diagnostic", trace.diagnostic}});
    if (trace.diverged) files.outcome().gates_passed = false;
  }
  files.write_jsonl("train_summary.jsonl", lines);
  return files.outcome();
}

// --- compare ------------------------------------------------------------------

CommandOutcome cmd_compare(const ExperimentConfig& config) {
  const auto env = build_environment(config);
  const GaussianPolicy initial = build_policy(config, *env);
  OutputFiles files(config.out);
  const auto wd = run_all(config, *env, initial, EstimatorKind::WD);
  const auto sf = run_all(config, *env, initial, EstimatorKind::SF);

  std::vector<double> final_diff, improvement, final_wd, final_sf, initial_wd;
  bool any_diverged = false;
  {
    auto out = files.open("compare.csv");
    out << "iter,seed,return_wd,return_sf,diff\n";
    for (std::size_t r = 0; r < wd.size(); ++r) {
      const auto& pw = wd[r].points;
      const auto& ps = sf[r].points;
      const std::size_t n = std::min(pw.size(), ps.size());
      for (std::size_t i = 0; i < n; ++i) {
        out << pw[i].k << ',' << r << ',' << format_number(pw[i].ret.mean) << ','
            << format_number(ps[i].ret.mean) << ',' << format_number(pw[i].ret.mean - ps[i].ret.mean) << '\n';
      }
      any_diverged = any_diverged || wd[r].diverged || sf[r].diverged;
      final_wd.push_back(pw.back().ret.mean);
      final_sf.push_back(ps.back().ret.mean);
      initial_wd.push_back(pw.front().ret.mean);
      final_diff.push_back(pw.back().ret.mean - ps.back().ret.mean);
      improvement.push_back(pw.back().ret.mean - pw.front().ret.mean);
    }
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const std::int64_t B = config.analysis.bootstrap;
  Rng boot(derive_seed(config.seed, stream_tag::kBootstrap));
  // one-sided 95%: lower end of the central 90% interval
  const auto [imp_lo, imp_hi] = bootstrap_mean_ci(improvement, 0.90, B, boot);
  const auto [diff_lo, diff_hi] = bootstrap_mean_ci(final_diff, 0.95, B, boot);
  const double mean_imp = mean_of(improvement);
  const double mean_diff = mean_of(final_diff);

  json improves{{"check", "wd_final_exceeds_initial"},
                {"runs", final_wd.size()},
                {"initial_returns", initial_wd},
                {"final_returns", final_wd},
                {"mean_improvement", num(mean_imp)},
                {"lower_95_one_sided", num(imp_lo)},
                {"upper_95_one_sided", num(imp_hi)},
                {"any_diverged", any_diverged},
                {"pass", imp_lo > 0.0 && !any_diverged}};
  json ordering{{"check", "wd_vs_sf_final_return"},
                {"runs", final_wd.size()},
                {"final_returns_wd", final_wd},
                {"final_returns_sf", final_sf},
                {"mean_difference", num(mean_diff)},
                {"ci_95_low", num(diff_lo)},
                {"ci_95_high", num(diff_hi)},
                {"sign", mean_diff > 0 ? "positive" : (mean_diff < 0 ? "negative" : "zero")},
                {"pass", mean_diff >= 0.0}};
  files.write_jsonl("compare_summary.jsonl", {improves, ordering});
  files.outcome().gates_passed = improves["pass"].get<bool>() && ordering["pass"].get<bool>();
  return files.outcome();
}

// --- eval ---------------------------------------------------------------------

CommandOutcome cmd_eval(const ExperimentConfig& config) {
  const auto env = build_environment(config);
  const GaussianPolicy policy = build_policy(config, *env);
  OutputFiles files(config.out);
  const BatchPlan plan{eval_seed(config.seed, 0), stream_tag::kEval, config.workers, 4096};
  const ReturnEstimate r = evaluate_return(*env, policy, config.analysis.n_traj, config.train.gamma,
                                           config.analysis.truncation_T, plan);
  json line = return_json(r);
  line["check"] = "eval";
  line["theta"] = vec(policy.theta());
  line["pass"] = std::isfinite(r.mean);
  files.write_jsonl("eval.jsonl", {line});
  files.outcome().gates_passed = line["pass"].get<bool>();
  return files.outcome();
}

// --- gradcheck ----------------------------------------------------------------

CommandOutcome cmd_gradcheck(const ExperimentConfig& config) {
  const auto env = build_environment(config);
  const GaussianPolicy base = build_policy(config, *env);
  OutputFiles files(config.out);
  const auto& a = config.analysis;
  const double gamma = config.train.gamma;
  const EstimatorOptions options{gamma, config.train.common_random_numbers};
  const StartRule start = default_start(*env);

  std::vector<json> lines;
  bool all_pass = true;
  const auto points = check_points(config, base);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const GaussianPolicy policy = base.with_theta(points[i]);
    const BatchPlan oracle_plan{derive_seed(config.seed, stream_tag::kOracle, i), stream_tag::kOracle,
                                config.workers, 4096};
    const FiniteDifferenceGradient fd =
        finite_difference_gradient(*env, policy, a.fd_h, a.fd_n_eval, gamma, a.truncation_T, oracle_plan);
    for (EstimatorKind kind : {EstimatorKind::WD, EstimatorKind::SF}) {
      const BatchPlan plan{derive_seed(config.seed, stream_tag::kBatch, i),
                           stream_tag::kBatch + static_cast<std::uint64_t>(kind), config.workers, 4096};
      const GradientBatch batch = estimate_batch(kind, *env, policy, start, a.gradcheck_n, options, plan);
      const Vector mean = batch.mean();
      const Vector se = batch.std_error();
      const Vector combined = (se.array().square() + fd.std_error.array().square()).sqrt();
      const Vector z = ((mean - fd.gradient).array() / combined.array()).matrix();
      const bool pass = ((mean - fd.gradient).array().abs() <= 3.0 * combined.array()).all();
      all_pass = all_pass && pass;
      lines.push_back({{"check", "gradient_unbiased"},
                       {"estimator", std::string(to_string(kind))},
                       {"theta", vec(points[i])},
                       {"n", batch.size()},
                       {"measured", vec(mean)},
                       {"measured_se", vec(se)},
                       {"predicted", vec(fd.gradient)},
                       {"predicted_se", vec(fd.std_error)},
                       {"z", vec(z)},
                       {"tolerance_sigmas", 3},
                       {"pass", pass}});
    }
  }
  files.write_jsonl("gradcheck.jsonl", lines);
  files.outcome().gates_passed = all_pass;
  return files.outcome();
}

// --- variance -----------------------------------------------------------------

CommandOutcome cmd_variance(const ExperimentConfig& config) {
  const auto env = build_environment(config);
  const GaussianPolicy base = build_policy(config, *env);
  OutputFiles files(config.out);
  const auto& a = config.analysis;
  const EstimatorOptions options{config.train.gamma, config.train.common_random_numbers};
  const StartRule start = default_start(*env);

  std::vector<json> lines;
  bool all_pass = true;
  const auto points = check_points(config, base);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const GaussianPolicy policy = base.with_theta(points[i]);
    const BatchPlan plan{derive_seed(config.seed, stream_tag::kBatch, 1000 + i), stream_tag::kBatch,
                         config.workers, 4096};
    const VarianceComparison cmp = compare_variance(*env, policy, a.variance_n, start, options, plan, a.bootstrap, 0.99);
    all_pass = all_pass && cmp.wd_smaller;
    lines.push_back({{"check", "variance_ordering"},
                     {"theta", vec(points[i])},
                     {"n", a.variance_n},
                     {"trace_wd", num(cmp.wd.trace)},
                     {"trace_sf", num(cmp.sf.trace)},
                     {"variance_wd", vec(cmp.wd.per_coordinate_variance)},
                     {"variance_sf", vec(cmp.sf.per_coordinate_variance)},
                     {"trace_difference", num(cmp.trace_difference)},
                     {"upper_99", num(cmp.upper_confidence)},
                     {"bootstrap_resamples", cmp.bootstrap_resamples},
                     {"bound_wd", num(cmp.wd.bound)},
                     {"bound_sf_density", num(cmp.sf.bound)},
                     {"bound_sf_score", num(cmp.sf.bound_alt)},
                     {"g_wd", num(cmp.wd.constants.g_wd)},
                     {"g_sf_density", num(cmp.wd.constants.g_sf_density)},
                     {"g_sf_score", num(cmp.wd.constants.g_sf_score)},
                     {"g_ratio_measured", num(cmp.constant_ratio)},
                     {"g_ratio_reference", 1.0 / (2.0 * std::numbers::pi)},
                     {"note", "bounds and constant ratio are reported, not asserted"},
                     {"pass", cmp.wd_smaller}});
  }
  files.write_jsonl("variance.jsonl", lines);
  files.outcome().gates_passed = all_pass;
  return files.outcome();
}

// --- complexity ---------------------------------------------------------------

CommandOutcome cmd_complexity(const ExperimentConfig& config) {
  const auto env = build_environment(config);
  const GaussianPolicy initial = build_policy(config, *env);
  OutputFiles files(config.out);
  TrainConfig tc = config.train;
  tc.iterations = config.analysis.complexity_iterations;
  tc.estimator = EstimatorKind::WD;
  tc.seed = run_seed(config.seed, 0);
  const TrainResult result = train(*env, initial, tc);
  const SampleComplexityStats s = sample_complexity_stats(result.history, tc.gamma);
  const double tolerance = 3.0 * s.predicted_sd / std::sqrt(static_cast<double>(s.iterations));
  const bool pass = !result.diverged && std::abs(s.mean_per_iter - s.predicted) <= tolerance;

  files.write_jsonl(
      "complexity.jsonl",
      {{{"check", "sample_accounting"},
        {"gamma", tc.gamma},
        {"iterations", s.iterations},
        {"measured", num(s.mean_per_iter)},
        {"measured_se", num(s.std_error)},
        {"predicted", num(s.predicted)},
        {"exclusive_horizon", num(s.exclusive_horizon)},
        {"tolerance", num(tolerance)},
        {"note",
         "each rollout sums T+1 rewards, so the per-iteration count is 2/(1-gamma) = (1+gamma)/(1-gamma) + 1"},
        {"cumulative_transitions", result.history.back().cumulative_transitions},
        {"diverged", result.diverged},
        {"pass", pass}}});
  {
    auto out = files.open("stationarity.csv");
    out << "k,running_min_grad_norm_sq\n";
    for (const auto& [k, v] : stationarity_trace(result.history)) out << k << ',' << format_number(v) << '\n';
  }
  files.outcome().gates_passed = pass;
  return files.outcome();
}

// --- dispatch -------------------------------------------------------------------

int run_command(std::string_view command, const ExperimentConfig& config) {
  using Cmd = CommandOutcome (*)(const ExperimentConfig&);
  Cmd fn = nullptr;
  if (command == "train") fn = cmd_train;
  else if (command == "compare") fn = cmd_compare;
  else if (command == "eval") fn = cmd_eval;
  else if (command == "gradcheck") fn = cmd_gradcheck;
  else if (command == "variance") fn = cmd_variance;
  else if (command == "complexity") fn = cmd_complexity;
  if (!fn) {
    std::cerr << "unknown command '" << command << "'\n";
    return kExitUsage;
  }

  const fs::path dir(config.out);
  try {
    fs::create_directories(dir);
    const fs::path probe = dir / ".write_probe";
    { std::ofstream p(probe); if (!p || !(p << "x")) throw std::runtime_error("not writable"); }
    fs::remove(probe);
  } catch (const std::exception& e) {
    std::cerr << "output directory '" << dir.string() << "' is not writable: " << e.what() << '\n';
    return kExitUsage;
  }

  json manifest{{"command", std::string(command)},
                {"version", WDPG_VERSION},
                {"config", to_json(config)},
                {"started_at", iso_now()}};
  json seeds = json::array();
  for (std::int64_t r = 0; r < config.analysis.seeds; ++r) {
    seeds.push_back({{"run", r}, {"train_seed", run_seed(config.seed, r)}, {"eval_seed", eval_seed(config.seed, r)}});
  }
  manifest["seeds"] = seeds;

  int code = kExitOk;
  CommandOutcome outcome;
  try {
    config.validate();
    outcome = fn(config);
    code = outcome.gates_passed ? kExitOk : kExitGateFailed;
    manifest["status"] = outcome.gates_passed ? "ok" : "gate_failed";
  } catch (const ConfigError& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    code = kExitUsage;
  } catch (const PreconditionError& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    code = kExitUsage;
  } catch (const std::exception& e) {
    manifest["status"] = "error";
    manifest["error"] = e.what();
    code = kExitGateFailed;
  }
  if (manifest.contains("error")) std::cerr << "error: " << manifest["error"].get<std::string>() << '\n';

  json inventory = json::array();
  for (const auto& f : outcome.files) {
    std::error_code ec;
    const auto size = fs::file_size(dir / f, ec);
    inventory.push_back({{"name", f.string()}, {"bytes", ec ? 0 : size}});
  }
  manifest["files"] = inventory;
  manifest["finished_at"] = iso_now();
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  out << manifest.dump() << '\n';
  return code;
}

}  // namespace wdpg
