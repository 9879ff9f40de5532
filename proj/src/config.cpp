#include "wdpg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "wdpg/errors.hpp"

namespace wdpg {

using nlohmann::json;

namespace {

/// Reads one JSON object, tracking the dotted path for error messages and
/// rejecting keys that were never read.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field '" + field(key) + "': wrong type (got " + std::string(it->type_name()) + ")");
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  Reader child(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), field(key));
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("field '" + field(k.c_str()) + "': unknown key");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : "field '" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

json to_json(const ExperimentConfig& c) {
  const auto& p = c.env.pendulum;
  const auto& t = c.train;
  const auto& a = c.analysis;
  return json{
      {"env",
       {{"name", c.env.name},
        {"pendulum",
         {{"gravity", p.gravity},
          {"mass", p.mass},
          {"length", p.length},
          {"dt", p.dt},
          {"max_torque", p.max_torque},
          {"max_speed", p.max_speed}}}}},
      {"policy", {{"features", c.policy.features}, {"sigma", c.policy.sigma}, {"theta0", c.policy.theta0}}},
      {"train",
       {{"iterations", t.iterations},
        {"step_exponent", t.step_exponent},
        {"step_scale", t.step_scale},
        {"gamma", t.gamma},
        {"estimator", std::string(to_string(t.estimator))},
        {"eval_every", t.eval_every},
        {"start_state", std::string(to_string(t.start_state))},
        {"episode_len", t.episode_len},
        {"batch_size", t.batch_size},
        {"common_random_numbers", t.common_random_numbers}}},
      {"analysis",
       {{"n_traj", a.n_traj},
        {"truncation_T", a.truncation_T},
        {"seeds", a.seeds},
        {"variance_n", a.variance_n},
        {"bootstrap", a.bootstrap},
        {"fd_h", a.fd_h},
        {"fd_n_eval", a.fd_n_eval},
        {"gradcheck_n", a.gradcheck_n},
        {"complexity_iterations", a.complexity_iterations},
        {"thetas", a.thetas}}},
      {"seed", c.seed},
      {"workers", c.workers},
      {"out", c.out},
  };
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  if (root.has("env")) {
    Reader env = root.child("env");
    env.get("name", c.env.name);
    if (env.has("pendulum")) {
      Reader p = env.child("pendulum");
      p.get("gravity", c.env.pendulum.gravity);
      p.get("mass", c.env.pendulum.mass);
      p.get("length", c.env.pendulum.length);
      p.get("dt", c.env.pendulum.dt);
      p.get("max_torque", c.env.pendulum.max_torque);
      p.get("max_speed", c.env.pendulum.max_speed);
      p.finish();
    }
    env.finish();
  }
  if (root.has("policy")) {
    Reader p = root.child("policy");
    p.get("features", c.policy.features);
    p.get("sigma", c.policy.sigma);
    p.get("theta0", c.policy.theta0);
    p.finish();
  }
  if (root.has("train")) {
    Reader t = root.child("train");
    t.get("iterations", c.train.iterations);
    t.get("step_exponent", c.train.step_exponent);
    t.get("step_scale", c.train.step_scale);
    t.get("gamma", c.train.gamma);
    std::string kind(to_string(c.train.estimator));
    t.get("estimator", kind);
    c.train.estimator = parse_estimator_kind(kind);
    t.get("eval_every", c.train.eval_every);
    std::string mode(to_string(c.train.start_state));
    t.get("start_state", mode);
    c.train.start_state = parse_start_mode(mode);
    t.get("episode_len", c.train.episode_len);
    t.get("batch_size", c.train.batch_size);
    t.get("common_random_numbers", c.train.common_random_numbers);
    t.finish();
  }
  if (root.has("analysis")) {
    Reader a = root.child("analysis");
    a.get("n_traj", c.analysis.n_traj);
    a.get("truncation_T", c.analysis.truncation_T);
    a.get("seeds", c.analysis.seeds);
    a.get("variance_n", c.analysis.variance_n);
    a.get("bootstrap", c.analysis.bootstrap);
    a.get("fd_h", c.analysis.fd_h);
    a.get("fd_n_eval", c.analysis.fd_n_eval);
    a.get("gradcheck_n", c.analysis.gradcheck_n);
    a.get("complexity_iterations", c.analysis.complexity_iterations);
    a.get("thetas", c.analysis.thetas);
    a.finish();
  }
  root.get("seed", c.seed);
  root.get("workers", c.workers);
  root.get("out", c.out);
  root.finish();
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (env.name != "pendulum" && env.name != "bandit" && env.name != "const" && env.name != "chain") {
    throw ConfigError("field 'env.name': unknown environment '" + env.name + "'");
  }
  env.pendulum.validate();
  if (!(policy.sigma > 0.0)) throw ConfigError("field 'policy.sigma': must be positive");
  train.validate();
  const auto& a = analysis;
  if (a.n_traj < 1) throw ConfigError("field 'analysis.n_traj': must be >= 1");
  if (a.truncation_T < 0) throw ConfigError("field 'analysis.truncation_T': must be >= 0");
  if (a.seeds < 1) throw ConfigError("field 'analysis.seeds': must be >= 1");
  if (a.variance_n < 2) throw ConfigError("field 'analysis.variance_n': must be >= 2");
  if (a.bootstrap < 1) throw ConfigError("field 'analysis.bootstrap': must be >= 1");
  if (!(a.fd_h > 0.0)) throw ConfigError("field 'analysis.fd_h': must be positive");
  if (a.fd_n_eval < 2) throw ConfigError("field 'analysis.fd_n_eval': must be >= 2");
  if (a.gradcheck_n < 2) throw ConfigError("field 'analysis.gradcheck_n': must be >= 2");
  if (a.complexity_iterations < 2) throw ConfigError("field 'analysis.complexity_iterations': must be >= 2");
  if (workers < 1) throw ConfigError("field 'workers': must be >= 1");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << "config parse error at line " << line << ", column " << col << ": " << e.what();
    throw ConfigError(msg.str());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::shared_ptr<const Environment> build_environment(const ExperimentConfig& config) {
  return make_environment(config.env.name, config.env.pendulum);
}

GaussianPolicy build_policy(const ExperimentConfig& config, const Environment& env) {
  FeatureMap features = make_feature_map(config.policy.features, env.spec().state_dim);
  Vector theta = Vector::Zero(features.dim());
  if (!config.policy.theta0.empty()) {
    theta = Eigen::Map<const Vector>(config.policy.theta0.data(),
                                     static_cast<Eigen::Index>(config.policy.theta0.size()));
  }
  return GaussianPolicy(std::move(theta), config.policy.sigma, std::move(features));
}

}  // namespace wdpg
