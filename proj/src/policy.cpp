#include "wdpg/policy.hpp"

#include <cmath>
#include <numbers>

#include "wdpg/errors.hpp"

namespace wdpg {

namespace {
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
}

FeatureMap::FeatureMap(std::string name, int dim, Fn fn)
    : name_(std::move(name)), dim_(dim), fn_(std::move(fn)) {
  if (dim_ <= 0 || dim_ > kMaxFeatureDim) {
    throw ConfigError("feature map '" + name_ + "' must have dimension in [1, " +
                      std::to_string(kMaxFeatureDim) + "]");
  }
}

FeatureVector FeatureMap::operator()(const EnvState& x) const {
  FeatureVector out = fn_(x);
  if (out.size() != dim_) {
    throw ConfigError("feature map '" + name_ + "' produced wrong length");
  }
  if (!out.allFinite()) throw NumericError("feature map '" + name_ + "' produced non-finite value");
  return out;
}

FeatureMap make_feature_map(std::string_view name, int state_dim) {
  if (name == "pendulum") {
    return FeatureMap("pendulum", 3, [](const EnvState& x) {
      if (x.dim() != 2) throw ConfigError("pendulum features need a (angle, velocity) state");
      FeatureVector f(3);
      f << std::cos(x[0]), std::sin(x[0]), x[1];
      return f;
    });
  }
  if (name == "constant") {
    return FeatureMap("constant", 1, [](const EnvState&) { return FeatureVector::Ones(1); });
  }
  if (name == "identity") {
    return FeatureMap("identity", state_dim, [](const EnvState& x) { return FeatureVector(x.coords); });
  }
  throw ConfigError("unknown feature map '" + std::string(name) + "'");
}

GaussianPolicy::GaussianPolicy(Vector theta, double sigma, FeatureMap features)
    : theta_(std::move(theta)), sigma_(sigma), features_(std::move(features)) {
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ConfigError("policy sigma must be positive");
  if (!theta_.allFinite()) throw NumericError("policy theta must be finite");
  if (theta_.size() != features_.dim()) {
    throw ConfigError("theta has dimension " + std::to_string(theta_.size()) + " but feature map '" +
                      features_.name() + "' has dimension " + std::to_string(features_.dim()));
  }
}

GaussianPolicy GaussianPolicy::with_theta(Vector theta) const {
  return GaussianPolicy(std::move(theta), sigma_, features_);
}

double GaussianPolicy::mean(const EnvState& x) const { return theta_.dot(features_(x)); }

double GaussianPolicy::sample(const EnvState& x, Rng& rng) const {
  return mean(x) + sigma_ * rng.normal();
}

Vector GaussianPolicy::score(const EnvState& x, double a) const {
  const FeatureVector phi = features_(x);
  return ((a - theta_.dot(phi)) / (sigma_ * sigma_)) * Vector(phi);
}

double GaussianPolicy::density(const EnvState& x, double a) const {
  const double z = (a - mean(x)) / sigma_;
  return kInvSqrt2Pi / sigma_ * std::exp(-0.5 * z * z);
}

double JordanPair::sample(Component c, Rng& rng) const {
  // inverse CDF of the Rayleigh law; uniform_open() excludes log(0)
  const double radius = sigma * std::sqrt(-2.0 * std::log(rng.uniform_open()));
  return c == Component::Positive ? mean + radius : mean - radius;
}

double JordanPair::density(double a, Component c) const {
  const double offset = c == Component::Positive ? a - mean : mean - a;
  if (!(offset > 0.0)) return 0.0;
  const double s2 = sigma * sigma;
  return offset / s2 * std::exp(-offset * offset / (2.0 * s2));
}

JordanPair jordan_decompose(const GaussianPolicy& policy, const EnvState& x) {
  const Vector phi = policy.features()(x);
  const double sigma = policy.sigma();
  JordanPair pair;
  pair.g = phi / std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
  pair.mean = policy.theta().dot(phi);
  pair.sigma = sigma;
  return pair;
}

}  // namespace wdpg
