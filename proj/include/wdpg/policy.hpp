#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "wdpg/env.hpp"
#include "wdpg/rng.hpp"

namespace wdpg {

inline constexpr int kMaxFeatureDim = 16;
using FeatureVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxFeatureDim, 1>;

/// Named map from raw environment state to a d-dimensional feature vector,
/// d <= kMaxFeatureDim.
class FeatureMap {
 public:
  using Fn = std::function<FeatureVector(const EnvState&)>;

  FeatureMap(std::string name, int dim, Fn fn);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  /// Throws ConfigError on a wrong-length output, NumericError on non-finite entries.
  FeatureVector operator()(const EnvState& x) const;

 private:
  std::string name_;
  int dim_;
  Fn fn_;
};

/// "pendulum": (cos angle, sin angle, angular velocity).
/// "constant": (1).
/// "identity": the raw coordinates; needs state_dim.
FeatureMap make_feature_map(std::string_view name, int state_dim = 1);

/// mu_theta(.|x) = N(theta' phi(x), sigma^2) with fixed sigma.
class GaussianPolicy {
 public:
  GaussianPolicy(Vector theta, double sigma, FeatureMap features);

  const Vector& theta() const { return theta_; }
  double sigma() const { return sigma_; }
  const FeatureMap& features() const { return features_; }
  int dim() const { return static_cast<int>(theta_.size()); }

  GaussianPolicy with_theta(Vector theta) const;

  double mean(const EnvState& x) const;
  double sample(const EnvState& x, Rng& rng) const;
  /// grad_theta log mu_theta(a|x) = ((a - m)/sigma^2) phi(x)
  Vector score(const EnvState& x, double a) const;
  double density(const EnvState& x, double a) const;

 private:
  Vector theta_;
  double sigma_;
  FeatureMap features_;
};

enum class Component { Positive, Negative };

/// Weak-derivative decomposition of the Gaussian policy at one state:
///   grad_theta mu_theta(a|x) = g * (mu_plus(a) - mu_minus(a)),
///   g = phi(x) / sqrt(2 pi sigma^2).
/// mu_plus and mu_minus are Rayleigh laws reflected about the mean m and
/// live on a > m and a < m respectively. g is a vector, the two component
/// measures are scalar laws on the action axis.
struct JordanPair {
  Vector g;
  double mean = 0.0;
  double sigma = 1.0;

  double sample(Component c, Rng& rng) const;
  double sample_positive(Rng& rng) const { return sample(Component::Positive, rng); }
  double sample_negative(Rng& rng) const { return sample(Component::Negative, rng); }
  /// Zero outside the component's support (including at a == mean).
  double density(double a, Component c) const;
};

JordanPair jordan_decompose(const GaussianPolicy& policy, const EnvState& x);

}  // namespace wdpg
