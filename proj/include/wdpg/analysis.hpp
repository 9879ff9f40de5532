#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wdpg/estimator.hpp"
#include "wdpg/optimizer.hpp"

namespace wdpg {

struct ReturnEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_trajectories = 0;
  std::int64_t truncation_T = 0;
  double gamma = 0.0;
  /// gamma^(T+1) * M / (1 - gamma): worst-case discounted reward beyond T.
  double tail_bound = 0.0;
};

double truncation_tail_bound(double gamma, double reward_bound, std::int64_t truncation_T);

/// Smallest T with truncation_tail_bound(gamma, M, T) <= tolerance.
std::int64_t truncation_for_tolerance(double gamma, double reward_bound, double tolerance);

/// Discounted return of each of n trajectories, truncated after
/// t = truncation_T, started from env.reset(). Trajectory i's randomness
/// depends only on (plan, i), so two calls with the same plan use common
/// random numbers.
std::vector<double> discounted_returns(const Environment& env, const GaussianPolicy& policy,
                                       std::int64_t n_traj, double gamma, std::int64_t truncation_T,
                                       const BatchPlan& plan);

ReturnEstimate evaluate_return(const Environment& env, const GaussianPolicy& policy,
                               std::int64_t n_traj, double gamma, std::int64_t truncation_T,
                               const BatchPlan& plan);

struct FiniteDifferenceGradient {
  Vector gradient;
  Vector std_error;
};

/// Central differences of the truncated discounted return, per coordinate,
/// with common random numbers across the +h and -h evaluations.
FiniteDifferenceGradient finite_difference_gradient(const Environment& env,
                                                    const GaussianPolicy& policy, double h,
                                                    std::int64_t n_eval, double gamma,
                                                    std::int64_t truncation_T,
                                                    const BatchPlan& plan);

/// Second-moment constants that enter the variance bounds. The score-function
/// constant is ambiguous, so both readings are measured:
///   g_wd            = E ||g(theta, x)||^2
///   g_sf_score      = E ||grad log mu_theta(a|x)||^2
///   g_sf_density    = E ||grad mu_theta(a|x)||^2     (a ~ mu_theta)
struct VarianceConstants {
  double g_wd = 0.0;
  double g_sf_score = 0.0;
  double g_sf_density = 0.0;
};

VarianceConstants measure_variance_constants(const Environment& env, const GaussianPolicy& policy,
                                             const StartRule& start, double gamma, std::int64_t n,
                                             const BatchPlan& plan);

struct VarianceReport {
  EstimatorKind kind = EstimatorKind::WD;
  Vector mean;
  Vector per_coordinate_variance;
  double trace = 0.0;
  std::int64_t n = 0;
  Vector theta;
  double reward_bound = 0.0;
  double gamma = 0.0;
  VarianceConstants constants;
  /// WD: 2 M^2 G_WD / (1-gamma)^5. SF: M^2 G_SF / (1-gamma)^5 with the
  /// density reading of G_SF; bound_alt uses the score reading.
  double bound = 0.0;
  double bound_alt = 0.0;
};

VarianceReport variance_report(const GradientBatch& batch, const GaussianPolicy& policy,
                               double reward_bound, double gamma,
                               const VarianceConstants& constants);

VarianceReport gradient_variance(const Environment& env, const GaussianPolicy& policy,
                                 EstimatorKind kind, std::int64_t n, const StartRule& start,
                                 const EstimatorOptions& options, const BatchPlan& plan);

/// Paired bootstrap of trace(Var_WD) - trace(Var_SF).
struct VarianceComparison {
  VarianceReport wd;
  VarianceReport sf;
  double trace_difference = 0.0;  // wd - sf
  double upper_confidence = 0.0;  // one-sided upper quantile of the difference
  double confidence = 0.99;
  std::int64_t bootstrap_resamples = 0;
  bool wd_smaller = false;        // upper_confidence < 0
  double constant_ratio = 0.0;    // g_wd / g_sf_density, reported only
};

VarianceComparison compare_variance(const Environment& env, const GaussianPolicy& policy,
                                    std::int64_t n, const StartRule& start,
                                    const EstimatorOptions& options, const BatchPlan& plan,
                                    std::int64_t bootstrap_resamples = 1000,
                                    double confidence = 0.99);

struct SampleComplexityStats {
  std::int64_t iterations = 0;
  double mean_per_iter = 0.0;      // phantom transitions per iteration
  double std_error = 0.0;
  double predicted = 0.0;          // batch * 2 / (1 - gamma), inclusive-horizon counting
  double exclusive_horizon = 0.0;  // batch * (1 + gamma) / (1 - gamma)
  double predicted_sd = 0.0;       // sd of one iteration's count under the model
};

SampleComplexityStats sample_complexity_stats(const std::vector<IterateRecord>& history,
                                              double gamma);

/// Running minimum of ||grad_k||^2. Non-increasing by construction.
std::vector<std::pair<std::int64_t, double>> stationarity_trace(
    const std::vector<IterateRecord>& history);

/// Percentile bootstrap of a mean. Returns (lo, hi) of the central interval.
std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, double level,
                                            std::int64_t resamples, Rng& rng);

}  // namespace wdpg
