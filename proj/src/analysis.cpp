#include "wdpg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wdpg/errors.hpp"

namespace wdpg {

double truncation_tail_bound(double gamma, double reward_bound, std::int64_t truncation_T) {
  return std::pow(gamma, static_cast<double>(truncation_T + 1)) * reward_bound / (1.0 - gamma);
}

std::int64_t truncation_for_tolerance(double gamma, double reward_bound, double tolerance) {
  validate_discount(gamma);
  require(tolerance > 0.0, "tail tolerance must be positive");
  const double bound0 = reward_bound / (1.0 - gamma);
  if (bound0 <= tolerance) return 0;
  // gamma^(T+1) <= tolerance / bound0
  auto t = static_cast<std::int64_t>(std::ceil(std::log(tolerance / bound0) / std::log(gamma))) - 1;
  t = std::max<std::int64_t>(t, 0);
  while (truncation_tail_bound(gamma, reward_bound, t) > tolerance) ++t;
  return t;
}

std::vector<double> discounted_returns(const Environment& env, const GaussianPolicy& policy,
                                       std::int64_t n_traj, double gamma, std::int64_t truncation_T,
                                       const BatchPlan& plan) {
  validate_discount(gamma);
  require(n_traj >= 1, "need at least one trajectory");
  require(truncation_T >= 0, "truncation horizon must be non-negative");
  auto chunks = run_chunked<std::vector<double>>(
      n_traj, plan, [&](std::int64_t, std::int64_t begin, std::int64_t end, Rng& rng) {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(end - begin));
        for (std::int64_t i = begin; i < end; ++i) {
          EnvState x = env.reset(rng);
          double total = 0.0;
          double discount = 1.0;
          for (std::int64_t t = 0; t <= truncation_T; ++t) {
            StepResult step = env.step(x, policy.sample(x, rng));
            total += discount * step.reward;
            discount *= gamma;
            x = std::move(step.next);
          }
          out.push_back(total);
        }
        return out;
      });
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(n_traj));
  for (auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return all;
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

ReturnEstimate evaluate_return(const Environment& env, const GaussianPolicy& policy,
                               std::int64_t n_traj, double gamma, std::int64_t truncation_T,
                               const BatchPlan& plan) {
  const auto returns = discounted_returns(env, policy, n_traj, gamma, truncation_T, plan);
  const auto [mean, se] = mean_and_se(returns);
  ReturnEstimate est;
  est.mean = mean;
  est.std_error = se;
  est.n_trajectories = n_traj;
  est.truncation_T = truncation_T;
  est.gamma = gamma;
  est.tail_bound = truncation_tail_bound(gamma, env.spec().reward_bound, truncation_T);
  return est;
}

FiniteDifferenceGradient finite_difference_gradient(const Environment& env,
                                                    const GaussianPolicy& policy, double h,
                                                    std::int64_t n_eval, double gamma,
                                                    std::int64_t truncation_T,
                                                    const BatchPlan& plan) {
  require(h > 0.0, "finite-difference step must be positive");
  const int d = policy.dim();
  FiniteDifferenceGradient out{Vector::Zero(d), Vector::Zero(d)};
  for (int i = 0; i < d; ++i) {
    Vector up = policy.theta();
    Vector down = policy.theta();
    up[i] += h;
    down[i] -= h;
    const auto r_up = discounted_returns(env, policy.with_theta(up), n_eval, gamma, truncation_T, plan);
    const auto r_down = discounted_returns(env, policy.with_theta(down), n_eval, gamma, truncation_T, plan);
    std::vector<double> diff(r_up.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = (r_up[j] - r_down[j]) / (2.0 * h);
    const auto [mean, se] = mean_and_se(diff);
    out.gradient[i] = mean;
    out.std_error[i] = se;
  }
  return out;
}

VarianceConstants measure_variance_constants(const Environment& env, const GaussianPolicy& policy,
                                             const StartRule& start, double gamma, std::int64_t n,
                                             const BatchPlan& plan) {
  require(n >= 1, "need at least one draw");
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * policy.sigma() * policy.sigma());
  auto chunks = run_chunked<VarianceConstants>(
      n, plan, [&](std::int64_t, std::int64_t begin, std::int64_t end, Rng& rng) {
        VarianceConstants acc;
        for (std::int64_t i = begin; i < end; ++i) {
          const EnvState x = start.fixed ? *start.fixed
                                         : ergodic_state(env, policy, env.reset(rng), gamma, rng);
          const FeatureVector phi = policy.features()(x);
          const double a = policy.sample(x, rng);
          const double score_sq = policy.score(x, a).squaredNorm();
          const double dens = policy.density(x, a);
          acc.g_wd += phi.squaredNorm() * norm * norm;
          acc.g_sf_score += score_sq;
          acc.g_sf_density += dens * dens * score_sq;
        }
        return acc;
      });
  VarianceConstants total;
  for (const auto& c : chunks) {
    total.g_wd += c.g_wd;
    total.g_sf_score += c.g_sf_score;
    total.g_sf_density += c.g_sf_density;
  }
  const auto nd = static_cast<double>(n);
  total.g_wd /= nd;
  total.g_sf_score /= nd;
  total.g_sf_density /= nd;
  return total;
}

VarianceReport variance_report(const GradientBatch& batch, const GaussianPolicy& policy,
                               double reward_bound, double gamma,
                               const VarianceConstants& constants) {
  VarianceReport r;
  r.kind = batch.kind;
  r.mean = batch.mean();
  r.per_coordinate_variance = batch.variance();
  r.trace = r.per_coordinate_variance.sum();
  r.n = batch.size();
  r.theta = policy.theta();
  r.reward_bound = reward_bound;
  r.gamma = gamma;
  r.constants = constants;
  const double scale = reward_bound * reward_bound / std::pow(1.0 - gamma, 5);
  if (batch.kind == EstimatorKind::WD) {
    r.bound = 2.0 * scale * constants.g_wd;
    r.bound_alt = r.bound;
  } else {
    r.bound = scale * constants.g_sf_density;
    r.bound_alt = scale * constants.g_sf_score;
  }
  return r;
}

namespace {
BatchPlan with_tag(BatchPlan plan, std::uint64_t tag) {
  plan.tag = tag;
  return plan;
}
}  // namespace

VarianceReport gradient_variance(const Environment& env, const GaussianPolicy& policy,
                                 EstimatorKind kind, std::int64_t n, const StartRule& start,
                                 const EstimatorOptions& options, const BatchPlan& plan) {
  require(n >= 2, "gradient_variance needs n >= 2");
  const GradientBatch batch = estimate_batch(kind, env, policy, start, n, options, plan);
  const VarianceConstants constants = measure_variance_constants(
      env, policy, start, options.gamma, std::min<std::int64_t>(n, 100000), with_tag(plan, stream_tag::kOracle));
  return variance_report(batch, policy, env.spec().reward_bound, options.gamma, constants);
}

VarianceComparison compare_variance(const Environment& env, const GaussianPolicy& policy,
                                    std::int64_t n, const StartRule& start,
                                    const EstimatorOptions& options, const BatchPlan& plan,
                                    std::int64_t bootstrap_resamples, double confidence) {
  require(n >= 2, "compare_variance needs n >= 2");
  require(bootstrap_resamples >= 1, "need at least one bootstrap resample");
  require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
  const GradientBatch wd = estimate_batch(EstimatorKind::WD, env, policy, start, n, options,
                                          with_tag(plan, stream_tag::kBatch));
  const GradientBatch sf = estimate_batch(EstimatorKind::SF, env, policy, start, n, options,
                                          with_tag(plan, stream_tag::kBatch + 1));
  const VarianceConstants constants = measure_variance_constants(
      env, policy, start, options.gamma, std::min<std::int64_t>(n, 100000), with_tag(plan, stream_tag::kOracle));

  VarianceComparison out;
  const double M = env.spec().reward_bound;
  out.wd = variance_report(wd, policy, M, options.gamma, constants);
  out.sf = variance_report(sf, policy, M, options.gamma, constants);
  out.trace_difference = out.wd.trace - out.sf.trace;
  out.confidence = confidence;
  out.bootstrap_resamples = bootstrap_resamples;
  out.constant_ratio = constants.g_sf_density > 0.0 ? constants.g_wd / constants.g_sf_density
                                                    : std::numeric_limits<double>::quiet_NaN();

  // paired: resample row indices once and apply them to both batches
  Rng rng(derive_seed(plan.seed, stream_tag::kBootstrap));
  const int d = policy.dim();
  const auto nd = static_cast<double>(n);
  std::vector<double> diffs(static_cast<std::size_t>(bootstrap_resamples));
  Vector s_wd(d), q_wd(d), s_sf(d), q_sf(d);
  for (auto& diff : diffs) {
    s_wd.setZero();
    q_wd.setZero();
    s_sf.setZero();
    q_sf.setZero();
    for (std::int64_t j = 0; j < n; ++j) {
      const auto idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      for (int c = 0; c < d; ++c) {
        const double w = wd.samples(idx, c);
        const double s = sf.samples(idx, c);
        s_wd[c] += w;
        q_wd[c] += w * w;
        s_sf[c] += s;
        q_sf[c] += s * s;
      }
    }
    double trace_wd = 0.0, trace_sf = 0.0;
    for (int c = 0; c < d; ++c) {
      trace_wd += (q_wd[c] - s_wd[c] * s_wd[c] / nd) / (nd - 1.0);
      trace_sf += (q_sf[c] - s_sf[c] * s_sf[c] / nd) / (nd - 1.0);
    }
    diff = trace_wd - trace_sf;
  }
  std::sort(diffs.begin(), diffs.end());
  const auto q = static_cast<std::size_t>(
      std::clamp<double>(std::ceil(confidence * static_cast<double>(diffs.size())) - 1.0, 0.0,
                         static_cast<double>(diffs.size() - 1)));
  out.upper_confidence = diffs[q];
  out.wd_smaller = out.upper_confidence < 0.0;
  return out;
}

SampleComplexityStats sample_complexity_stats(const std::vector<IterateRecord>& history,
                                              double gamma) {
  require(!history.empty(), "sample_complexity_stats: empty history");
  validate_discount(gamma);
  std::vector<double> counts;
  counts.reserve(history.size());
  for (const auto& rec : history) counts.push_back(static_cast<double>(rec.phantom_transitions));
  const auto [mean, se] = mean_and_se(counts);
  SampleComplexityStats s;
  s.iterations = static_cast<std::int64_t>(history.size());
  s.mean_per_iter = mean;
  s.std_error = se;
  // Each iteration averages one estimate per batch element.
  const double batch = static_cast<double>(std::max<std::size_t>(1, history.front().estimates.size()));
  s.predicted = batch * 2.0 / (1.0 - gamma);
  s.exclusive_horizon = batch * (1.0 + gamma) / (1.0 - gamma);
  s.predicted_sd = std::sqrt(batch) * 2.0 * std::sqrt(gamma) / (1.0 - gamma);
  return s;
}

std::vector<std::pair<std::int64_t, double>> stationarity_trace(
    const std::vector<IterateRecord>& history) {
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(history.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : history) {
    best = std::min(best, rec.grad.squaredNorm());
    out.emplace_back(rec.k, best);
  }
  return out;
}

std::pair<double, double> bootstrap_mean_ci(const std::vector<double>& values, double level,
                                            std::int64_t resamples, Rng& rng) {
  require(!values.empty(), "bootstrap of an empty sample");
  require(level > 0.0 && level < 1.0, "confidence level must lie in (0, 1)");
  require(resamples >= 1, "need at least one bootstrap resample");
  const auto n = static_cast<std::uint64_t>(values.size());
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::uint64_t j = 0; j < n; ++j) s += values[rng.below(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  const auto last = static_cast<double>(means.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(alpha * last));
  const auto hi = static_cast<std::size_t>(std::ceil((1.0 - alpha) * last));
  return {means[lo], means[hi]};
}

}  // namespace wdpg
