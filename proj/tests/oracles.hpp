#pragma once

// Test-only reference computations. Nothing here calls into the estimator
// or analysis code paths it is used to check.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// E_{a ~ N(mean, sigma^2)}[f(a)] by adaptive Gauss-Kronrod on the real line.
template <class F>
double gaussian_expectation(F f, double mean, double sigma) {
  auto integrand = [&](double z) { return f(mean + sigma * z) * normal_pdf(z); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-13);
}

inline double bandit_reward(double a) { return std::exp(-(a - 1.0) * (a - 1.0)); }

/// Bandit objective J(theta) = E[r(a)] / (1 - gamma), a ~ N(theta, sigma^2).
inline double bandit_objective(double theta, double sigma, double gamma) {
  return gaussian_expectation(bandit_reward, theta, sigma) / (1.0 - gamma);
}

/// dJ/dtheta by differentiating under the integral: E[r(a) (a - theta)/sigma^2] / (1 - gamma).
inline double bandit_gradient(double theta, double sigma, double gamma) {
  auto f = [&](double a) { return bandit_reward(a) * (a - theta) / (sigma * sigma); };
  return gaussian_expectation(f, theta, sigma) / (1.0 - gamma);
}

/// Integral of f over [lo, hi] (hi may be +inf).
template <class F>
double integrate(F f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
}

}  // namespace oracle
