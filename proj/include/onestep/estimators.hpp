#pragma once

// The estimation procedures: single-pass SGD on the score, its averaged
// and Fisher-preconditioned variants, the one-step correction, full
// Fisher-scoring MLE, and the Gamma method-of-moments initializer.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "onestep/linalg.hpp"
#include "onestep/models.hpp"

namespace onestep {

struct StepSchedule {
  enum class Kind { polynomial, scaled_harmonic };

  static StepSchedule polynomial(double r) {
    if (!(r > 0.5 && r < 1.0))
      throw std::invalid_argument("StepSchedule: polynomial exponent must lie in (1/2, 1)");
    return StepSchedule{Kind::polynomial, r, 0.0};
  }

  static StepSchedule scaled_harmonic(double c) {
    if (!(c > 0.0))
      throw std::invalid_argument("StepSchedule: scaled-harmonic constant must be positive");
    return StepSchedule{Kind::scaled_harmonic, 0.0, c};
  }

  double gamma(long i) const {
    return kind == Kind::polynomial ? std::pow(static_cast<double>(i), -r)
                                    : c / static_cast<double>(i);
  }

  Kind kind;
  double r;
  double c;
};

struct EstimateResult {
  ParamVector estimate;
  long iterations = 0;
  double wall_time = 0.0;  // seconds
  std::optional<std::vector<ParamVector>> trace;
  std::map<std::string, double> diagnostics;
};

struct NoImprovement : std::runtime_error {
  explicit NoImprovement(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_run_inputs(const ModelFamily& model, const std::vector<double>& xs,
                             const ParamVector& init) {
  if (xs.empty()) throw std::invalid_argument("estimator: empty sample");
  if (static_cast<int>(init.size()) != model.param_dim() || !model.in_domain(init))
    throw std::domain_error("estimator: initial value outside domain");
}

// Domain guard for the recursions.  With gamma_1 = 1 an early observation
// routinely throws a positivity-constrained coordinate below zero, and a
// raw clamp to the boundary margin puts the next score on a 1/x
// singularity, after which the iterate escapes to ~1e8 and stays there.
// Instead each constrained coordinate moves by at most a factor of two
// per step, so it remains interior and excursions die out geometrically.
// Steps shrink while scores stay O(1) near the target, so the cap stops
// binding once the transient has passed and the limit behavior is the
// unconstrained recursion's.
inline ParamVector guarded_update(const ModelFamily& model, const ParamVector& prev,
                                  const ParamVector& proposed) {
  ParamVector out = proposed;
  for (size_t j = 0; j < out.size(); ++j)
    if (model.positivity_constrained(static_cast<int>(j)))
      out[j] = std::clamp(proposed[j], 0.5 * prev[j], 2.0 * prev[j]);
  return model.project_to_domain(out);
}

}  // namespace detail

// theta_{i+1} = theta_i + gamma_i * score(theta_i, X_i) for i = 1..n-1,
// projected into the domain after every update.  One pass; X_n is never
// consumed, which is what lets the one-step correction see fresh data.
inline EstimateResult sgd_run(const ModelFamily& model, const std::vector<double>& xs,
                              const StepSchedule& schedule, const ParamVector& init,
                              bool record_trace = false) {
  detail::check_run_inputs(model, xs, init);
  const auto t0 = std::chrono::steady_clock::now();
  const long n = static_cast<long>(xs.size());
  ParamVector theta = init;
  EstimateResult res;
  if (record_trace) {
    res.trace.emplace();
    res.trace->reserve(static_cast<size_t>(n));
    res.trace->push_back(theta);
  }
  for (long i = 1; i <= n - 1; ++i) {
    const double g = schedule.gamma(i);
    const ParamVector s = model.score(theta, xs[static_cast<size_t>(i - 1)]);
    ParamVector proposed = theta;
    for (size_t j = 0; j < proposed.size(); ++j) proposed[j] += g * s[j];
    theta = detail::guarded_update(model, theta, proposed);
    if (record_trace) res.trace->push_back(theta);
  }
  res.estimate = std::move(theta);
  res.iterations = n - 1;
  res.wall_time = detail::seconds_since(t0);
  return res;
}

// Mean of the iterates after dropping the first floor(burn_in * length).
inline ParamVector average_trace(const std::vector<ParamVector>& trace,
                                 double burn_in_fraction = 0.0) {
  if (trace.empty()) throw std::invalid_argument("average_trace: empty trace");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
    throw std::invalid_argument("average_trace: burn-in fraction must lie in [0, 1)");
  const size_t skip = static_cast<size_t>(burn_in_fraction * trace.size());
  ParamVector mean(trace.front().size(), 0.0);
  for (size_t i = skip; i < trace.size(); ++i)
    for (size_t j = 0; j < mean.size(); ++j) mean[j] += trace[i][j];
  const double count = static_cast<double>(trace.size() - skip);
  for (double& v : mean) v /= count;
  return mean;
}

inline EstimateResult avsgd_run(const ModelFamily& model, const std::vector<double>& xs,
                                const StepSchedule& schedule, const ParamVector& init,
                                double burn_in_fraction = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  EstimateResult sgd = sgd_run(model, xs, schedule, init, /*record_trace=*/true);
  EstimateResult res;
  res.estimate = average_trace(*sgd.trace, burn_in_fraction);
  res.iterations = sgd.iterations;
  res.trace = std::move(sgd.trace);
  res.wall_time = detail::seconds_since(t0);
  return res;
}

// Fisher-preconditioned recursion with step 1/i.  A Fisher matrix that
// fails Cholesky at some iterate is a hard error; regularizing it here
// would corrupt the variance comparison downstream.
inline EstimateResult adsgd_run(const ModelFamily& model, const std::vector<double>& xs,
                                const ParamVector& init) {
  detail::check_run_inputs(model, xs, init);
  const auto t0 = std::chrono::steady_clock::now();
  const long n = static_cast<long>(xs.size());
  ParamVector theta = init;
  for (long i = 1; i <= n - 1; ++i) {
    ParamVector step;
    try {
      step = spd_solve(model.fisher_information(theta),
                       model.score(theta, xs[static_cast<size_t>(i - 1)]));
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("adsgd: Fisher not positive definite at iterate " +
                                std::to_string(i) + ": " + e.what());
    }
    const double g = 1.0 / static_cast<double>(i);
    ParamVector proposed = theta;
    for (size_t j = 0; j < proposed.size(); ++j) proposed[j] += g * step[j];
    theta = detail::guarded_update(model, theta, proposed);
  }
  EstimateResult res;
  res.estimate = std::move(theta);
  res.iterations = n - 1;
  res.wall_time = detail::seconds_since(t0);
  return res;
}

// Single Fisher-scoring correction of a consistent guess:
// guess + I(guess)^{-1} * (1/n) sum_i score(guess, X_i).
inline EstimateResult one_step(const ModelFamily& model, const std::vector<double>& xs,
                               const ParamVector& guess) {
  detail::check_run_inputs(model, xs, guess);
  const auto t0 = std::chrono::steady_clock::now();
  const double n = static_cast<double>(xs.size());
  ParamVector g = score_sum(model, guess, xs);
  for (double& v : g) v /= n;
  const ParamVector delta = spd_solve(model.fisher_information(guess), g);
  ParamVector corrected = guess;
  for (size_t j = 0; j < corrected.size(); ++j) corrected[j] += delta[j];
  EstimateResult res;
  res.estimate = model.project_to_domain(corrected);
  res.iterations = 1;
  res.wall_time = detail::seconds_since(t0);
  return res;
}

// Damped Fisher scoring on the mean log-likelihood.  Backtracking halves
// the step (at most 30 times) until the log-likelihood does not decrease.
inline EstimateResult mle_fit(const ModelFamily& model, const std::vector<double>& xs,
                              const ParamVector& init, double tol = 1e-9,
                              long max_iter = 200) {
  detail::check_run_inputs(model, xs, init);
  if (!(tol > 0.0)) throw std::invalid_argument("mle_fit: tol must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const double n = static_cast<double>(xs.size());
  ParamVector theta = init;
  double loglik = loglik_sum(model, theta, xs) / n;
  double grad_norm = 0.0;
  long iter = 0;
  bool converged = false;
  for (; iter < max_iter; ++iter) {
    ParamVector g = score_sum(model, theta, xs);
    for (double& v : g) v /= n;
    grad_norm = norm2(g);
    if (grad_norm <= tol) {
      converged = true;
      break;
    }
    const ParamVector delta = spd_solve(model.fisher_information(theta), g);
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, lambda *= 0.5) {
      ParamVector cand = theta;
      for (size_t j = 0; j < cand.size(); ++j) cand[j] += lambda * delta[j];
      cand = model.project_to_domain(cand);
      const double cand_loglik = loglik_sum(model, cand, xs) / n;
      if (cand_loglik >= loglik) {
        theta = std::move(cand);
        loglik = cand_loglik;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NoImprovement("mle_fit: backtracking exhausted at iteration " +
                          std::to_string(iter));
  }
  EstimateResult res;
  res.estimate = std::move(theta);
  res.iterations = iter;
  res.wall_time = detail::seconds_since(t0);
  res.diagnostics["grad_norm"] = grad_norm;
  res.diagnostics["iterations"] = static_cast<double>(iter);
  res.diagnostics["max_iter_reached"] = converged ? 0.0 : 1.0;
  return res;
}

// Method of moments for the Gamma family: alpha = mean^2 / var,
// beta = mean / var, with the biased sample variance.
inline ParamVector gamma_moment_init(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("gamma_moment_init: need at least 2 observations");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;
  if (!(var > 0.0)) throw std::invalid_argument("gamma_moment_init: zero sample variance");
  return GammaModel().project_to_domain({mean * mean / var, mean / var});
}

}  // namespace onestep
