#pragma once

// Replicated-experiment harness: draws B independent samples, runs the
// requested estimators on each, and aggregates renormalized-error
// statistics and timings.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "onestep/estimators.hpp"
#include "onestep/linalg.hpp"
#include "onestep/models.hpp"

namespace onestep {

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> ids = {"mle", "sgd", "ossgd",
                                               "avsgd", "adsgd", "sgd_c"};
  return ids;
}

struct ExperimentConfig {
  std::string model = "gamma";
  ParamVector theta_true = {2.0, 1.0};
  long n = 10000;
  int B = 2000;
  double r = 0.6;
  std::optional<double> c;  // scaled-harmonic constant for sgd_c
  std::vector<std::string> estimators = {"mle", "sgd", "ossgd", "avsgd", "adsgd"};
  uint64_t master_seed = 42;
  std::string init_policy = "fixed";  // fixed | moments
  double tol_mle = 1e-9;
  double burn_in_fraction = 0.0;
  int threads = 0;  // 0 = machine parallelism

  void validate() const {
    auto m = make_model(model);
    if (static_cast<int>(theta_true.size()) != m->param_dim() || !m->in_domain(theta_true))
      throw std::invalid_argument("config: theta_true outside the model domain");
    if (n < 2) throw std::invalid_argument("config: n must be >= 2");
    if (B < 1) throw std::invalid_argument("config: B must be >= 1");
    if (!(r > 0.5 && r < 1.0)) throw std::invalid_argument("config: r must lie in (1/2, 1)");
    if (init_policy != "fixed" && init_policy != "moments")
      throw std::invalid_argument("config: init policy must be 'fixed' or 'moments'");
    if (init_policy == "moments" && model != "gamma")
      throw std::invalid_argument("config: moment initialization is Gamma-only");
    if (!(tol_mle > 0.0)) throw std::invalid_argument("config: tol_mle must be positive");
    for (const std::string& e : estimators) {
      if (std::find(known_estimators().begin(), known_estimators().end(), e) ==
          known_estimators().end())
        throw std::invalid_argument("config: unknown estimator '" + e + "'");
      if (e == "sgd_c" && !c)
        throw std::invalid_argument("config: sgd_c requires the constant c");
    }
  }
};

struct RepRow {
  int replication;            // 1-based
  std::string estimator;      // includes "sgd(internal)" for guess runs
  ParamVector raw_error;      // estimate - theta_true
  double run_time;            // seconds
};

struct EstimatorSummary {
  ParamVector bias;                // mean raw error over used replications
  SymMatrix second_moment;         // mean of e e^T, e = scale * raw_error
  double scale_exponent;           // e = n^{scale_exponent} * raw_error
  double total_time = 0.0;
  int excluded = 0;
  int used = 0;

  EstimatorSummary() : second_moment(1) {}
};

struct FailureRecord {
  int replication;
  std::string estimator;
  std::string message;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> estimator_order;  // paper's column order
  std::vector<RepRow> rows;
  std::map<std::string, EstimatorSummary> summaries;
  std::vector<FailureRecord> failures;
};

// Renormalization exponent: the plain SGD converges at the slow n^{r/2}
// rate; every other estimator is sqrt(n)-scaled.
inline double error_scale_exponent(const std::string& estimator, double r) {
  if (estimator == "sgd" || estimator == "sgd(internal)") return r / 2.0;
  if (std::find(known_estimators().begin(), known_estimators().end(), estimator) !=
      known_estimators().end())
    return 0.5;
  throw std::invalid_argument("error_scale: unknown estimator '" + estimator + "'");
}

inline double error_scale(const std::string& estimator, long n, double r) {
  if (n < 1) throw std::invalid_argument("error_scale: n must be >= 1");
  return std::pow(static_cast<double>(n), error_scale_exponent(estimator, r));
}

// Limit covariance of the renormalized errors.
inline SymMatrix theoretical_targets(const ModelFamily& model, const ParamVector& theta,
                                     const std::string& estimator, double r,
                                     std::optional<double> c = std::nullopt) {
  (void)r;
  const int p = model.param_dim();
  if (estimator == "sgd" || estimator == "sgd(internal)") {
    SymMatrix half(p);
    for (int i = 0; i < p; ++i) half(i, i) = 0.5;
    return half;
  }
  const SymMatrix info = model.fisher_information(theta);
  if (estimator == "mle" || estimator == "ossgd" || estimator == "avsgd" ||
      estimator == "adsgd")
    return spd_inverse(info);
  if (estimator == "sgd_c") {
    if (!c) throw std::invalid_argument("theoretical_targets: sgd_c requires c");
    const double lam = min_eigenvalue(info);
    if (!(*c > 1.0 / (2.0 * lam)))
      throw std::invalid_argument("theoretical_targets: c must exceed 1/(2 lambda_min) = " +
                                  std::to_string(1.0 / (2.0 * lam)));
    // c^2 I (2c I - I_p)^{-1}
    SymMatrix denom(p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) denom(i, j) = 2.0 * (*c) * info(i, j) - (i == j ? 1.0 : 0.0);
    SymMatrix t = mat_mul(info, spd_inverse(denom));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) t(i, j) *= (*c) * (*c);
    // symmetrize (I and (2cI - I_p)^{-1} commute, so asymmetry is round-off)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < i; ++j) t.set(i, j, 0.5 * (t(i, j) + t(j, i)));
    return t;
  }
  throw std::invalid_argument("theoretical_targets: unknown estimator '" + estimator + "'");
}

namespace detail {

struct RepOutcome {
  std::vector<RepRow> rows;
  std::vector<FailureRecord> failures;
};

// One replication: a fresh stream, one sample, all requested estimators
// on that same sample.  The SGD runs once; its final iterate is the
// one-step guess and its trace feeds the averaging, with its cost billed
// into each dependent estimator's time (the guess is part of what they
// buy).
inline RepOutcome run_replication(const ExperimentConfig& cfg, const ModelFamily& model,
                                  int b) {
  RepOutcome out;
  RandomState rng = RandomState::stream(cfg.master_seed, static_cast<uint64_t>(b));
  const std::vector<double> xs = sample(model, cfg.theta_true, cfg.n, rng);

  ParamVector init;
  if (cfg.init_policy == "moments")
    init = gamma_moment_init(xs);
  else
    init = model.default_init();

  auto requested = [&](const std::string& id) {
    return std::find(cfg.estimators.begin(), cfg.estimators.end(), id) !=
           cfg.estimators.end();
  };
  auto record = [&](const std::string& id, const ParamVector& estimate, double t) {
    ParamVector err(estimate.size());
    for (size_t j = 0; j < err.size(); ++j) err[j] = estimate[j] - cfg.theta_true[j];
    out.rows.push_back(RepRow{b, id, std::move(err), t});
  };
  auto fail = [&](const std::string& id, const std::exception& e) {
    out.failures.push_back(FailureRecord{b, id, e.what()});
  };

  const bool need_sgd = requested("sgd") || requested("ossgd") || requested("avsgd");
  std::optional<EstimateResult> sgd_res;
  if (need_sgd) {
    const auto schedule = StepSchedule::polynomial(cfg.r);
    try {
      sgd_res = sgd_run(model, xs, schedule, init, /*record_trace=*/requested("avsgd"));
      record(requested("sgd") ? "sgd" : "sgd(internal)", sgd_res->estimate,
             sgd_res->wall_time);
    } catch (const std::exception& e) {
      fail(requested("sgd") ? "sgd" : "sgd(internal)", e);
      if (requested("ossgd")) fail("ossgd", e);
      if (requested("avsgd")) fail("avsgd", e);
    }
  }
  if (requested("ossgd") && sgd_res) {
    try {
      EstimateResult os = one_step(model, xs, sgd_res->estimate);
      record("ossgd", os.estimate, sgd_res->wall_time + os.wall_time);
    } catch (const std::exception& e) {
      fail("ossgd", e);
    }
  }
  if (requested("avsgd") && sgd_res) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      ParamVector avg = average_trace(*sgd_res->trace, cfg.burn_in_fraction);
      record("avsgd", avg, sgd_res->wall_time + seconds_since(t0));
    } catch (const std::exception& e) {
      fail("avsgd", e);
    }
  }
  if (requested("mle")) {
    try {
      EstimateResult m = mle_fit(model, xs, init, cfg.tol_mle);
      record("mle", m.estimate, m.wall_time);
    } catch (const std::exception& e) {
      fail("mle", e);
    }
  }
  if (requested("adsgd")) {
    try {
      EstimateResult a = adsgd_run(model, xs, init);
      record("adsgd", a.estimate, a.wall_time);
    } catch (const std::exception& e) {
      fail("adsgd", e);
    }
  }
  if (requested("sgd_c")) {
    try {
      EstimateResult s = sgd_run(model, xs, StepSchedule::scaled_harmonic(*cfg.c), init);
      record("sgd_c", s.estimate, s.wall_time);
    } catch (const std::exception& e) {
      fail("sgd_c", e);
    }
  }
  return out;
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto model = make_model(cfg.model);
  const int p = model->param_dim();

  std::vector<detail::RepOutcome> outcomes(static_cast<size_t>(cfg.B));
  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, cfg.B));
  if (threads == 1) {
    for (int b = 1; b <= cfg.B; ++b)
      outcomes[static_cast<size_t>(b - 1)] = detail::run_replication(cfg, *model, b);
  } else {
    std::atomic<int> next{1};
    auto worker = [&] {
      for (;;) {
        const int b = next.fetch_add(1);
        if (b > cfg.B) return;
        outcomes[static_cast<size_t>(b - 1)] = detail::run_replication(cfg, *model, b);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentReport report;
  report.config = cfg;
  for (const std::string& id : {"mle", "sgd", "ossgd", "avsgd", "adsgd", "sgd_c"})
    if (std::find(cfg.estimators.begin(), cfg.estimators.end(), id) != cfg.estimators.end())
      report.estimator_order.push_back(id);

  // deterministic fold in replication order
  for (auto& o : outcomes) {
    for (auto& row : o.rows) report.rows.push_back(std::move(row));
    for (auto& f : o.failures) report.failures.push_back(std::move(f));
  }

  for (const std::string& id : report.estimator_order) {
    EstimatorSummary s;
    s.bias.assign(static_cast<size_t>(p), 0.0);
    s.second_moment = SymMatrix(p);
    s.scale_exponent = error_scale_exponent(id, cfg.r);
    const double scale = error_scale(id, cfg.n, cfg.r);
    for (const RepRow& row : report.rows) {
      if (row.estimator != id) continue;
      ++s.used;
      s.total_time += row.run_time;
      for (int i = 0; i < p; ++i) {
        s.bias[static_cast<size_t>(i)] += row.raw_error[static_cast<size_t>(i)];
        for (int j = 0; j < p; ++j)
          s.second_moment(i, j) += scale * row.raw_error[static_cast<size_t>(i)] *
                                   scale * row.raw_error[static_cast<size_t>(j)];
      }
    }
    for (const FailureRecord& f : report.failures)
      if (f.estimator == id) ++s.excluded;
    if (s.used > 0) {
      for (double& v : s.bias) v /= s.used;
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) s.second_moment(i, j) /= s.used;
    }
    report.summaries.emplace(id, std::move(s));
  }
  return report;
}

}  // namespace onestep
