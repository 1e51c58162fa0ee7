// Command-line front end: `experiment` reproduces the Monte Carlo
// variance/timing comparison and writes CSV results, `fit` runs a single
// estimator on one simulated sample, `selftest` runs the fast invariant
// suite.
//
// Exit codes: 0 success, 1 usage error, 2 estimator failure with every
// replication excluded.

#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "onestep/estimators.hpp"
#include "onestep/models.hpp"
#include "onestep/montecarlo.hpp"
#include "onestep/report.hpp"
#include "onestep/special_functions.hpp"

namespace {

using namespace onestep;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(tok);
  return out;
}

ParamVector parse_theta(const std::string& s) {
  ParamVector theta;
  for (const auto& t : split_csv(s)) {
    size_t pos = 0;
    theta.push_back(std::stod(t, &pos));
    if (pos != t.size()) throw CLI::ValidationError("--theta", "malformed number '" + t + "'");
  }
  if (theta.empty()) throw CLI::ValidationError("--theta", "empty parameter list");
  return theta;
}

uint64_t default_seed() {
  if (const char* env = std::getenv("ONESTEP_SEED")) return std::stoull(env);
  return 42;
}

struct ExperimentArgs {
  std::string model = "gamma";
  std::string theta = "2,1";
  long n = 10000;
  int B = 2000;
  double r = 0.6;
  double c = 0.0;
  bool has_c = false;
  std::string estimators = "mle,sgd,ossgd,avsgd,adsgd";
  uint64_t seed = default_seed();
  std::string init = "fixed";
  double tol_mle = 1e-9;
  std::string out = "results";
  int threads = 0;
  bool no_timing = false;
};

ExperimentConfig to_config(const ExperimentArgs& a) {
  ExperimentConfig cfg;
  cfg.model = a.model;
  cfg.theta_true = parse_theta(a.theta);
  cfg.n = a.n;
  cfg.B = a.B;
  cfg.r = a.r;
  if (a.has_c) cfg.c = a.c;
  cfg.estimators = split_csv(a.estimators);
  cfg.master_seed = a.seed;
  cfg.init_policy = a.init;
  cfg.tol_mle = a.tol_mle;
  cfg.threads = a.threads;
  cfg.validate();
  return cfg;
}

int run_experiment_cmd(const ExperimentArgs& args) {
  const ExperimentConfig cfg = to_config(args);
  std::cout << config_banner(cfg);
  const ExperimentReport report = run_experiment(cfg);
  std::cout << emit_report(report, args.out, !args.no_timing);
  for (const auto& f : report.failures)
    std::cerr << "excluded replication " << f.replication << " (" << f.estimator
              << "): " << f.message << "\n";
  for (const std::string& id : report.estimator_order)
    if (report.summaries.at(id).used == 0) {
      std::cerr << "estimator '" << id << "' failed on every replication\n";
      return 2;
    }
  std::cout << "wrote " << args.out << ".summary.csv and " << args.out << ".errors.csv\n";
  return 0;
}

int run_fit_cmd(const ExperimentArgs& args, const std::string& estimator) {
  ExperimentConfig cfg = to_config(args);
  cfg.B = 1;
  cfg.estimators = {estimator};
  if (estimator == "sgd_c" && !cfg.c)
    throw CLI::ValidationError("--estimator", "sgd_c requires --c");
  const ExperimentReport report = run_experiment(cfg);
  if (report.rows.empty() || !report.failures.empty()) {
    for (const auto& f : report.failures)
      std::cerr << "fit failed (" << f.estimator << "): " << f.message << "\n";
    return 2;
  }
  for (const RepRow& row : report.rows) {
    std::cout << row.estimator << " estimate:";
    for (size_t k = 0; k < row.raw_error.size(); ++k)
      std::cout << ' ' << format_double(row.raw_error[k] + cfg.theta_true[k]);
    std::cout << "\n";
  }
  return 0;
}

// ---- selftest ------------------------------------------------------------

struct CheckRunner {
  int failures = 0;
  void run(const std::string& id, const std::function<bool()>& body) {
    bool ok = false;
    std::string note;
    try {
      ok = body();
    } catch (const std::exception& e) {
      note = e.what();
    }
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id;
    if (!ok && !note.empty()) std::cout << " (" << note << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  }
};

bool approx_equal(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

int run_selftest() {
  CheckRunner t;

  t.run("digamma_recurrence", [] {
    for (double x = 0.1; x <= 100.0; x *= 1.37) {
      const double lhs = digamma(x + 1.0);
      const double rhs = digamma(x) + 1.0 / x;
      if (std::fabs(lhs - rhs) > 1e-10 * (1.0 + std::fabs(rhs))) return false;
    }
    return true;
  });
  t.run("trigamma_recurrence", [] {
    for (double x = 0.1; x <= 100.0; x *= 1.37) {
      const double lhs = trigamma(x + 1.0);
      const double rhs = trigamma(x) - 1.0 / (x * x);
      if (std::fabs(lhs - rhs) > 1e-10 * (1.0 + std::fabs(rhs))) return false;
    }
    return true;
  });
  t.run("digamma_matches_log_gamma_derivative", [] {
    for (double x = 0.5; x <= 50.0; x *= 1.9) {
      const double h = 1e-5;
      const double fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h);
      if (std::fabs(fd - digamma(x)) > 1e-6 * (1.0 + std::fabs(fd))) return false;
    }
    return true;
  });
  t.run("polygamma_constants", [] {
    return approx_equal(polygamma(1, 1.0), -0.57721566490153286, 1e-12) &&
           approx_equal(polygamma(2, 1.0), 1.6449340668482264, 1e-12);
  });
  t.run("gradient_check_all_models", [] {
    RandomState rng(7);
    for (const char* id : {"gamma", "normal", "exponential"}) {
      const auto model = make_model(id);
      const ParamVector theta = model->default_init();
      for (int k = 0; k < 10; ++k) {
        const double x = model->in_support(0.0) ? rng.normal() : 0.2 + 3.0 * rng.uniform();
        const ParamVector g = model->score(theta, x);
        for (int j = 0; j < model->param_dim(); ++j) {
          const double h = 1e-6 * (1.0 + std::fabs(theta[j]));
          ParamVector up = theta, dn = theta;
          up[j] += h;
          dn[j] -= h;
          const double fd = (model->log_density(up, x) - model->log_density(dn, x)) / (2 * h);
          if (std::fabs(fd - g[j]) > 1e-5 * (1.0 + std::fabs(fd))) return false;
        }
      }
    }
    return true;
  });
  t.run("mle_closed_forms", [] {
    RandomState rng(11);
    const ExponentialModel expo;
    const NormalModel norm;
    for (int k = 0; k < 20; ++k) {
      auto xs = sample(expo, {2.0}, 40, rng);
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= xs.size();
      const auto fit = mle_fit(expo, xs, {1.0}, 1e-12);
      if (std::fabs(fit.estimate[0] - 1.0 / mean) > 1e-8) return false;
    }
    for (int k = 0; k < 20; ++k) {
      auto xs = sample(norm, {0.5, 2.0}, 40, rng);
      double mean = 0.0, var = 0.0;
      for (double x : xs) mean += x;
      mean /= xs.size();
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= xs.size();
      const auto fit = mle_fit(norm, xs, {0.0, 1.0}, 1e-12);
      if (std::fabs(fit.estimate[0] - mean) > 1e-8) return false;
      if (std::fabs(fit.estimate[1] - var) > 1e-8) return false;
    }
    return true;
  });
  t.run("one_step_normal_mean_identity", [] {
    RandomState rng(13);
    const NormalMeanModel nm;
    auto xs = sample(nm, {1.0}, 50, rng);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    const auto os = one_step(nm, xs, {0.3});
    return std::fabs(os.estimate[0] - mean) <= 1e-12;
  });
  t.run("adsgd_running_mean_identity", [] {
    RandomState rng(17);
    const NormalMeanModel nm;
    auto xs = sample(nm, {1.0}, 50, rng);
    double mean = 0.0;
    for (size_t i = 0; i + 1 < xs.size(); ++i) mean += xs[i];
    mean /= static_cast<double>(xs.size() - 1);
    const auto ad = adsgd_run(nm, xs, {5.0});
    return std::fabs(ad.estimate[0] - mean) <= 1e-12;
  });
  t.run("spd_solve_round_trip", [] {
    SymMatrix a(2);
    a(0, 0) = 1.6449340668482264;
    a.set(0, 1, -1.0);
    a(1, 1) = 1.0;
    const ParamVector x = spd_solve(a, {1.0, 0.0});
    const ParamVector ax = mat_vec(a, x);
    return std::fabs(ax[0] - 1.0) < 1e-10 && std::fabs(ax[1]) < 1e-10;
  });

  std::cout << (t.failures == 0 ? "selftest: all checks passed\n"
                                : "selftest: " + std::to_string(t.failures) + " check(s) failed\n");
  return t.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-step corrected stochastic gradient estimation toolkit"};
  app.require_subcommand(1);

  ExperimentArgs args;
  std::string fit_estimator = "ossgd";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--model", args.model, "Model family: gamma, normal, exponential")
        ->check(CLI::IsMember({"gamma", "normal", "exponential"}));
    cmd->add_option("--theta", args.theta, "True parameter, comma-separated");
    cmd->add_option("--n", args.n, "Sample size")->check(CLI::Range(2L, 1000000000L));
    cmd->add_option("--r", args.r, "SGD step exponent, in (0.5, 1)")
        ->check(CLI::Range(0.5, 1.0));
    auto* copt = cmd->add_option("--c", args.c, "Scaled-harmonic step constant for sgd_c");
    copt->check(CLI::PositiveNumber);
    cmd->callback([&args, copt] { args.has_c = copt->count() > 0; });
    cmd->add_option("--seed", args.seed, "Master seed (overrides ONESTEP_SEED)");
    cmd->add_option("--init", args.init, "Initial value policy: fixed or moments")
        ->check(CLI::IsMember({"fixed", "moments"}));
    cmd->add_option("--tol-mle", args.tol_mle, "MLE gradient-norm tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threads", args.threads, "Worker threads (0 = machine parallelism)");
  };

  CLI::App* exp = app.add_subcommand("experiment", "Run the replicated Monte Carlo comparison");
  add_common(exp);
  exp->add_option("--B", args.B, "Replication count")->check(CLI::Range(1, 100000000));
  exp->add_option("--estimators", args.estimators,
                  "Comma list from mle,sgd,ossgd,avsgd,adsgd,sgd_c");
  exp->add_option("--out", args.out, "Output prefix for .summary.csv / .errors.csv");
  exp->add_flag("--no-timing", args.no_timing, "Zero timing columns for byte-stable output");

  CLI::App* fit = app.add_subcommand("fit", "Run one estimator on a single simulated sample");
  add_common(fit);
  fit->add_option("--estimator", fit_estimator, "One of mle,sgd,ossgd,avsgd,adsgd,sgd_c")
      ->check(CLI::IsMember(onestep::known_estimators()));

  app.add_subcommand("selftest", "Run the fast invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("experiment")) return run_experiment_cmd(args);
    if (app.got_subcommand("fit")) return run_fit_cmd(args, fit_estimator);
    return run_selftest();
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
