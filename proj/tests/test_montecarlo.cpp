#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "onestep/montecarlo.hpp"

using namespace onestep;

TEST_CASE("error_scale") {
  CHECK(error_scale("sgd", 10000, 0.6) == Catch::Approx(std::pow(10.0, 1.2)));
  CHECK(error_scale("ossgd", 10000, 0.6) == Catch::Approx(100.0));
  CHECK(error_scale("sgd", 1, 0.6) == Catch::Approx(1.0));
  CHECK(error_scale("mle", 100, 0.6) == Catch::Approx(10.0));
  CHECK_THROWS_AS(error_scale("newton", 100, 0.6), std::invalid_argument);
}

TEST_CASE("theoretical_targets") {
  const GammaModel gamma;
  const SymMatrix half = theoretical_targets(gamma, {2.0, 1.0}, "sgd", 0.6);
  CHECK(half(0, 0) == Catch::Approx(0.5));
  CHECK(half(1, 1) == Catch::Approx(0.5));
  CHECK(half(0, 1) == 0.0);

  const NormalModel normal;
  const SymMatrix inv = theoretical_targets(normal, {0.0, 1.0}, "ossgd", 0.6);
  CHECK(inv(0, 0) == Catch::Approx(1.0));
  CHECK(inv(1, 1) == Catch::Approx(2.0));

  const ExponentialModel expo;
  // c = 1 violates c > 1/(2 lambda_min) = 2
  CHECK_THROWS_AS(theoretical_targets(expo, {2.0}, "sgd_c", 0.6, 1.0),
                  std::invalid_argument);
  const SymMatrix t = theoretical_targets(expo, {2.0}, "sgd_c", 0.6, 4.0);
  // c^2 I / (2 c I - 1) = 16 * 0.25 / 1 = 4
  CHECK(t(0, 0) == Catch::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("experiment determinism and row counts") {
  ExperimentConfig cfg;
  cfg.model = "gamma";
  cfg.theta_true = {2.0, 1.0};
  cfg.n = 200;
  cfg.B = 2;
  cfg.estimators = {"sgd"};
  cfg.master_seed = 7;
  const ExperimentReport a = run_experiment(cfg);
  const ExperimentReport b = run_experiment(cfg);
  REQUIRE(a.rows.size() == 2);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].estimator == "sgd");
    CHECK(a.rows[i].raw_error == b.rows[i].raw_error);
  }
}

TEST_CASE("ossgd alone still reports its internal guess run") {
  ExperimentConfig cfg;
  cfg.n = 200;
  cfg.B = 3;
  cfg.estimators = {"ossgd"};
  cfg.master_seed = 7;
  const ExperimentReport rep = run_experiment(cfg);
  int internal = 0, os = 0;
  for (const RepRow& row : rep.rows) {
    if (row.estimator == "sgd(internal)") ++internal;
    if (row.estimator == "ossgd") ++os;
  }
  CHECK(internal == 3);
  CHECK(os == 3);
  // the guess run is billed inside the one-step total
  double t_internal = 0.0, t_os = 0.0;
  for (const RepRow& row : rep.rows) {
    if (row.estimator == "sgd(internal)") t_internal += row.run_time;
    if (row.estimator == "ossgd") t_os += row.run_time;
  }
  CHECK(t_os >= t_internal);
  CHECK(rep.summaries.count("sgd(internal)") == 0);
}

TEST_CASE("aggregates can be recomputed from the rows") {
  ExperimentConfig cfg;
  cfg.n = 300;
  cfg.B = 8;
  cfg.estimators = {"sgd", "ossgd", "mle"};
  cfg.master_seed = 11;
  const ExperimentReport rep = run_experiment(cfg);
  for (const std::string& id : rep.estimator_order) {
    const EstimatorSummary& s = rep.summaries.at(id);
    CHECK(s.used == cfg.B);
    CHECK(s.excluded == 0);
    const double scale = error_scale(id, cfg.n, cfg.r);
    ParamVector bias(2, 0.0);
    SymMatrix mom(2);
    int count = 0;
    for (const RepRow& row : rep.rows) {
      if (row.estimator != id) continue;
      ++count;
      for (int i = 0; i < 2; ++i) {
        bias[i] += row.raw_error[i];
        for (int j = 0; j < 2; ++j)
          mom(i, j) += scale * row.raw_error[i] * scale * row.raw_error[j];
      }
    }
    for (int i = 0; i < 2; ++i) {
      CHECK(bias[i] / count == Catch::Approx(s.bias[i]).margin(1e-12));
      for (int j = 0; j < 2; ++j)
        CHECK(mom(i, j) / count == Catch::Approx(s.second_moment(i, j)).margin(1e-12));
    }
  }
}

TEST_CASE("distinct targets for distinct scalings") {
  const GammaModel gamma;
  const ParamVector theta = {2.0, 1.0};
  const SymMatrix slow = theoretical_targets(gamma, theta, "sgd", 0.6);
  for (const char* id : {"mle", "ossgd", "avsgd", "adsgd"}) {
    const SymMatrix eff = theoretical_targets(gamma, theta, id, 0.6);
    CHECK(frobenius_distance(slow, eff) > 0.1);
  }
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  cfg.r = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.r = 0.6;
  cfg.B = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.B = 10;
  cfg.theta_true = {-1.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.theta_true = {2.0, 1.0};
  cfg.estimators = {"sgd_c"};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // missing c
  cfg.c = 4.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.estimators = {"bogus"};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("moment initialization policy runs") {
  ExperimentConfig cfg;
  cfg.n = 400;
  cfg.B = 2;
  cfg.estimators = {"ossgd"};
  cfg.init_policy = "moments";
  cfg.master_seed = 13;
  const ExperimentReport rep = run_experiment(cfg);
  CHECK(rep.summaries.at("ossgd").used == 2);
  CHECK(rep.failures.empty());
}
