#pragma once

// CSV emission and the printable config banner.  summary/errors files are
// written with LF line endings and 17 significant digits so reruns with
// the same seed are byte-identical (timing excluded via --no-timing).

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "onestep/montecarlo.hpp"

namespace onestep {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string config_banner(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# model=" << cfg.model << "\n";
  os << "# theta=";
  for (size_t i = 0; i < cfg.theta_true.size(); ++i)
    os << (i ? "," : "") << format_double(cfg.theta_true[i]);
  os << "\n";
  os << "# n=" << cfg.n << "\n";
  os << "# B=" << cfg.B << "\n";
  os << "# r=" << format_double(cfg.r) << "\n";
  if (cfg.c) os << "# c=" << format_double(*cfg.c) << "\n";
  os << "# estimators=";
  for (size_t i = 0; i < cfg.estimators.size(); ++i)
    os << (i ? "," : "") << cfg.estimators[i];
  os << "\n";
  os << "# seed=" << cfg.master_seed << "\n";
  os << "# init=" << cfg.init_policy << "\n";
  os << "# tol_mle=" << format_double(cfg.tol_mle) << "\n";
  os << "# rng=" << RandomState::algorithm() << "\n";
  return os.str();
}

inline ExperimentConfig parse_banner(const std::string& banner) {
  ExperimentConfig cfg;
  cfg.estimators.clear();
  std::istringstream is(banner);
  std::string line;
  auto split_list = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ls(s);
    std::string tok;
    while (std::getline(ls, tok, ',')) out.push_back(tok);
    return out;
  };
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) != 0) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(2, eq - 2);
    const std::string val = line.substr(eq + 1);
    if (key == "model") cfg.model = val;
    else if (key == "theta") {
      cfg.theta_true.clear();
      for (const auto& t : split_list(val)) cfg.theta_true.push_back(std::stod(t));
    } else if (key == "n") cfg.n = std::stol(val);
    else if (key == "B") cfg.B = std::stoi(val);
    else if (key == "r") cfg.r = std::stod(val);
    else if (key == "c") cfg.c = std::stod(val);
    else if (key == "estimators") cfg.estimators = split_list(val);
    else if (key == "seed") cfg.master_seed = std::stoull(val);
    else if (key == "init") cfg.init_policy = val;
    else if (key == "tol_mle") cfg.tol_mle = std::stod(val);
  }
  return cfg;
}

// Writes <out>.summary.csv and <out>.errors.csv; returns the
// human-readable timing/variance table.
inline std::string emit_report(const ExperimentReport& report, const std::string& out_path,
                               bool include_timing = true) {
  const ExperimentConfig& cfg = report.config;
  const auto model = make_model(cfg.model);
  const int p = model->param_dim();

  {
    std::ofstream f(out_path + ".summary.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_path + ".summary.csv");
    f << "estimator,param_i,param_j,scaled_second_moment,target,bias_i,total_time_s,excluded\n";
    for (const std::string& id : report.estimator_order) {
      const EstimatorSummary& s = report.summaries.at(id);
      SymMatrix target(p);
      bool have_target = true;
      try {
        target = theoretical_targets(*model, cfg.theta_true, id, cfg.r, cfg.c);
      } catch (const std::exception&) {
        have_target = false;
      }
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          f << id << ',' << i << ',' << j << ','
            << format_double(s.second_moment(i, j)) << ','
            << (have_target ? format_double(target(i, j)) : "nan") << ','
            << format_double(s.bias[static_cast<size_t>(i)]) << ','
            << format_double(include_timing ? s.total_time : 0.0) << ','
            << s.excluded << '\n';
        }
    }
  }
  {
    std::ofstream f(out_path + ".errors.csv", std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_path + ".errors.csv");
    f << "replication,estimator,coord,raw_error,scaled_sqrt_n,scaled_n_r2\n";
    const double sqrt_n = std::sqrt(static_cast<double>(cfg.n));
    const double n_r2 = std::pow(static_cast<double>(cfg.n), cfg.r / 2.0);
    for (const RepRow& row : report.rows)
      for (size_t k = 0; k < row.raw_error.size(); ++k) {
        const double e = row.raw_error[k];
        f << row.replication << ',' << row.estimator << ',' << k << ','
          << format_double(e) << ',' << format_double(sqrt_n * e) << ','
          << format_double(n_r2 * e) << '\n';
      }
  }

  std::ostringstream os;
  os << "estimator      time(s)    excluded  scaled second moment (row-major)\n";
  for (const std::string& id : report.estimator_order) {
    const EstimatorSummary& s = report.summaries.at(id);
    char line[128];
    std::snprintf(line, sizeof line, "%-12s %10.3f  %8d  ", id.c_str(),
                  include_timing ? s.total_time : 0.0, s.excluded);
    os << line;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        std::snprintf(line, sizeof line, "%10.4f", s.second_moment(i, j));
        os << line;
      }
    os << "\n";
  }
  return os.str();
}

}  // namespace onestep
