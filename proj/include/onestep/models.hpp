#pragma once

// Statistical-model interface and the built-in i.i.d. families:
// Gamma(alpha, beta) with beta a rate, Normal(mu, sigma^2), and
// Exponential(beta).  NormalMean is the sigma^2 = 1 known-variance
// submodel used as an exact algebraic oracle in tests.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "onestep/linalg.hpp"
#include "onestep/special_functions.hpp"

namespace onestep {

// Seedable 64-bit generator.  Streams for parallel replications are
// derived by splitmix64-mixing (master_seed, stream index), so each
// replication owns an independent generator.
class RandomState {
 public:
  explicit RandomState(uint64_t seed) : state_(seed == 0 ? 0x9e3779b97f4a7c15ull : seed) {
    // warm up splitmix, then seed the main generator
    for (int i = 0; i < 4; ++i) next_raw();
  }

  static RandomState stream(uint64_t master_seed, uint64_t index) {
    const uint64_t s = mix_output(master_seed + 0x9e3779b97f4a7c15ull * (index + 1));
    return RandomState(mix_output(s ^ 0xd1b54a32d192ed03ull));
  }

  static constexpr const char* algorithm() { return "splitmix64"; }

  uint64_t next_raw() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix_output(state_);
  }

  // uniform on the open interval (0, 1)
  double uniform() { return (static_cast<double>(next_raw() >> 11) + 0.5) * 0x1.0p-53; }

  // standard normal via the polar method
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  static uint64_t mix_output(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

constexpr double kDomainMargin = 1e-8;

class ModelFamily {
 public:
  virtual ~ModelFamily() = default;

  virtual std::string name() const = 0;
  virtual int param_dim() const = 0;
  virtual bool in_domain(const ParamVector& u) const = 0;
  virtual bool in_support(double x) const = 0;
  virtual ParamVector default_init() const = 0;

  // True for coordinates whose domain constraint is positivity.
  virtual bool positivity_constrained(int coord) const = 0;

  virtual double log_density(const ParamVector& u, double x) const = 0;
  virtual ParamVector score(const ParamVector& u, double x) const = 0;
  virtual SymMatrix fisher_information(const ParamVector& u) const = 0;
  virtual double draw(const ParamVector& u, RandomState& rng) const = 0;

  // Clamps constrained coordinates to the boundary plus a small margin;
  // the interior is left untouched.
  virtual ParamVector project_to_domain(const ParamVector& u) const = 0;

 protected:
  void check_domain(const ParamVector& u) const {
    if (static_cast<int>(u.size()) != param_dim())
      throw std::domain_error(name() + ": parameter dimension mismatch");
    for (double v : u)
      if (!std::isfinite(v)) throw std::domain_error(name() + ": non-finite parameter");
    if (!in_domain(u)) throw std::domain_error(name() + ": parameter outside domain");
  }
  void check_support(double x) const {
    if (!std::isfinite(x) || !in_support(x))
      throw std::domain_error(name() + ": observation outside support");
  }
};

namespace detail {

// Marsaglia-Tsang squeeze method for shape >= 1; the U^{1/alpha} boost
// handles shape < 1.  Returns a unit-rate draw.
inline double gamma_draw_unit(double alpha, RandomState& rng) {
  if (alpha < 1.0)
    return gamma_draw_unit(alpha + 1.0, rng) * std::pow(rng.uniform(), 1.0 / alpha);
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

class GammaModel final : public ModelFamily {
 public:
  std::string name() const override { return "gamma"; }
  int param_dim() const override { return 2; }
  bool in_domain(const ParamVector& u) const override { return u[0] > 0.0 && u[1] > 0.0; }
  bool in_support(double x) const override { return x > 0.0; }
  ParamVector default_init() const override { return {1.0, 1.0}; }
  bool positivity_constrained(int) const override { return true; }

  double log_density(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    const double a = u[0], b = u[1];
    return a * std::log(b) - log_gamma(a) + (a - 1.0) * std::log(x) - b * x;
  }

  ParamVector score(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    const double a = u[0], b = u[1];
    return {std::log(b) - digamma(a) + std::log(x), a / b - x};
  }

  SymMatrix fisher_information(const ParamVector& u) const override {
    check_domain(u);
    const double a = u[0], b = u[1];
    SymMatrix m(2);
    m(0, 0) = trigamma(a);
    m.set(0, 1, -1.0 / b);
    m(1, 1) = a / (b * b);
    return m;
  }

  double draw(const ParamVector& u, RandomState& rng) const override {
    return detail::gamma_draw_unit(u[0], rng) / u[1];
  }

  ParamVector project_to_domain(const ParamVector& u) const override {
    for (double v : u)
      if (!std::isfinite(v)) throw std::domain_error("gamma: non-finite parameter");
    return {std::max(u[0], kDomainMargin), std::max(u[1], kDomainMargin)};
  }
};

class NormalModel final : public ModelFamily {
 public:
  std::string name() const override { return "normal"; }
  int param_dim() const override { return 2; }
  bool in_domain(const ParamVector& u) const override { return u[1] > 0.0; }
  bool in_support(double) const override { return true; }
  ParamVector default_init() const override { return {0.0, 1.0}; }
  bool positivity_constrained(int coord) const override { return coord == 1; }

  double log_density(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    const double mu = u[0], s2 = u[1];
    const double d = x - mu;
    return -0.5 * std::log(2.0 * M_PI * s2) - d * d / (2.0 * s2);
  }

  ParamVector score(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    const double mu = u[0], s2 = u[1];
    const double d = x - mu;
    return {d / s2, -0.5 / s2 + d * d / (2.0 * s2 * s2)};
  }

  SymMatrix fisher_information(const ParamVector& u) const override {
    check_domain(u);
    const double s2 = u[1];
    SymMatrix m(2);
    m(0, 0) = 1.0 / s2;
    m(1, 1) = 0.5 / (s2 * s2);
    return m;
  }

  double draw(const ParamVector& u, RandomState& rng) const override {
    return u[0] + std::sqrt(u[1]) * rng.normal();
  }

  ParamVector project_to_domain(const ParamVector& u) const override {
    for (double v : u)
      if (!std::isfinite(v)) throw std::domain_error("normal: non-finite parameter");
    return {u[0], std::max(u[1], kDomainMargin)};
  }
};

class ExponentialModel final : public ModelFamily {
 public:
  std::string name() const override { return "exponential"; }
  int param_dim() const override { return 1; }
  bool in_domain(const ParamVector& u) const override { return u[0] > 0.0; }
  bool in_support(double x) const override { return x > 0.0; }
  ParamVector default_init() const override { return {1.0}; }
  bool positivity_constrained(int) const override { return true; }

  double log_density(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    return std::log(u[0]) - u[0] * x;
  }

  ParamVector score(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    return {1.0 / u[0] - x};
  }

  SymMatrix fisher_information(const ParamVector& u) const override {
    check_domain(u);
    SymMatrix m(1);
    m(0, 0) = 1.0 / (u[0] * u[0]);
    return m;
  }

  double draw(const ParamVector& u, RandomState& rng) const override {
    return -std::log(rng.uniform()) / u[0];
  }

  ParamVector project_to_domain(const ParamVector& u) const override {
    if (!std::isfinite(u[0])) throw std::domain_error("exponential: non-finite parameter");
    return {std::max(u[0], kDomainMargin)};
  }
};

// Known-variance Normal with sigma^2 = 1; the running-mean and one-step
// identities are exact here, which the test suites lean on.
class NormalMeanModel final : public ModelFamily {
 public:
  std::string name() const override { return "normal_mean"; }
  int param_dim() const override { return 1; }
  bool in_domain(const ParamVector&) const override { return true; }
  bool in_support(double) const override { return true; }
  ParamVector default_init() const override { return {0.0}; }
  bool positivity_constrained(int) const override { return false; }

  double log_density(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    const double d = x - u[0];
    return -0.5 * std::log(2.0 * M_PI) - 0.5 * d * d;
  }

  ParamVector score(const ParamVector& u, double x) const override {
    check_domain(u);
    check_support(x);
    return {x - u[0]};
  }

  SymMatrix fisher_information(const ParamVector& u) const override {
    check_domain(u);
    return SymMatrix::identity(1);
  }

  double draw(const ParamVector& u, RandomState& rng) const override {
    return u[0] + rng.normal();
  }

  ParamVector project_to_domain(const ParamVector& u) const override {
    if (!std::isfinite(u[0])) throw std::domain_error("normal_mean: non-finite parameter");
    return u;
  }
};

inline std::unique_ptr<ModelFamily> make_model(const std::string& id) {
  if (id == "gamma") return std::make_unique<GammaModel>();
  if (id == "normal") return std::make_unique<NormalModel>();
  if (id == "exponential") return std::make_unique<ExponentialModel>();
  if (id == "normal_mean") return std::make_unique<NormalMeanModel>();
  throw std::invalid_argument("unknown model '" + id + "'");
}

inline std::vector<double> sample(const ModelFamily& model, const ParamVector& u,
                                  long n, RandomState& rng) {
  if (n < 0) throw std::invalid_argument("sample: n must be >= 0");
  if (!model.in_domain(u)) throw std::domain_error(model.name() + ": parameter outside domain");
  std::vector<double> xs;
  xs.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) xs.push_back(model.draw(u, rng));
  return xs;
}

inline double loglik_sum(const ModelFamily& model, const ParamVector& u,
                         const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += model.log_density(u, x);
  return s;
}

inline ParamVector score_sum(const ModelFamily& model, const ParamVector& u,
                             const std::vector<double>& xs) {
  ParamVector s(model.param_dim(), 0.0);
  for (double x : xs) {
    const ParamVector g = model.score(u, x);
    for (size_t j = 0; j < s.size(); ++j) s[j] += g[j];
  }
  return s;
}

}  // namespace onestep
