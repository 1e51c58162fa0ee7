#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "onestep/linalg.hpp"
#include "onestep/models.hpp"

using namespace onestep;

namespace {

SymMatrix gamma11_fisher() {
  // [[trigamma(1), -1], [-1, 1]], det = pi^2/6 - 1
  SymMatrix a(2);
  a(0, 0) = 1.6449340668482264;
  a.set(0, 1, -1.0);
  a(1, 1) = 1.0;
  return a;
}

SymMatrix random_spd(int p, RandomState& rng) {
  SymMatrix b(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) b(i, j) = rng.normal();
  SymMatrix a(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = (i == j) ? 0.1 : 0.0;
      for (int k = 0; k < p; ++k) s += b(k, i) * b(k, j);
      a(i, j) = s;
    }
  return a;
}

}  // namespace

TEST_CASE("spd_solve trivial cases") {
  const ParamVector x = spd_solve(SymMatrix::identity(2), {3.0, -1.0});
  CHECK(x[0] == Catch::Approx(3.0));
  CHECK(x[1] == Catch::Approx(-1.0));

  SymMatrix d(2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const ParamVector y = spd_solve(d, {2.0, 2.0});
  CHECK(y[0] == Catch::Approx(1.0));
  CHECK(y[1] == Catch::Approx(0.5));
}

TEST_CASE("spd_solve against the 2x2 adjugate oracle") {
  const SymMatrix a = gamma11_fisher();
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  CHECK(det == Catch::Approx(0.6449340668482264).epsilon(1e-12));
  // A^{-1} (1,0)^T = (1/det) * (a11, -a01)^T = (1/det, 1/det)
  const ParamVector x = spd_solve(a, {1.0, 0.0});
  CHECK(x[0] == Catch::Approx(1.0 / det).epsilon(1e-10));
  CHECK(x[1] == Catch::Approx(1.0 / det).epsilon(1e-10));
  CHECK(x[0] == Catch::Approx(1.5506).epsilon(1e-4));
}

TEST_CASE("spd_inverse examples") {
  const SymMatrix inv_id = spd_inverse(SymMatrix::identity(2));
  CHECK(inv_id(0, 0) == Catch::Approx(1.0));
  CHECK(inv_id(0, 1) == Catch::Approx(0.0).margin(1e-15));

  SymMatrix d(2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const SymMatrix inv_d = spd_inverse(d);
  CHECK(inv_d(0, 0) == Catch::Approx(0.5));
  CHECK(inv_d(1, 1) == Catch::Approx(0.25));

  const SymMatrix a = gamma11_fisher();
  const double det = 0.6449340668482264;
  const SymMatrix inv = spd_inverse(a);
  CHECK(inv(0, 0) == Catch::Approx(1.0 / det).epsilon(1e-10));
  CHECK(inv(0, 1) == Catch::Approx(1.0 / det).epsilon(1e-10));
  CHECK(inv(1, 1) == Catch::Approx(1.6449340668482264 / det).epsilon(1e-10));

  const SymMatrix prod = mat_mul(a, inv);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(prod(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-9));
}

TEST_CASE("min_eigenvalue closed-form cases") {
  CHECK(min_eigenvalue(SymMatrix::identity(2)) == Catch::Approx(1.0));

  SymMatrix d(2);
  d(0, 0) = 2.0;
  d(1, 1) = 3.0;
  CHECK(min_eigenvalue(d) == Catch::Approx(2.0));

  const SymMatrix a = gamma11_fisher();
  const double tr = a(0, 0) + a(1, 1);
  const double det = a(0, 0) * a(1, 1) - 1.0;
  const double oracle = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
  CHECK(min_eigenvalue(a) == Catch::Approx(oracle).margin(1e-12));
  CHECK(min_eigenvalue(a) == Catch::Approx(0.27177).margin(5e-5));
}

TEST_CASE("min_eigenvalue via Jacobi for p >= 3") {
  // diag(5, 1, 9) rotated stays {1, 5, 9}
  RandomState rng(3);
  SymMatrix a(3);
  a(0, 0) = 5.0;
  a(1, 1) = 1.0;
  a(2, 2) = 9.0;
  a.set(0, 1, 0.5);
  a.set(1, 2, -0.25);
  // characteristic-polynomial oracle via scan of det(A - t I)
  auto det3 = [&](double t) {
    const double m00 = a(0, 0) - t, m11 = a(1, 1) - t, m22 = a(2, 2) - t;
    const double m01 = a(0, 1), m02 = a(0, 2), m12 = a(1, 2);
    return m00 * (m11 * m22 - m12 * m12) - m01 * (m01 * m22 - m12 * m02) +
           m02 * (m01 * m12 - m11 * m02);
  };
  double lo = 0.0, hi = 3.0;  // smallest root lies below trace/p
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (det3(lo) * det3(mid) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  CHECK(min_eigenvalue(a) == Catch::Approx(0.5 * (lo + hi)).margin(1e-8));

  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix s = random_spd(4, rng);
    const double lam = min_eigenvalue(s);
    CHECK(lam > 0.0);
    CHECK(lam <= s.trace() / s.dim() + 1e-12);
  }
}

TEST_CASE("property: solve round-trips and double inverse") {
  RandomState rng(99);
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 1 + static_cast<int>(rng.uniform() * 5.0);
    const SymMatrix a = random_spd(p, rng);
    ParamVector b(p);
    for (double& v : b) v = rng.normal();
    const ParamVector x = spd_solve(a, b);
    const ParamVector ax = mat_vec(a, x);
    double err = 0.0;
    for (int i = 0; i < p; ++i) err += (ax[i] - b[i]) * (ax[i] - b[i]);
    CHECK(std::sqrt(err) <= 1e-10 * (1.0 + norm2(b)));

    const SymMatrix aa = spd_inverse(spd_inverse(a));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        CHECK(aa(i, j) == Catch::Approx(a(i, j)).margin(1e-8 * (1.0 + frobenius_norm(a))));
  }
}

TEST_CASE("not positive definite is a crisp error") {
  SymMatrix a(2);
  a(0, 0) = 1.0;
  a.set(0, 1, 2.0);
  a(1, 1) = 1.0;  // det < 0
  CHECK_THROWS_AS(spd_solve(a, {1.0, 1.0}), NotPositiveDefinite);
  CHECK_THROWS_AS(spd_inverse(a), NotPositiveDefinite);

  SymMatrix nan_mat(2);
  nan_mat(0, 0) = std::nan("");
  CHECK_THROWS_AS(min_eigenvalue(nan_mat), std::domain_error);
}
