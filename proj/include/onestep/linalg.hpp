#pragma once

// Dense symmetric p x p linear algebra for Fisher matrices (p small).
// Cholesky-based solve/inverse plus minimum eigenvalue (closed form for
// p <= 2, cyclic Jacobi sweeps otherwise).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace onestep {

using ParamVector = std::vector<double>;

struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what)
      : std::runtime_error(what) {}
};

class SymMatrix {
 public:
  explicit SymMatrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim, 0.0) {
    if (dim < 1) throw std::invalid_argument("SymMatrix: dim must be >= 1");
  }

  static SymMatrix identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  int dim() const { return dim_; }

  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }

  // Writes both triangles.
  void set(int i, int j, double v) {
    (*this)(i, j) = v;
    (*this)(j, i) = v;
  }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int dim_;
  std::vector<double> a_;
};

inline ParamVector mat_vec(const SymMatrix& a, const ParamVector& x) {
  const int p = a.dim();
  ParamVector y(p, 0.0);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) y[i] += a(i, j) * x[j];
  return y;
}

inline SymMatrix mat_mul(const SymMatrix& a, const SymMatrix& b) {
  const int p = a.dim();
  SymMatrix c(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (int k = 0; k < p; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline double frobenius_norm(const SymMatrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

inline double frobenius_distance(const SymMatrix& a, const SymMatrix& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) {
      const double d = a(i, j) - b(i, j);
      s += d * d;
    }
  return std::sqrt(s);
}

inline double norm2(const ParamVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

namespace detail {

// Lower-triangular Cholesky factor; pivots below eps_rel * trace/p fail.
inline SymMatrix cholesky(const SymMatrix& a) {
  const int p = a.dim();
  if (!a.all_finite()) throw std::domain_error("cholesky: non-finite entries");
  const double pivot_floor = 1e-12 * a.trace() / p;
  SymMatrix l(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= pivot_floor)
          throw NotPositiveDefinite("cholesky pivot " + std::to_string(s) +
                                    " at index " + std::to_string(i));
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

inline ParamVector chol_solve(const SymMatrix& l, const ParamVector& b) {
  const int p = l.dim();
  ParamVector y(p), x(p);
  for (int i = 0; i < p; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (int i = p - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < p; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

}  // namespace detail

inline ParamVector spd_solve(const SymMatrix& a, const ParamVector& b) {
  if (static_cast<int>(b.size()) != a.dim())
    throw std::invalid_argument("spd_solve: dimension mismatch");
  return detail::chol_solve(detail::cholesky(a), b);
}

inline SymMatrix spd_inverse(const SymMatrix& a) {
  const int p = a.dim();
  const SymMatrix l = detail::cholesky(a);
  SymMatrix inv(p);
  ParamVector e(p, 0.0);
  for (int j = 0; j < p; ++j) {
    e[j] = 1.0;
    ParamVector col = detail::chol_solve(l, e);
    e[j] = 0.0;
    for (int i = 0; i < p; ++i) inv(i, j) = col[i];
  }
  // symmetrize against round-off
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv.set(i, j, v);
    }
  return inv;
}

inline double min_eigenvalue(const SymMatrix& a) {
  if (!a.all_finite()) throw std::domain_error("min_eigenvalue: non-finite entries");
  const int p = a.dim();
  if (p == 1) return a(0, 0);
  if (p == 2) {
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return 0.5 * (tr - disc);
  }
  // cyclic Jacobi
  SymMatrix m = a;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-20 * (1.0 + frobenius_norm(m))) break;
    for (int q = 0; q < p; ++q)
      for (int r = q + 1; r < p; ++r) {
        if (std::fabs(m(q, r)) < 1e-300) continue;
        const double theta = (m(r, r) - m(q, q)) / (2.0 * m(q, r));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < p; ++k) {
          const double mkq = m(k, q), mkr = m(k, r);
          m(k, q) = c * mkq - s * mkr;
          m(k, r) = s * mkq + c * mkr;
        }
        for (int k = 0; k < p; ++k) {
          const double mqk = m(q, k), mrk = m(r, k);
          m(q, k) = c * mqk - s * mrk;
          m(r, k) = s * mqk + c * mrk;
        }
      }
  }
  double lo = m(0, 0);
  for (int i = 1; i < p; ++i) lo = std::min(lo, m(i, i));
  return lo;
}

}  // namespace onestep
