#pragma once

// Small dense real linear algebra: vectors, square matrices, partial-pivoting
// LU, and spectral norms. Sized for n up to a few hundred.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nu {

class SingularError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class Vec {
public:
  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vec(std::initializer_list<double> xs) : data_(xs) {}
  explicit Vec(std::vector<double> xs) : data_(std::move(xs)) {}

  static Vec unit(std::size_t n, std::size_t i) {
    Vec e(n);
    e[i] = 1.0;
    return e;
  }

  std::size_t size() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  Vec& operator+=(const Vec& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    check_same(o);
    for (std::size_t i = 0; i < size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  friend bool operator==(const Vec&, const Vec&) = default;

private:
  void check_same(const Vec& o) const {
    if (o.size() != size()) throw DimensionError("vector dimension mismatch");
  }

  std::vector<double> data_;
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("vector dimension mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Euclidean norm, scaled to avoid overflow/underflow on extreme entries.
inline double norm(const Vec& a) {
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double x : a) s += (x / scale) * (x / scale);
  return scale * std::sqrt(s);
}

inline double distance(const Vec& a, const Vec& b) { return norm(a - b); }

// Square row-major matrix.
class Mat {
public:
  Mat() = default;
  explicit Mat(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& r : rows) {
      if (r.size() != n_) throw DimensionError("matrix must be square");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat a(n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
  }
  static Mat diagonal(const Vec& d) {
    Mat a(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) a(i, i) = d[i];
    return a;
  }
  static Mat outer(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw DimensionError("outer product needs equal dimensions");
    Mat a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < y.size(); ++j) a(i, j) = x[i] * y[j];
    return a;
  }

  std::size_t dim() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  Mat transposed() const {
    Mat t(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Mat& operator+=(const Mat& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    check_same(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Mat& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  friend Vec operator*(const Mat& a, const Vec& x) {
    if (x.size() != a.n_) throw DimensionError("matrix-vector dimension mismatch");
    Vec y(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.n_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }
  friend Mat operator*(const Mat& a, const Mat& b) {
    a.check_same(b);
    Mat c(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t k = 0; k < a.n_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  // y = A^T x
  Vec transpose_times(const Vec& x) const {
    if (x.size() != n_) throw DimensionError("matrix-vector dimension mismatch");
    Vec y(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) y[j] += (*this)(i, j) * x[i];
    return y;
  }

private:
  void check_same(const Mat& o) const {
    if (o.n_ != n_) throw DimensionError("matrix dimension mismatch");
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

// Packed PA = LU with unit lower triangle stored below the diagonal.
class LuFactors {
public:
  std::size_t dim() const { return lu_.dim(); }
  double min_abs_pivot() const { return min_pivot_; }
  const std::vector<std::size_t>& permutation() const { return perm_; }
  double pivot(std::size_t k) const { return lu_(k, k); }

  // Solves A x = b.
  Vec solve(const Vec& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw DimensionError("lu_solve: right-hand side dimension mismatch");
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

  // Solves A^T x = b.
  Vec solve_transposed(const Vec& b) const {
    const std::size_t n = dim();
    if (b.size() != n) throw DimensionError("lu_solve: right-hand side dimension mismatch");
    // A^T = U^T L^T P, so solve U^T w = b, L^T z = w, x = P^T z.
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(j, i) * w[j];
      w[i] = s / lu_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = w[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(j, i) * w[j];
      w[i] = s;
    }
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = w[i];
    return x;
  }

private:
  friend LuFactors lu_factor(const Mat& a, double pivot_tol);

  Mat lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
};

inline constexpr double kDefaultPivotTol = 1e-12;

// Partial-pivoting LU. Throws SingularError when a pivot falls below
// pivot_tol * max|a_ij| (an all-zero matrix is always singular).
inline LuFactors lu_factor(const Mat& a, double pivot_tol = kDefaultPivotTol) {
  if (!(pivot_tol > 0.0)) throw std::invalid_argument("lu_factor: pivot_tol must be positive");
  const std::size_t n = a.dim();
  if (n == 0) throw DimensionError("lu_factor: empty matrix");
  if (!a.all_finite()) throw SingularError("lu_factor: non-finite matrix entry");

  const double threshold = pivot_tol * a.max_abs();
  LuFactors f;
  f.lu_ = a;
  f.perm_.resize(n);
  std::iota(f.perm_.begin(), f.perm_.end(), std::size_t{0});
  f.min_pivot_ = std::numeric_limits<double>::infinity();
  Mat& lu = f.lu_;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    const double piv = std::abs(lu(p, k));
    if (piv == 0.0 || piv < threshold)
      throw SingularError("lu_factor: pivot " + std::to_string(piv) + " below tolerance at column " +
                          std::to_string(k));
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
      std::swap(f.perm_[k], f.perm_[p]);
    }
    f.min_pivot_ = std::min(f.min_pivot_, piv);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu(i, k) / lu(k, k);
      lu(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
    }
  }
  return f;
}

inline Vec lu_solve(const LuFactors& f, const Vec& b) { return f.solve(b); }

namespace detail {

inline constexpr double kPowerTol = 1e-10;
inline constexpr int kPowerMaxIter = 10000;

// Largest eigenvalue of a symmetric positive semidefinite operator given by
// `apply`, by power iteration with a residual-based stopping rule.
template <class Apply>
double spsd_top_eigenvalue(std::size_t n, Vec start, Apply&& apply) {
  double nv = norm(start);
  if (nv == 0.0) {
    start = Vec(n, 1.0);
    nv = norm(start);
  }
  Vec v = (1.0 / nv) * start;
  double lambda = 0.0;
  for (int it = 0; it < kPowerMaxIter; ++it) {
    Vec w = apply(v);
    lambda = dot(v, w);
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    Vec r = w - lambda * v;
    if (norm(r) <= kPowerTol * std::max(lambda, 0.0)) break;
    v = (1.0 / nw) * w;
  }
  return std::max(lambda, 0.0);
}

// Start vector: the column of A^T A with the largest norm, which cannot be
// orthogonal to every dominant eigenvector.
inline Vec gram_start(const Mat& a) {
  const std::size_t n = a.dim();
  Vec best(n, 1.0);
  double best_norm = -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    Vec col = a.transpose_times(a * Vec::unit(n, j));
    const double c = norm(col);
    if (c > best_norm) {
      best_norm = c;
      best = std::move(col);
    }
  }
  // Blend in a fixed dense vector so exact orthogonality is not inherited from
  // sparse structure.
  Vec dense(n);
  for (std::size_t i = 0; i < n; ++i) dense[i] = 1.0 + 0.01 * static_cast<double>(i);
  if (best_norm > 0.0) best = (1.0 / best_norm) * best + 1e-3 * (1.0 / norm(dense)) * dense;
  return best;
}

}  // namespace detail

// Spectral norm ||A||_2.
inline double operator_norm(const Mat& a) {
  if (a.max_abs() == 0.0) return 0.0;
  const double lam = detail::spsd_top_eigenvalue(a.dim(), detail::gram_start(a),
                                                  [&](const Vec& v) { return a.transpose_times(a * v); });
  return std::sqrt(lam);
}

// ||A^{-1}||_2 = 1 / sigma_min(A), by power iteration on A^{-1} A^{-T}.
inline double inverse_operator_norm(const LuFactors& f) {
  const std::size_t n = f.dim();
  Vec start(n);
  for (std::size_t i = 0; i < n; ++i) start[i] = 1.0 + 0.01 * static_cast<double>(i);
  // One preliminary application concentrates the start on the dominant direction.
  start = f.solve(f.solve_transposed(start));
  const double lam = detail::spsd_top_eigenvalue(
      n, std::move(start), [&](const Vec& v) { return f.solve(f.solve_transposed(v)); });
  return std::sqrt(lam);
}

inline double inverse_operator_norm(const Mat& a, double pivot_tol = kDefaultPivotTol) {
  return inverse_operator_norm(lu_factor(a, pivot_tol));
}

}  // namespace nu
