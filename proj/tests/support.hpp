#pragma once

// Shared helpers for the unit and acceptance tests. Oracles here use only
// plain floating point and the standard library, never the AD code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <nestad/nestad.hpp>

namespace testing_support {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;
  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

inline Mat matmul(const Mat& x, const Mat& y) {
  Mat z(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t k = 0; k < x.cols; ++k)
      for (std::size_t j = 0; j < y.cols; ++j) z(i, j) += x(i, k) * y(k, j);
  return z;
}

inline Mat transposed(const Mat& x) {
  Mat t(x.cols, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) t(j, i) = x(i, j);
  return t;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Gaussian elimination with partial pivoting; independent of the backend.
inline Vec gauss_solve(Mat a, Vec b) {
  const std::size_t n = a.rows;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

inline Mat inverse(const Mat& a) {
  Mat inv(a.rows, a.rows);
  for (std::size_t j = 0; j < a.rows; ++j) {
    Vec e(a.rows, 0.0);
    e[j] = 1.0;
    const Vec c = gauss_solve(a, e);
    for (std::size_t i = 0; i < a.rows; ++i) inv(i, j) = c[i];
  }
  return inv;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(g_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g_); }
  Vec vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  Mat mat(std::size_t r, std::size_t c) {
    Mat m(r, c);
    for (auto& x : m.a) x = uniform();
    return m;
  }
  // Well-conditioned symmetric positive definite: B B^T + n I.
  Mat spd(std::size_t n) {
    const Mat b = mat(n, n);
    Mat s = matmul(b, transposed(b));
    for (std::size_t i = 0; i < n; ++i) s(i, i) += static_cast<double>(n);
    return s;
  }
  std::mt19937_64& engine() { return g_; }

 private:
  std::mt19937_64 g_;
};

inline nestad::DV64 dv(const Vec& v) { return nestad::DV64(v); }
inline nestad::DM64 dm(const Mat& m) { return nestad::DM64(m.rows, m.cols, m.a); }
inline Vec vals(const nestad::DV64& v) { return v.to_vector(); }
inline Mat vals(const nestad::DM64& m) {
  Mat r(m.rows(), m.cols());
  const auto s = m.values();
  std::copy(s.begin(), s.end(), r.a.begin());
  return r;
}
inline Mat vals(const nestad::numerical::Matrix<double>& m) {
  Mat r(m.rows, m.cols);
  r.a = m.data;
  return r;
}

// |a - b| <= max(abs_tol, rel_tol * |b|)
inline bool close(double a, double b, double abs_tol, double rel_tol) {
  return std::abs(a - b) <= std::max(abs_tol, rel_tol * std::abs(b));
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols) return INFINITY;
  return max_abs_diff(a.a, b.a);
}

inline bool all_close(const Vec& a, const Vec& b, double abs_tol, double rel_tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!close(a[i], b[i], abs_tol, rel_tol)) return false;
  return true;
}

inline bool all_close(const Mat& a, const Mat& b, double abs_tol, double rel_tol) {
  return a.rows == b.rows && a.cols == b.cols && all_close(a.a, b.a, abs_tol, rel_tol);
}

// Central difference of a plain real function, fixed step.
inline double central(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

inline Vec central_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

inline Mat central_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const std::size_t m = f(x).size();
  Mat j(m, x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    Vec p = x, q = x;
    p[c] += h;
    q[c] -= h;
    const Vec fp = f(p), fq = f(q);
    for (std::size_t r = 0; r < m; ++r) j(r, c) = (fp[r] - fq[r]) / (2 * h);
  }
  return j;
}

// A dual number with no tag, used to show what nesting without tags gets wrong.
struct UntaggedDual {
  double v;
  double d;
};
inline UntaggedDual operator+(UntaggedDual a, UntaggedDual b) { return {a.v + b.v, a.d + b.d}; }
inline UntaggedDual operator*(UntaggedDual a, UntaggedDual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }

template <class F>
UntaggedDual untagged_diff(F f, UntaggedDual x) {
  // the seeded perturbation cannot be told apart from one already in f
  const UntaggedDual y = f(UntaggedDual{x.v, 1.0});
  return {y.d, 0.0};
}

}  // namespace testing_support
