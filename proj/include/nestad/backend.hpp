#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace nestad {

/// Raw-array kernels used by the array intrinsics for primal computation.
///
/// All matrices are dense and row-major. Implementations must be pure
/// functions of their inputs and safe to call concurrently on distinct
/// buffers. Output spans never alias input spans.
template <std::floating_point T>
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string_view name() const noexcept = 0;

  /// out = x + y
  virtual void add(std::span<const T> x, std::span<const T> y, std::span<T> out) const = 0;
  /// y += alpha * x
  virtual void axpy(T alpha, std::span<const T> x, std::span<T> y) const = 0;
  /// out = alpha * x
  virtual void scale(T alpha, std::span<const T> x, std::span<T> out) const = 0;
  virtual T dot(std::span<const T> x, std::span<const T> y) const = 0;
  virtual T l2norm(std::span<const T> x) const = 0;
  /// out[rows] = A[rows x cols] * x[cols]
  virtual void gemv(std::size_t rows, std::size_t cols, std::span<const T> a, std::span<const T> x,
                    std::span<T> out) const = 0;
  /// out[m x n] = A[m x k] * B[k x n]
  virtual void gemm(std::size_t m, std::size_t k, std::size_t n, std::span<const T> a, std::span<const T> b,
                    std::span<T> out) const = 0;
  /// Solves A X = B for symmetric A[n x n], B[n x nrhs]. Throws solve_error
  /// when A is singular.
  virtual void solve_symmetric(std::size_t n, std::size_t nrhs, std::span<const T> a, std::span<const T> b,
                               std::span<T> out) const = 0;
  virtual void map(std::span<const T> x, std::span<T> out, const std::function<T(T)>& f) const = 0;
};

namespace detail {

/// In-place Cholesky factorisation A = L L^T of a row-major n x n matrix.
/// Only the lower triangle is read and written. Returns false when A is not
/// positive definite.
template <std::floating_point T>
bool cholesky_in_place(std::size_t n, std::span<T> a) {
  for (std::size_t j = 0; j < n; ++j) {
    T d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > T(0))) return false;
    const T ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      T s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
  return true;
}

/// LU with partial pivoting; solves in place into `x` (n x nrhs).
template <std::floating_point T>
void lu_solve(std::size_t n, std::size_t nrhs, std::vector<T> a, std::span<T> x) {
  T scale = 0;
  for (T v : a) scale = std::max(scale, std::abs(v));
  const T tiny = scale * static_cast<T>(n) * std::numeric_limits<T>::epsilon();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (!(std::abs(a[piv * n + col]) > tiny)) throw solve_error("singular matrix in solve_symmetric");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      for (std::size_t c = 0; c < nrhs; ++c) std::swap(x[col * nrhs + c], x[piv * nrhs + c]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const T f = a[r * n + col] / a[col * n + col];
      if (f == T(0)) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      for (std::size_t c = 0; c < nrhs; ++c) x[r * nrhs + c] -= f * x[col * nrhs + c];
    }
  }
  for (std::size_t r = n; r-- > 0;) {
    for (std::size_t c = 0; c < nrhs; ++c) {
      T s = x[r * nrhs + c];
      for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k * nrhs + c];
      x[r * nrhs + c] = s / a[r * n + r];
    }
  }
}

}  // namespace detail

/// Dependency-free backend: naive loops, Cholesky with an LU fallback.
template <std::floating_point T>
class ReferenceBackend final : public Backend<T> {
 public:
  std::string_view name() const noexcept override { return "reference"; }

  void add(std::span<const T> x, std::span<const T> y, std::span<T> out) const override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  }

  void axpy(T alpha, std::span<const T> x, std::span<T> y) const override {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
  }

  void scale(T alpha, std::span<const T> x, std::span<T> out) const override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * x[i];
  }

  T dot(std::span<const T> x, std::span<const T> y) const override {
    T s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
  }

  T l2norm(std::span<const T> x) const override {
    // Scaled accumulation so large entries do not overflow the sum of squares.
    T big = 0;
    for (T v : x) big = std::max(big, std::abs(v));
    if (big == T(0) || !std::isfinite(big)) return big;
    T s = 0;
    for (T v : x) s += (v / big) * (v / big);
    return big * std::sqrt(s);
  }

  void gemv(std::size_t rows, std::size_t cols, std::span<const T> a, std::span<const T> x,
            std::span<T> out) const override {
    for (std::size_t i = 0; i < rows; ++i) {
      T s = 0;
      for (std::size_t j = 0; j < cols; ++j) s += a[i * cols + j] * x[j];
      out[i] = s;
    }
  }

  void gemm(std::size_t m, std::size_t k, std::size_t n, std::span<const T> a, std::span<const T> b,
            std::span<T> out) const override {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        T s = 0;
        for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
        out[i * n + j] = s;
      }
  }

  void solve_symmetric(std::size_t n, std::size_t nrhs, std::span<const T> a, std::span<const T> b,
                       std::span<T> out) const override {
    std::vector<T> l(a.begin(), a.end());
    std::copy(b.begin(), b.end(), out.begin());
    if (!detail::cholesky_in_place<T>(n, l)) {
      detail::lu_solve<T>(n, nrhs, std::vector<T>(a.begin(), a.end()), out);
      return;
    }
    for (std::size_t c = 0; c < nrhs; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        T s = out[i * nrhs + c];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * out[k * nrhs + c];
        out[i * nrhs + c] = s / l[i * n + i];
      }
      for (std::size_t i = n; i-- > 0;) {
        T s = out[i * nrhs + c];
        for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * out[k * nrhs + c];
        out[i * nrhs + c] = s / l[i * n + i];
      }
    }
  }

  void map(std::span<const T> x, std::span<T> out, const std::function<T(T)>& f) const override {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  }
};

namespace detail {

template <std::floating_point T>
std::atomic<const Backend<T>*>& backend_slot() {
  static const ReferenceBackend<T> reference;
  static std::atomic<const Backend<T>*> slot{&reference};
  return slot;
}

}  // namespace detail

/// The backend used for all primal array arithmetic of precision T.
template <std::floating_point T>
const Backend<T>& backend() noexcept {
  return *detail::backend_slot<T>().load(std::memory_order_acquire);
}

/// Installs `b` as the active backend and returns the previous one. The
/// caller keeps ownership; `b` must outlive every computation that uses it.
template <std::floating_point T>
const Backend<T>& set_backend(const Backend<T>& b) noexcept {
  return *detail::backend_slot<T>().exchange(&b, std::memory_order_acq_rel);
}

/// Reports whether a symmetric row-major matrix is positive definite.
template <std::floating_point T>
bool is_positive_definite(std::size_t n, std::span<const T> a) {
  std::vector<T> l(a.begin(), a.end());
  return detail::cholesky_in_place<T>(n, l);
}

}  // namespace nestad
