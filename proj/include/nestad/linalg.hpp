#pragma once

// Differentiable vectors and matrices. Include <nestad/core.hpp> rather than
// this header directly.

#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <ostream>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "array.hpp"
#include "scalar.hpp"
#include "tape.hpp"

namespace nestad {

/// Differentiable vector of length n (an n x 1 array underneath).
template <std::floating_point T>
class DV {
 public:
  using value_type = T;

  DV() : a_(0, 1, {}) {}
  DV(std::initializer_list<T> xs) : a_(xs.size(), 1, std::vector<T>(xs)) {}
  explicit DV(std::vector<T> xs) : a_(detail::Arr<T>::column(std::move(xs))) {}
  explicit DV(std::span<const D<T>> xs) : a_(detail::assemble<T>(xs.size(), 1, xs)) {}
  explicit DV(const std::vector<D<T>>& xs) : DV(std::span<const D<T>>(xs)) {}
  explicit DV(detail::Arr<T> a) : a_(std::move(a)) {
    detail::require(a_.cols() == 1, "DV: array " + detail::shape_of(a_) + " is not a column");
  }

  static DV zeros(std::size_t n) { return DV(std::vector<T>(n, T(0))); }
  static DV filled(std::size_t n, T v) { return DV(std::vector<T>(n, v)); }
  /// i-th standard basis vector.
  static DV basis(std::size_t n, std::size_t i) {
    std::vector<T> v(n, T(0));
    v.at(i) = T(1);
    return DV(std::move(v));
  }

  std::size_t size() const noexcept { return a_.rows(); }
  bool empty() const noexcept { return size() == 0; }
  D<T> operator[](std::size_t i) const { return detail::element(a_, i); }
  std::span<const T> values() const noexcept { return a_.values(); }
  std::vector<T> to_vector() const { return {values().begin(), values().end()}; }

  Mode mode() const noexcept { return a_.mode(); }
  bool is_const() const noexcept { return a_.is_const(); }
  Tag tag() const { return a_.tag(); }
  bool carries(Tag t) const noexcept { return a_.carries(t); }
  DV primal() const { return DV(a_.primal()); }

  const detail::Arr<T>& arr() const noexcept { return a_; }

  DV& operator+=(const DV& o) { return *this = *this + o; }
  DV& operator-=(const DV& o) { return *this = *this - o; }

 private:
  detail::Arr<T> a_;
};

/// Differentiable row-major matrix.
template <std::floating_point T>
class DM {
 public:
  using value_type = T;

  DM() : a_(0, 0, {}) {}
  DM(std::size_t rows, std::size_t cols, std::vector<T> data) : a_(rows, cols, std::move(data)) {}
  DM(std::initializer_list<std::initializer_list<T>> rows) : a_(from_rows(rows)) {}
  explicit DM(detail::Arr<T> a) : a_(std::move(a)) {}

  static DM zeros(std::size_t rows, std::size_t cols) { return DM(detail::Arr<T>::filled(rows, cols, T(0))); }
  static DM identity(std::size_t n) {
    std::vector<T> v(n * n, T(0));
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = T(1);
    return DM(n, n, std::move(v));
  }
  /// Matrix whose rows are the given vectors.
  static DM from_rows(std::span<const DV<T>> rows, std::size_t cols) {
    std::vector<detail::Arr<T>> as;
    as.reserve(rows.size());
    for (const auto& r : rows) as.push_back(r.arr());
    return DM(detail::stack_rows<T>(as, cols));
  }
  /// Matrix whose columns are the given vectors.
  static DM from_cols(std::span<const DV<T>> cols, std::size_t rows) {
    return DM(detail::transpose(from_rows(cols, rows).arr()));
  }
  /// rows x cols matrix from row-major scalars.
  static DM from_scalars(std::size_t rows, std::size_t cols, std::span<const D<T>> xs) {
    return DM(detail::assemble<T>(rows, cols, xs));
  }

  std::size_t rows() const noexcept { return a_.rows(); }
  std::size_t cols() const noexcept { return a_.cols(); }
  D<T> operator()(std::size_t i, std::size_t j) const {
    detail::require(i < rows() && j < cols(), "DM: index out of range for " + detail::shape_of(a_));
    return detail::element(a_, i * cols() + j);
  }
  DV<T> row(std::size_t i) const { return DV<T>(detail::row(a_, i)); }
  DV<T> col(std::size_t j) const { return DV<T>(detail::row(detail::transpose(a_), j)); }
  std::span<const T> values() const noexcept { return a_.values(); }

  Mode mode() const noexcept { return a_.mode(); }
  bool is_const() const noexcept { return a_.is_const(); }
  Tag tag() const { return a_.tag(); }
  bool carries(Tag t) const noexcept { return a_.carries(t); }
  DM primal() const { return DM(a_.primal()); }

  const detail::Arr<T>& arr() const noexcept { return a_; }

 private:
  static detail::Arr<T> from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      detail::require(row.size() == c, "DM: ragged initializer");
      data.insert(data.end(), row.begin(), row.end());
    }
    return detail::Arr<T>(r, c, std::move(data));
  }

  detail::Arr<T> a_;
};

using DV64 = DV<double>;
using DV32 = DV<float>;
using DM64 = DM<double>;
using DM32 = DM<float>;

// Vector arithmetic.

template <std::floating_point T>
DV<T> operator+(const DV<T>& a, const DV<T>& b) {
  return DV<T>(detail::add(a.arr(), b.arr()));
}
template <std::floating_point T>
DV<T> operator-(const DV<T>& a, const DV<T>& b) {
  return DV<T>(detail::sub(a.arr(), b.arr()));
}
template <std::floating_point T>
DV<T> operator-(const DV<T>& a) {
  return DV<T>(detail::neg(a.arr()));
}
template <std::floating_point T>
DV<T> operator*(const D<T>& s, const DV<T>& v) {
  return DV<T>(detail::scale(s, v.arr()));
}
template <std::floating_point T>
DV<T> operator*(const DV<T>& v, const D<T>& s) {
  return s * v;
}
template <std::floating_point T>
DV<T> operator*(std::type_identity_t<T> s, const DV<T>& v) {
  return D<T>(s) * v;
}
template <std::floating_point T>
DV<T> operator*(const DV<T>& v, std::type_identity_t<T> s) {
  return D<T>(s) * v;
}
template <std::floating_point T>
DV<T> operator/(const DV<T>& v, const D<T>& s) {
  return (D<T>(1) / s) * v;
}
template <std::floating_point T>
DV<T> operator/(const DV<T>& v, std::type_identity_t<T> s) {
  return D<T>(T(1) / s) * v;
}

template <std::floating_point T>
D<T> dot(const DV<T>& a, const DV<T>& b) {
  return detail::dot(a.arr(), b.arr());
}
template <std::floating_point T>
D<T> l2norm(const DV<T>& v) {
  return detail::l2norm(v.arr());
}
template <std::floating_point T>
D<T> sum(const DV<T>& v) {
  return detail::sum(v.arr());
}
template <std::floating_point T>
DV<T> hadamard(const DV<T>& a, const DV<T>& b) {
  return DV<T>(detail::hadamard(a.arr(), b.arr()));
}

/// a * x + y
template <std::floating_point T>
DV<T> axpy(const D<T>& a, const DV<T>& x, const DV<T>& y) {
  return DV<T>(detail::add(detail::scale(a, x.arr()), y.arr()));
}

/// Elementwise f(v_i). Evaluated per element on D values (slow path).
template <std::floating_point T, class F>
DV<T> map(F&& f, const DV<T>& v) {
  return DV<T>(detail::map(v.arr(), std::forward<F>(f)));
}
template <std::floating_point T, class F>
DV<T> map2(F&& f, const DV<T>& a, const DV<T>& b) {
  return DV<T>(detail::map2(a.arr(), b.arr(), std::forward<F>(f)));
}

// Matrix arithmetic.

template <std::floating_point T>
DM<T> operator+(const DM<T>& a, const DM<T>& b) {
  return DM<T>(detail::add(a.arr(), b.arr()));
}
template <std::floating_point T>
DM<T> operator-(const DM<T>& a, const DM<T>& b) {
  return DM<T>(detail::sub(a.arr(), b.arr()));
}
template <std::floating_point T>
DM<T> operator-(const DM<T>& a) {
  return DM<T>(detail::neg(a.arr()));
}
template <std::floating_point T>
DM<T> operator*(const D<T>& s, const DM<T>& m) {
  return DM<T>(detail::scale(s, m.arr()));
}
template <std::floating_point T>
DM<T> operator*(std::type_identity_t<T> s, const DM<T>& m) {
  return D<T>(s) * m;
}
template <std::floating_point T>
DM<T> operator*(const DM<T>& a, const DM<T>& b) {
  return DM<T>(detail::matmul(a.arr(), b.arr()));
}
template <std::floating_point T>
DV<T> operator*(const DM<T>& a, const DV<T>& x) {
  return DV<T>(detail::matmul(a.arr(), x.arr()));
}

template <std::floating_point T>
DM<T> matmul(const DM<T>& a, const DM<T>& b) {
  return a * b;
}
template <std::floating_point T>
DV<T> matvec(const DM<T>& a, const DV<T>& x) {
  return a * x;
}
template <std::floating_point T>
DM<T> transpose(const DM<T>& a) {
  return DM<T>(detail::transpose(a.arr()));
}
template <std::floating_point T>
D<T> sum(const DM<T>& a) {
  return detail::sum(a.arr());
}
template <std::floating_point T>
DM<T> hadamard(const DM<T>& a, const DM<T>& b) {
  return DM<T>(detail::hadamard(a.arr(), b.arr()));
}
template <std::floating_point T>
DM<T> axpy(const D<T>& a, const DM<T>& x, const DM<T>& y) {
  return DM<T>(detail::add(detail::scale(a, x.arr()), y.arr()));
}
/// Frobenius inner product.
template <std::floating_point T>
D<T> dot(const DM<T>& a, const DM<T>& b) {
  return detail::dot(a.arr(), b.arr());
}
template <std::floating_point T>
D<T> trace(const DM<T>& a) {
  detail::require(a.rows() == a.cols(), "trace: matrix " + detail::shape_of(a.arr()) + " is not square");
  D<T> s(0);
  for (std::size_t i = 0; i < a.rows(); ++i) s = s + a(i, i);
  return s;
}
template <std::floating_point T, class F>
DM<T> map(F&& f, const DM<T>& m) {
  return DM<T>(detail::map(m.arr(), std::forward<F>(f)));
}

/// Solves A x = b for symmetric A (checked to relative Frobenius asymmetry
/// 1e-10 in double precision). Throws symmetry_error or solve_error.
template <std::floating_point T>
DV<T> solve_symmetric(const DM<T>& a, const DV<T>& b) {
  return DV<T>(detail::solve_symmetric(a.arr(), b.arr()));
}
template <std::floating_point T>
DM<T> solve_symmetric(const DM<T>& a, const DM<T>& b) {
  return DM<T>(detail::solve_symmetric(a.arr(), b.arr()));
}

// Layer extraction for arrays, mirroring primal/tangent on D.

template <std::floating_point T>
DV<T> primal(const DV<T>& v) {
  return v.primal();
}
template <std::floating_point T>
DM<T> primal(const DM<T>& m) {
  return m.primal();
}
template <std::floating_point T>
DV<T> tangent(const DV<T>& v, Tag t) {
  return DV<T>(detail::tangent_of(v.arr(), t));
}
template <std::floating_point T>
DM<T> tangent(const DM<T>& m, Tag t) {
  return DM<T>(detail::tangent_of(m.arr(), t));
}
template <std::floating_point T>
DV<T> make_dual(const DV<T>& primal, const DV<T>& tangent, Tag t) {
  if ((!primal.is_const() && primal.tag() >= t) || (!tangent.is_const() && tangent.tag() >= t))
    throw tag_error("make_dual: components must carry tags below the new layer's tag");
  return DV<T>(detail::arr_access::dual(primal.arr(), tangent.arr(), t));
}
template <std::floating_point T>
DM<T> make_dual(const DM<T>& primal, const DM<T>& tangent, Tag t) {
  if ((!primal.is_const() && primal.tag() >= t) || (!tangent.is_const() && tangent.tag() >= t))
    throw tag_error("make_dual: components must carry tags below the new layer's tag");
  return DM<T>(detail::arr_access::dual(primal.arr(), tangent.arr(), t));
}

template <std::floating_point T>
std::ostream& operator<<(std::ostream& os, const DV<T>& v) {
  os << "DV [";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v.values()[i];
  return os << "]";
}

template <std::floating_point T>
std::ostream& operator<<(std::ostream& os, const DM<T>& m) {
  os << "DM [";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "; " : "");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m.values()[i * m.cols() + j];
  }
  return os << "]";
}

}  // namespace nestad
