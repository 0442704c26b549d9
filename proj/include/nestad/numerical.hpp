#pragma once

// Finite-difference counterparts of the differentiation operators, on plain
// reals. Central differences throughout; the primed forms return f(x) as
// well. There is no numerical diffn or jacobianTv.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace nestad::numerical {

template <std::floating_point T>
using Vec = std::vector<T>;

/// Dense row-major matrix.
template <std::floating_point T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

  T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  T operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Matrix transposed() const {
    Matrix t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend std::ostream& operator<<(std::ostream& os, const Matrix& m) {
    os << '[';
    for (std::size_t i = 0; i < m.rows; ++i) {
      if (i) os << "; ";
      for (std::size_t j = 0; j < m.cols; ++j) os << (j ? " " : "") << m(i, j);
    }
    return os << ']';
  }
};

/// Step-size policy. h = base * max(1, |x|), with base sqrt(eps) for first
/// derivatives and cbrt(eps) for second derivatives (balances truncation
/// against rounding error).
template <std::floating_point T>
struct FdConfig {
  T first_base = std::sqrt(std::numeric_limits<T>::epsilon());
  T second_base = std::cbrt(std::numeric_limits<T>::epsilon());

  T first_step(T scale) const { return first_base * std::max(T(1), std::abs(scale)); }
  T second_step(T scale) const { return second_base * std::max(T(1), std::abs(scale)); }
};

namespace detail {

template <std::floating_point T>
T inf_norm(const Vec<T>& v) {
  T m = 0;
  for (T x : v) m = std::max(m, std::abs(x));
  return m;
}

template <std::floating_point T>
Vec<T> axpy(const Vec<T>& x, T a, const Vec<T>& v) {
  Vec<T> r(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * v[i];
  return r;
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw shape_error(msg);
}

// Central gradient with per-coordinate step base * max(1, |x_i|).
template <std::floating_point T, class F>
Vec<T> central_grad(F& f, const Vec<T>& x, T base) {
  Vec<T> g(x.size());
  Vec<T> xp(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T h = base * std::max(T(1), std::abs(x[i]));
    xp[i] = x[i] + h;
    const T fp = static_cast<T>(f(xp));
    xp[i] = x[i] - h;
    const T fm = static_cast<T>(f(xp));
    const T span = (x[i] + h) - (x[i] - h);
    xp[i] = x[i];
    g[i] = (fp - fm) / span;
  }
  return g;
}

// Directional step for x + h v.
template <std::floating_point T>
T directional_step(T base, const Vec<T>& x, const Vec<T>& v) {
  return base * std::max(T(1), inf_norm(x)) / inf_norm(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// R -> R

template <std::floating_point T, class F>
std::pair<T, T> diffp(F&& f, T x, const FdConfig<T>& cfg = {}) {
  const T h = cfg.first_step(x);
  const T xp = x + h, xm = x - h;
  return {static_cast<T>(f(x)), (static_cast<T>(f(xp)) - static_cast<T>(f(xm))) / (xp - xm)};
}

template <std::floating_point T, class F>
T diff(F&& f, T x, const FdConfig<T>& cfg = {}) {
  return diffp(f, x, cfg).second;
}

template <std::floating_point T, class F>
std::tuple<T, T, T> diff2pp(F&& f, T x, const FdConfig<T>& cfg = {}) {
  const T h = cfg.second_step(x);
  const T xp = x + h, xm = x - h;
  const T hp = xp - x, hm = x - xm;
  const T f0 = static_cast<T>(f(x)), fp = static_cast<T>(f(xp)), fm = static_cast<T>(f(xm));
  // three-point formulas on a possibly uneven grid
  const T d1 = (fp - fm) / (hp + hm);
  const T d2 = T(2) * (hm * fp - (hp + hm) * f0 + hp * fm) / (hp * hm * (hp + hm));
  return {f0, d1, d2};
}

template <std::floating_point T, class F>
std::pair<T, T> diff2p(F&& f, T x, const FdConfig<T>& cfg = {}) {
  auto [f0, d1, d2] = diff2pp(f, x, cfg);
  return {f0, d2};
}

template <std::floating_point T, class F>
T diff2(F&& f, T x, const FdConfig<T>& cfg = {}) {
  return std::get<2>(diff2pp(f, x, cfg));
}

// ---------------------------------------------------------------------------
// R^n -> R

template <std::floating_point T, class F>
std::pair<T, Vec<T>> gradp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return {static_cast<T>(f(x)), detail::central_grad(f, x, cfg.first_base)};
}

template <std::floating_point T, class F>
Vec<T> grad(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return detail::central_grad(f, x, cfg.first_base);
}

template <std::floating_point T, class F>
std::pair<T, T> gradvp(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  detail::require(x.size() == v.size(), "gradv: direction length does not match input");
  const T fx = static_cast<T>(f(x));
  if (detail::inf_norm(v) == T(0)) return {fx, T(0)};
  const T h = detail::directional_step(cfg.first_base, x, v);
  return {fx, (static_cast<T>(f(detail::axpy(x, h, v))) - static_cast<T>(f(detail::axpy(x, -h, v)))) / (2 * h)};
}

template <std::floating_point T, class F>
T gradv(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  return gradvp(f, x, v, cfg).second;
}

/// Differences of a central gradient, both levels at the second-order step,
/// then symmetrized.
template <std::floating_point T, class F>
std::tuple<T, Vec<T>, Matrix<T>> gradhessianp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  const std::size_t n = x.size();
  Matrix<T> h(n, n);
  Vec<T> xp(x);
  for (std::size_t j = 0; j < n; ++j) {
    const T s = cfg.second_step(x[j]);
    xp[j] = x[j] + s;
    const Vec<T> gp = detail::central_grad(f, xp, cfg.second_base);
    xp[j] = x[j] - s;
    const Vec<T> gm = detail::central_grad(f, xp, cfg.second_base);
    const T span = (x[j] + s) - (x[j] - s);
    xp[j] = x[j];
    for (std::size_t i = 0; i < n; ++i) h(i, j) = (gp[i] - gm[i]) / span;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) h(i, j) = h(j, i) = (h(i, j) + h(j, i)) / 2;
  return {static_cast<T>(f(x)), detail::central_grad(f, x, cfg.first_base), std::move(h)};
}

template <std::floating_point T, class F>
std::pair<Vec<T>, Matrix<T>> gradhessian(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  auto [v, g, h] = gradhessianp(f, x, cfg);
  return {std::move(g), std::move(h)};
}

template <std::floating_point T, class F>
std::pair<T, Matrix<T>> hessianp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  auto [v, g, h] = gradhessianp(f, x, cfg);
  return {v, std::move(h)};
}

template <std::floating_point T, class F>
Matrix<T> hessian(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return std::get<2>(gradhessianp(f, x, cfg));
}

template <std::floating_point T, class F>
std::tuple<T, T, Vec<T>> gradhessianvp(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  detail::require(x.size() == v.size(), "hessianv: direction length does not match input");
  auto [fx, gv] = gradvp(f, x, v, cfg);
  if (detail::inf_norm(v) == T(0)) return {fx, gv, Vec<T>(x.size(), T(0))};
  const T h = detail::directional_step(cfg.second_base, x, v);
  const Vec<T> gp = detail::central_grad(f, detail::axpy(x, h, v), cfg.second_base);
  const Vec<T> gm = detail::central_grad(f, detail::axpy(x, -h, v), cfg.second_base);
  Vec<T> hv(x.size());
  for (std::size_t i = 0; i < hv.size(); ++i) hv[i] = (gp[i] - gm[i]) / (2 * h);
  return {fx, gv, std::move(hv)};
}

template <std::floating_point T, class F>
std::pair<T, Vec<T>> gradhessianv(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  auto [fx, gv, hv] = gradhessianvp(f, x, v, cfg);
  return {gv, std::move(hv)};
}

template <std::floating_point T, class F>
std::pair<T, Vec<T>> hessianvp(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  auto [fx, gv, hv] = gradhessianvp(f, x, v, cfg);
  return {fx, std::move(hv)};
}

template <std::floating_point T, class F>
Vec<T> hessianv(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  return std::get<2>(gradhessianvp(f, x, v, cfg));
}

template <std::floating_point T, class F>
std::pair<T, T> laplacianp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  const T f0 = static_cast<T>(f(x));
  T sum = 0;
  Vec<T> xp(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T h = cfg.second_step(x[i]);
    xp[i] = x[i] + h;
    const T fp = static_cast<T>(f(xp));
    const T hp = xp[i] - x[i];
    xp[i] = x[i] - h;
    const T fm = static_cast<T>(f(xp));
    const T hm = x[i] - xp[i];
    xp[i] = x[i];
    sum += T(2) * (hm * fp - (hp + hm) * f0 + hp * fm) / (hp * hm * (hp + hm));
  }
  return {f0, sum};
}

template <std::floating_point T, class F>
T laplacian(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return laplacianp(f, x, cfg).second;
}

// ---------------------------------------------------------------------------
// R^n -> R^m

template <std::floating_point T, class F>
std::pair<Vec<T>, Matrix<T>> jacobianp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  const Vec<T> y = f(x);
  const std::size_t n = x.size(), m = y.size();
  Matrix<T> j(m, n);
  Vec<T> xp(x);
  for (std::size_t c = 0; c < n; ++c) {
    const T h = cfg.first_step(x[c]);
    xp[c] = x[c] + h;
    const Vec<T> yp = f(xp);
    xp[c] = x[c] - h;
    const Vec<T> ym = f(xp);
    const T span = (x[c] + h) - (x[c] - h);
    xp[c] = x[c];
    detail::require(yp.size() == m && ym.size() == m, "jacobian: output length changed between evaluations");
    for (std::size_t r = 0; r < m; ++r) j(r, c) = (yp[r] - ym[r]) / span;
  }
  return {y, std::move(j)};
}

template <std::floating_point T, class F>
Matrix<T> jacobian(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return jacobianp(f, x, cfg).second;
}

template <std::floating_point T, class F>
std::pair<Vec<T>, Matrix<T>> jacobianTp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  auto [y, j] = jacobianp(f, x, cfg);
  return {std::move(y), j.transposed()};
}

template <std::floating_point T, class F>
Matrix<T> jacobianT(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return jacobian(f, x, cfg).transposed();
}

template <std::floating_point T, class F>
std::pair<Vec<T>, Vec<T>> jacobianvp(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  detail::require(x.size() == v.size(), "jacobianv: direction length does not match input");
  Vec<T> y = f(x);
  if (detail::inf_norm(v) == T(0)) return {y, Vec<T>(y.size(), T(0))};
  const T h = detail::directional_step(cfg.first_base, x, v);
  const Vec<T> yp = f(detail::axpy(x, h, v));
  const Vec<T> ym = f(detail::axpy(x, -h, v));
  detail::require(yp.size() == y.size() && ym.size() == y.size(), "jacobianv: output length changed");
  Vec<T> jv(y.size());
  for (std::size_t i = 0; i < jv.size(); ++i) jv[i] = (yp[i] - ym[i]) / (2 * h);
  return {std::move(y), std::move(jv)};
}

template <std::floating_point T, class F>
Vec<T> jacobianv(F&& f, const Vec<T>& x, const Vec<T>& v, const FdConfig<T>& cfg = {}) {
  return jacobianvp(f, x, v, cfg).second;
}

template <std::floating_point T, class F>
std::tuple<Vec<T>, Vec<T>, T> curldivp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  detail::require(x.size() == 3, "curl: defined for R^3 -> R^3 only");
  auto [y, j] = jacobianp(f, x, cfg);
  detail::require(y.size() == 3, "curl: defined for R^3 -> R^3 only");
  Vec<T> c{j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1)};
  return {std::move(y), std::move(c), j(0, 0) + j(1, 1) + j(2, 2)};
}

template <std::floating_point T, class F>
std::pair<Vec<T>, T> curldiv(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  auto [y, c, d] = curldivp(f, x, cfg);
  return {std::move(c), d};
}

template <std::floating_point T, class F>
std::pair<Vec<T>, Vec<T>> curlp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  auto [y, c, d] = curldivp(f, x, cfg);
  return {std::move(y), std::move(c)};
}

template <std::floating_point T, class F>
Vec<T> curl(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return std::get<1>(curldivp(f, x, cfg));
}

template <std::floating_point T, class F>
std::pair<Vec<T>, T> divp(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  auto [y, j] = jacobianp(f, x, cfg);
  detail::require(y.size() == x.size(), "div: requires n == m");
  T tr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) tr += j(i, i);
  return {std::move(y), tr};
}

template <std::floating_point T, class F>
T div(F&& f, const Vec<T>& x, const FdConfig<T>& cfg = {}) {
  return divp(f, x, cfg).second;
}

}  // namespace nestad::numerical
