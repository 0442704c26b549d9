#pragma once

// Differentiable fixed points x* = g(x*, b).
//
// The primal is plain iteration from x0. Derivatives with respect to b do
// not unroll the iteration: a forward layer iterates primal and tangent
// jointly, and a reverse layer records g once at the converged point and
// solves the adjoint equation  w = xbar + (dg/dx)^T w  by iteration when
// the enclosing sweep reaches it.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>

#include "core.hpp"

namespace nestad {

template <std::floating_point T>
struct FpConfig {
  T tol = std::is_same_v<T, float> ? T(1e-5) : T(1e-10);  // infinity-norm of successive iterates
  std::size_t max_iter = 10000;
};

namespace detail {

template <std::floating_point T>
T max_abs_diff(std::span<const T> a, std::span<const T> b) {
  T r = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = std::abs(a[i] - b[i]);
    if (!(d <= r)) r = d;  // keeps NaN
  }
  return r;
}

template <std::floating_point T>
bool converged(T r, T tol) {
  return r <= tol;
}

template <std::floating_point T, class G>
Arr<T> apply_g(G& g, const Arr<T>& x, const Arr<T>& b) {
  const DV<T> y(g(DV<T>(x), DV<T>(b)));
  require(y.size() == x.rows(), "fixed_point: g maps a vector of length " + std::to_string(x.rows()) +
                                    " to one of length " + std::to_string(y.size()));
  return y.arr();
}

template <std::floating_point T, class G>
Arr<T> fixed_point_at(G& g, const Arr<T>& x0, const Arr<T>& b, const FpConfig<T>& cfg) {
  if (b.is_const()) {
    Arr<T> x = x0;
    T r = std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < cfg.max_iter; ++k) {
      Arr<T> xn = apply_g(g, x, b);
      r = max_abs_diff(xn.values(), x.values());
      x = std::move(xn);
      if (converged(r, cfg.tol)) return x;
    }
    throw convergence_error("primal", static_cast<double>(r), cfg.max_iter);
  }

  const Tag t = b.tag();
  const Arr<T>& bp = b.primal();
  // Solve every lower layer first; this layer only adds its own derivative.
  const Arr<T> xs = fixed_point_at(g, x0, bp, cfg);

  if (b.mode() == Mode::forward) {
    Arr<T> x = make_layer(xs, Arr<T>::filled(xs.rows(), 1, T(0)), t);
    T rp = 0, rt = 0;
    for (std::size_t k = 0; k < cfg.max_iter; ++k) {
      Arr<T> xn = apply_g(g, x, b);
      rp = max_abs_diff(xn.values(), x.values());
      rt = max_abs_diff(tangent_of(xn, t).values(), tangent_of(x, t).values());
      x = std::move(xn);
      if (converged(rp, cfg.tol) && converged(rt, cfg.tol)) return make_layer(xs, tangent_of(x, t), t);
    }
    if (!converged(rp, cfg.tol)) throw convergence_error("primal", static_cast<double>(rp), cfg.max_iter);
    throw convergence_error("tangent", static_cast<double>(rt), cfg.max_iter);
  }

  // Reverse layer: one recording of g at x*, on its own tape.
  auto inner = Tape<T>::create(fresh_tag());
  const Arr<T> xv = inner->variable(xs);
  const Arr<T> bv = inner->variable(bp);
  const Arr<T> y = apply_g(g, xv, bv);
  const std::size_t ix = arr_access::node(xv)->index;
  const std::size_t ib = arr_access::node(bv)->index;
  const std::optional<std::size_t> iy =
      y.carries(inner->tag()) ? std::optional<std::size_t>(arr_access::node(y)->index) : std::nullopt;
  const std::size_t nb = bp.rows();
  const FpConfig<T> c = cfg;

  LinearMap<T> vjp = [inner, ix, ib, iy, nb, c](const Value<T>& seed) -> Value<T> {
    const Arr<T>& xbar = std::get<Arr<T>>(seed);
    if (!iy) return Value<T>(Arr<T>::filled(nb, 1, T(0)));
    Arr<T> w = xbar;
    T r = std::numeric_limits<T>::infinity();
    bool done = false;
    for (std::size_t k = 0; k < c.max_iter && !done; ++k) {
      inner->sweep(*iy, Value<T>(w));
      Arr<T> wn = add(xbar, inner->array_adjoint(ix));
      r = max_abs_diff(wn.values(), w.values());
      w = std::move(wn);
      done = converged(r, c.tol);
    }
    if (!done) throw convergence_error("adjoint", static_cast<double>(r), c.max_iter);
    inner->sweep(*iy, Value<T>(w));
    return Value<T>(inner->array_adjoint(ib));
  };
  const auto* bn = arr_access::node(b);
  return bn->tape->record_linear(xs, {{bn->index, std::move(vjp)}});
}

}  // namespace detail

/// Solves x = g(x, b) starting from x0 (treated as a constant) and returns
/// x* differentiably in b. g is called as g(DV x, DV b) and must return a
/// vector of the same length as x. Throws convergence_error naming the
/// phase that ran out of iterations.
template <std::floating_point T, class G>
DV<T> fixed_point(G&& g, const DV<T>& x0, const DV<T>& b, const FpConfig<T>& cfg = {}) {
  if (!(cfg.tol > T(0)) || cfg.max_iter < 1) throw std::invalid_argument("fixed_point: need tol > 0 and max_iter >= 1");
  const auto v = x0.values();
  const detail::Arr<T> start = detail::Arr<T>::column(std::vector<T>(v.begin(), v.end()));
  return DV<T>(detail::fixed_point_at(g, start, b.arr(), cfg));
}

/// Scalar form: x = g(x, b) with x, b scalars.
template <std::floating_point T, class G>
D<T> fixed_point(G&& g, T x0, const D<T>& b, const FpConfig<T>& cfg = {}) {
  auto gv = [&g](const DV<T>& x, const DV<T>& bb) {
    const std::vector<D<T>> y{D<T>(g(x[0], bb[0]))};
    return DV<T>(y);
  };
  const std::vector<D<T>> bs{b};
  return fixed_point(gv, DV<T>{x0}, DV<T>(bs), cfg)[0];
}

}  // namespace nestad
