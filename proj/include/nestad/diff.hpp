#pragma once

// The higher-order differentiation operators.
//
// Every operator takes the function to differentiate as its first argument
// and the evaluation point next. Called with the function alone it returns
// the derivative as a new function, so operators compose: hessian is
// literally jacobian(grad(f)).
//
// Operators ending in `p` additionally return the primal value(s), one `p`
// per prime in the usual notation: diffp is diff', diff2pp is diff2''.
//
// Modes:
//   diff, diff2, diffn, gradv, jacobianv, curl, div    forward
//   grad, jacobianTv, jacobianTvpp                     reverse
//   hessian, gradhessian, laplacian                    forward on reverse
//   hessianv, gradhessianv                             reverse on forward
//   jacobian, jacobianT                                forward if n <= m, else reverse

#include <concepts>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "core.hpp"

namespace nestad {

namespace detail {

template <std::floating_point T, class F>
D<T> eval_scalar(F& f, const D<T>& x) {
  return D<T>(f(x));
}

template <std::floating_point T, class F>
D<T> eval_scalar(F& f, const DV<T>& x) {
  using R = std::decay_t<decltype(f(x))>;
  static_assert(std::is_convertible_v<R, D<T>>, "this operator requires a scalar-valued function");
  return D<T>(f(x));
}

template <std::floating_point T, class F>
DV<T> eval_vector(F& f, const DV<T>& x) {
  using R = std::decay_t<decltype(f(x))>;
  static_assert(std::is_convertible_v<R, DV<T>>, "this operator requires a vector-valued function");
  return DV<T>(f(x));
}

template <std::floating_point T>
DV<T> peel(const DV<T>& v, Tag t) {
  return DV<T>(peel(v.arr(), t));
}

template <std::floating_point T>
std::size_t tape_index(const DV<T>& v) {
  return arr_access::node(v.arr())->index;
}

inline void require_same_length(const char* op, std::size_t n, std::size_t k) {
  require(n == k, std::string(op) + ": direction of length " + std::to_string(k) + " for input of length " +
                      std::to_string(n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// R -> R

/// (f(x), f'(x)) by one forward pass.
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> diffp(F&& f, const D<T>& x) {
  const Tag t = fresh_tag();
  const D<T> y = detail::eval_scalar(f, make_dual(x, D<T>(1), t));
  return {detail::peel(y, t), tangent(y, t)};
}

template <std::floating_point T, class F>
D<T> diff(F&& f, const D<T>& x) {
  return diffp(f, x).second;
}

namespace detail {

/// Evaluates f on x seeded with n nested unit perturbations, innermost tag
/// first. Returns the result and the tags used.
template <std::floating_point T, class F>
std::pair<D<T>, std::vector<Tag>> nested_forward(std::size_t n, F& f, const D<T>& x) {
  std::vector<Tag> tags;
  D<T> seed = x;
  for (std::size_t k = 0; k < n; ++k) {
    tags.push_back(fresh_tag());
    seed = make_dual(seed, D<T>(1), tags.back());
  }
  return {eval_scalar(f, seed), std::move(tags)};
}

/// The k-th derivative encoded in a nested_forward result: take tangents
/// along the k innermost tags and primals along the rest.
template <std::floating_point T>
D<T> nth_coefficient(D<T> y, const std::vector<Tag>& tags, std::size_t k) {
  for (std::size_t i = tags.size(); i-- > 0;) {
    const bool take_tangent = i < k;
    y = take_tangent ? tangent(y, tags[i]) : D<T>(peel(y, tags[i]));
  }
  return y;
}

}  // namespace detail

/// (f(x), f^(n)(x)) through n nested forward invocations.
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> diffnp(std::size_t n, F&& f, const D<T>& x) {
  auto [y, tags] = detail::nested_forward(n, f, x);
  return {detail::nth_coefficient(y, tags, 0), detail::nth_coefficient(y, tags, n)};
}

template <std::floating_point T, class F>
D<T> diffn(std::size_t n, F&& f, const D<T>& x) {
  return diffnp(n, f, x).second;
}

/// (f(x), f''(x)).
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> diff2p(F&& f, const D<T>& x) {
  return diffnp(2, f, x);
}

template <std::floating_point T, class F>
D<T> diff2(F&& f, const D<T>& x) {
  return diffnp(2, f, x).second;
}

/// (f(x), f'(x), f''(x)) from a single nested evaluation.
template <std::floating_point T, class F>
std::tuple<D<T>, D<T>, D<T>> diff2pp(F&& f, const D<T>& x) {
  auto [y, tags] = detail::nested_forward(2, f, x);
  return {detail::nth_coefficient(y, tags, 0), detail::nth_coefficient(y, tags, 1),
          detail::nth_coefficient(y, tags, 2)};
}

// ---------------------------------------------------------------------------
// R^n -> R

/// (f(x), grad f(x)) by one reverse sweep.
template <std::floating_point T, class F>
std::pair<D<T>, DV<T>> gradp(F&& f, const DV<T>& x) {
  const Tag t = fresh_tag();
  auto tape = Tape<T>::create(t);
  const DV<T> xr(tape->variable(x.arr()));
  const D<T> y = detail::eval_scalar(f, xr);
  if (!y.carries(t)) return {y, DV<T>::zeros(x.size())};
  reverse_sweep(y, D<T>(1), t);
  return {D<T>(detail::peel(y, t)), DV<T>(tape->array_adjoint(detail::tape_index(xr)))};
}

template <std::floating_point T, class F>
DV<T> grad(F&& f, const DV<T>& x) {
  return gradp(f, x).second;
}

/// (f(x), grad f(x) . v) by one forward pass.
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> gradvp(F&& f, const DV<T>& x, const DV<T>& v) {
  detail::require_same_length("gradv", x.size(), v.size());
  const Tag t = fresh_tag();
  const D<T> y = detail::eval_scalar(f, make_dual(x, v, t));
  return {D<T>(detail::peel(y, t)), tangent(y, t)};
}

template <std::floating_point T, class F>
D<T> gradv(F&& f, const DV<T>& x, const DV<T>& v) {
  return gradvp(f, x, v).second;
}

/// (f(x), grad f(x), H f(x)): n forward passes over a reverse gradient.
template <std::floating_point T, class F>
std::tuple<D<T>, DV<T>, DM<T>> gradhessianp(F&& f, const DV<T>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {detail::eval_scalar(f, x), DV<T>{}, DM<T>::zeros(0, 0)};
  const Tag t = fresh_tag();
  std::optional<D<T>> value;
  std::optional<DV<T>> g0;
  std::vector<DV<T>> cols;
  cols.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto [fx, g] = gradp(f, make_dual(x, DV<T>::basis(n, j), t));
    if (j == 0) {
      value = D<T>(detail::peel(fx, t));
      g0 = detail::peel(g, t);
    }
    cols.push_back(tangent(g, t));
  }
  return {*value, *g0, DM<T>::from_cols(cols, n)};
}

template <std::floating_point T, class F>
std::pair<DV<T>, DM<T>> gradhessian(F&& f, const DV<T>& x) {
  auto [v, g, h] = gradhessianp(f, x);
  return {g, h};
}

template <std::floating_point T, class F>
std::pair<D<T>, DM<T>> hessianp(F&& f, const DV<T>& x) {
  auto [v, g, h] = gradhessianp(f, x);
  return {v, h};
}

/// (f(x), grad f(x) . v, H v): one reverse sweep over the forward
/// directional derivative.
template <std::floating_point T, class F>
std::tuple<D<T>, D<T>, DV<T>> gradhessianvp(F&& f, const DV<T>& x, const DV<T>& v) {
  detail::require_same_length("hessianv", x.size(), v.size());
  const Tag t = fresh_tag();
  auto tape = Tape<T>::create(t);
  const DV<T> xr(tape->variable(x.arr()));
  const auto [fx, gv] = gradvp(f, xr, v);
  const D<T> value(detail::peel(fx, t));
  const D<T> dir(detail::peel(gv, t));
  if (!gv.carries(t)) return {value, dir, DV<T>::zeros(x.size())};
  reverse_sweep(gv, D<T>(1), t);
  return {value, dir, DV<T>(tape->array_adjoint(detail::tape_index(xr)))};
}

template <std::floating_point T, class F>
std::pair<D<T>, DV<T>> gradhessianv(F&& f, const DV<T>& x, const DV<T>& v) {
  auto [fx, gv, hv] = gradhessianvp(f, x, v);
  return {gv, hv};
}

template <std::floating_point T, class F>
std::pair<D<T>, DV<T>> hessianvp(F&& f, const DV<T>& x, const DV<T>& v) {
  auto [fx, gv, hv] = gradhessianvp(f, x, v);
  return {fx, hv};
}

template <std::floating_point T, class F>
DV<T> hessianv(F&& f, const DV<T>& x, const DV<T>& v) {
  return std::get<2>(gradhessianvp(f, x, v));
}

/// (f(x), tr H) as the sum of n Hessian-vector products along the axes.
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> laplacianp(F&& f, const DV<T>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {detail::eval_scalar(f, x), D<T>(0)};
  std::optional<D<T>> value;
  D<T> tr(0);
  for (std::size_t i = 0; i < n; ++i) {
    auto [fx, hv] = hessianvp(f, x, DV<T>::basis(n, i));
    if (!value) value = fx;
    tr = tr + hv[i];
  }
  return {*value, tr};
}

template <std::floating_point T, class F>
D<T> laplacian(F&& f, const DV<T>& x) {
  return laplacianp(f, x).second;
}

// ---------------------------------------------------------------------------
// R^n -> R^m

/// (f(x), J v) by one forward pass.
template <std::floating_point T, class F>
std::pair<DV<T>, DV<T>> jacobianvp(F&& f, const DV<T>& x, const DV<T>& v) {
  detail::require_same_length("jacobianv", x.size(), v.size());
  const Tag t = fresh_tag();
  const DV<T> y = detail::eval_vector(f, make_dual(x, v, t));
  return {detail::peel(y, t), tangent(y, t)};
}

template <std::floating_point T, class F>
DV<T> jacobianv(F&& f, const DV<T>& x, const DV<T>& v) {
  return jacobianvp(f, x, v).second;
}

/// Maps an output covector w to J^T w over one recorded evaluation. Calls
/// may be repeated with different covectors; f is not re-evaluated.
template <std::floating_point T>
class Pullback {
 public:
  Pullback(std::shared_ptr<Tape<T>> tape, std::optional<std::size_t> output, std::size_t input, std::size_t m,
           std::size_t n)
      : tape_(std::move(tape)), output_(output), input_(input), m_(m), n_(n) {}

  DV<T> operator()(const DV<T>& w) const {
    detail::require(w.size() == m_, "pullback: covector of length " + std::to_string(w.size()) +
                                        " for output of length " + std::to_string(m_));
    if (!output_) return DV<T>::zeros(n_);
    tape_->sweep(*output_, typename Tape<T>::Value(w.arr()));
    return DV<T>(tape_->array_adjoint(input_));
  }

  std::size_t input_size() const noexcept { return n_; }
  std::size_t output_size() const noexcept { return m_; }

 private:
  std::shared_ptr<Tape<T>> tape_;
  std::optional<std::size_t> output_;
  std::size_t input_;
  std::size_t m_;
  std::size_t n_;
};

/// (f(x), w -> J^T w): records f once.
template <std::floating_point T, class F>
std::pair<DV<T>, Pullback<T>> jacobianTvpp(F&& f, const DV<T>& x) {
  const Tag t = fresh_tag();
  auto tape = Tape<T>::create(t);
  const DV<T> xr(tape->variable(x.arr()));
  const DV<T> y = detail::eval_vector(f, xr);
  std::optional<std::size_t> out;
  if (y.carries(t)) {
    if (y.mode() != Mode::reverse) throw tag_error("jacobianTv: output carries a forward layer of the reverse tag");
    out = detail::tape_index(y);
  }
  return {detail::peel(y, t), Pullback<T>(tape, out, detail::tape_index(xr), y.size(), x.size())};
}

template <std::floating_point T, class F>
std::pair<DV<T>, DV<T>> jacobianTvp(F&& f, const DV<T>& x, const DV<T>& w) {
  auto [y, pullback] = jacobianTvpp(f, x);
  return {y, pullback(w)};
}

template <std::floating_point T, class F>
DV<T> jacobianTv(F&& f, const DV<T>& x, const DV<T>& w) {
  return jacobianTvp(f, x, w).second;
}

enum class JacobianMode { automatic, forward, reverse };

namespace detail {

template <std::floating_point T, class F>
std::pair<DV<T>, DM<T>> jacobian_reverse(F& f, const DV<T>& x) {
  auto [y, pullback] = jacobianTvpp(f, x);
  const std::size_t m = y.size();
  std::vector<DV<T>> rows;
  rows.reserve(m);
  for (std::size_t i = 0; i < m; ++i) rows.push_back(pullback(DV<T>::basis(m, i)));
  return {y, DM<T>::from_rows(rows, x.size())};
}

}  // namespace detail

/// (f(x), J) with J the m x n Jacobian. Automatic mode builds it from n
/// forward passes when n <= m and from m reverse sweeps otherwise.
template <std::floating_point T, class F>
std::pair<DV<T>, DM<T>> jacobianp(F&& f, const DV<T>& x, JacobianMode mode = JacobianMode::automatic) {
  const std::size_t n = x.size();
  if (mode == JacobianMode::reverse) return detail::jacobian_reverse(f, x);
  if (n == 0) {
    DV<T> y = detail::eval_vector(f, x);
    const std::size_t m = y.size();
    return {std::move(y), DM<T>::zeros(m, 0)};
  }
  auto [y, c0] = jacobianvp(f, x, DV<T>::basis(n, 0));
  const std::size_t m = y.size();
  if (mode == JacobianMode::automatic && n > m) return detail::jacobian_reverse(f, x);
  std::vector<DV<T>> cols;
  cols.reserve(n);
  cols.push_back(std::move(c0));
  for (std::size_t j = 1; j < n; ++j) {
    auto [yj, cj] = jacobianvp(f, x, DV<T>::basis(n, j));
    detail::require(yj.size() == m, "jacobian: output length changed from " + std::to_string(m) + " to " +
                                        std::to_string(yj.size()) + " between evaluations");
    cols.push_back(std::move(cj));
  }
  return {y, DM<T>::from_cols(cols, m)};
}

template <std::floating_point T, class F>
DM<T> jacobian(F&& f, const DV<T>& x, JacobianMode mode = JacobianMode::automatic) {
  return jacobianp(f, x, mode).second;
}

template <std::floating_point T, class F>
std::pair<DV<T>, DM<T>> jacobianTp(F&& f, const DV<T>& x, JacobianMode mode = JacobianMode::automatic) {
  auto [y, j] = jacobianp(f, x, mode);
  return {y, transpose(j)};
}

template <std::floating_point T, class F>
DM<T> jacobianT(F&& f, const DV<T>& x, JacobianMode mode = JacobianMode::automatic) {
  return transpose(jacobian(f, x, mode));
}

// Defined after grad/jacobian so the composition below can see both.
template <class F>
auto grad(F f);
template <class F>
auto jacobian(F f);

/// The Hessian as the Jacobian of the gradient (forward on reverse).
template <std::floating_point T, class F>
DM<T> hessian(F&& f, const DV<T>& x) {
  return jacobian(grad(f), x);
}

/// (f(x), curl f, div f) from one forward Jacobian; f : R^3 -> R^3.
template <std::floating_point T, class F>
std::tuple<DV<T>, DV<T>, D<T>> curldivp(F&& f, const DV<T>& x) {
  detail::require(x.size() == 3, "curl: defined for R^3 -> R^3 only, got input of length " + std::to_string(x.size()));
  auto [y, j] = jacobianp(f, x, JacobianMode::forward);
  detail::require(y.size() == 3, "curl: defined for R^3 -> R^3 only, got output of length " + std::to_string(y.size()));
  const std::vector<D<T>> c{j(2, 1) - j(1, 2), j(0, 2) - j(2, 0), j(1, 0) - j(0, 1)};
  return {y, DV<T>(c), trace(j)};
}

template <std::floating_point T, class F>
std::pair<DV<T>, D<T>> curldiv(F&& f, const DV<T>& x) {
  auto [y, c, d] = curldivp(f, x);
  return {c, d};
}

template <std::floating_point T, class F>
std::pair<DV<T>, DV<T>> curlp(F&& f, const DV<T>& x) {
  auto [y, c, d] = curldivp(f, x);
  return {y, c};
}

template <std::floating_point T, class F>
DV<T> curl(F&& f, const DV<T>& x) {
  return std::get<1>(curldivp(f, x));
}

/// (f(x), div f) from one forward Jacobian; f : R^n -> R^n.
template <std::floating_point T, class F>
std::pair<DV<T>, D<T>> divp(F&& f, const DV<T>& x) {
  auto [y, j] = jacobianp(f, x, JacobianMode::forward);
  detail::require(y.size() == x.size(), "div: requires n == m, got n = " + std::to_string(x.size()) +
                                            ", m = " + std::to_string(y.size()));
  return {y, trace(j)};
}

template <std::floating_point T, class F>
D<T> div(F&& f, const DV<T>& x) {
  return divp(f, x).second;
}

// ---------------------------------------------------------------------------
// Plain reals at the call site.

template <std::floating_point T, class F>
D<T> diff(F&& f, T x) {
  return diff(f, D<T>(x));
}
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> diffp(F&& f, T x) {
  return diffp(f, D<T>(x));
}
template <std::floating_point T, class F>
D<T> diff2(F&& f, T x) {
  return diff2(f, D<T>(x));
}
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> diff2p(F&& f, T x) {
  return diff2p(f, D<T>(x));
}
template <std::floating_point T, class F>
std::tuple<D<T>, D<T>, D<T>> diff2pp(F&& f, T x) {
  return diff2pp(f, D<T>(x));
}
template <std::floating_point T, class F>
D<T> diffn(std::size_t n, F&& f, T x) {
  return diffn(n, f, D<T>(x));
}
template <std::floating_point T, class F>
std::pair<D<T>, D<T>> diffnp(std::size_t n, F&& f, T x) {
  return diffnp(n, f, D<T>(x));
}

// ---------------------------------------------------------------------------
// Partial application: op(f) is the derivative function x -> op(f, x).

#define NESTAD_CURRY_1(NAME)                                                              \
  template <class F>                                                                      \
  auto NAME(F f) {                                                                        \
    return [f = std::move(f)](const auto& x) { return NAME(f, x); };                      \
  }
#define NESTAD_CURRY_2(NAME)                                                              \
  template <class F>                                                                      \
  auto NAME(F f) {                                                                        \
    return [f = std::move(f)](const auto& x, const auto& v) { return NAME(f, x, v); };    \
  }

NESTAD_CURRY_1(diff)
NESTAD_CURRY_1(diffp)
NESTAD_CURRY_1(diff2)
NESTAD_CURRY_1(diff2p)
NESTAD_CURRY_1(diff2pp)
NESTAD_CURRY_1(grad)
NESTAD_CURRY_1(gradp)
NESTAD_CURRY_1(hessian)
NESTAD_CURRY_1(hessianp)
NESTAD_CURRY_1(gradhessian)
NESTAD_CURRY_1(gradhessianp)
NESTAD_CURRY_1(laplacian)
NESTAD_CURRY_1(laplacianp)
NESTAD_CURRY_1(jacobian)
NESTAD_CURRY_1(jacobianp)
NESTAD_CURRY_1(jacobianT)
NESTAD_CURRY_1(jacobianTp)
NESTAD_CURRY_1(jacobianTvpp)
NESTAD_CURRY_1(curl)
NESTAD_CURRY_1(curlp)
NESTAD_CURRY_1(div)
NESTAD_CURRY_1(divp)
NESTAD_CURRY_1(curldiv)
NESTAD_CURRY_1(curldivp)
NESTAD_CURRY_2(gradv)
NESTAD_CURRY_2(gradvp)
NESTAD_CURRY_2(hessianv)
NESTAD_CURRY_2(hessianvp)
NESTAD_CURRY_2(gradhessianv)
NESTAD_CURRY_2(gradhessianvp)
NESTAD_CURRY_2(jacobianv)
NESTAD_CURRY_2(jacobianvp)
NESTAD_CURRY_2(jacobianTv)
NESTAD_CURRY_2(jacobianTvp)

#undef NESTAD_CURRY_1
#undef NESTAD_CURRY_2

/// diffn(n)(f) is the n-th derivative function of f.
template <class F>
auto diffn(std::size_t n, F f) {
  return [n, f = std::move(f)](const auto& x) { return diffn(n, f, x); };
}

}  // namespace nestad
