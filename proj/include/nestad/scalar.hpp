#pragma once

// The differentiable scalar D and its elementary functions.
// Include <nestad/core.hpp> rather than this header directly.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <memory>
#include <ostream>
#include <type_traits>
#include <utility>

#include "errors.hpp"
#include "tag.hpp"

namespace nestad {

template <std::floating_point T>
class D;
template <std::floating_point T>
class Tape;

namespace detail {

template <std::floating_point T>
struct ScalarNode;
struct access;

}  // namespace detail

/// A differentiable real number.
///
/// A D is one of three things:
///  - a constant holding a plain real,
///  - a forward layer (primal, tangent) owned by some tag,
///  - a reverse layer (primal, position on a tape) owned by some tag.
/// The primal of a layer is itself a D, so derivative layers nest; the
/// outermost layer always carries the largest tag. Values are immutable and
/// cheap to copy.
template <std::floating_point T>
class D {
 public:
  using value_type = T;

  D() noexcept = default;
  D(T v) noexcept : value_(v) {}  // NOLINT(google-explicit-constructor)

  Mode mode() const noexcept;
  bool is_const() const noexcept { return node_ == nullptr; }
  /// Tag of the outermost layer. Constants have no tag; calling this on one
  /// is a logic error.
  Tag tag() const;
  bool carries(Tag t) const noexcept;

  /// The plain real at the bottom of every layer.
  T value() const noexcept { return value_; }
  explicit operator T() const noexcept { return value_; }

  /// Strips exactly one layer; a constant is its own primal.
  const D& primal() const noexcept;

  D& operator+=(const D& o) { return *this = *this + o; }
  D& operator-=(const D& o) { return *this = *this - o; }
  D& operator*=(const D& o) { return *this = *this * o; }
  D& operator/=(const D& o) { return *this = *this / o; }

 private:
  friend struct detail::access;

  T value_{};
  std::shared_ptr<const detail::ScalarNode<T>> node_;
};

using D64 = D<double>;
using D32 = D<float>;

namespace detail {

template <std::floating_point T>
struct ScalarNode {
  Mode mode = Mode::constant;
  Tag tag;
  D<T> primal;
  D<T> tangent;                  // forward layers only
  std::shared_ptr<Tape<T>> tape;  // reverse layers only
  std::size_t index = 0;
};

struct access {
  template <std::floating_point T>
  static const ScalarNode<T>* node(const D<T>& x) noexcept {
    return x.node_.get();
  }

  template <std::floating_point T>
  static D<T> dual(D<T> primal, D<T> tangent, Tag t) {
    D<T> r;
    r.value_ = primal.value_;
    r.node_ = std::make_shared<const ScalarNode<T>>(
        ScalarNode<T>{Mode::forward, t, std::move(primal), std::move(tangent), nullptr, 0});
    return r;
  }

  template <std::floating_point T>
  static D<T> rev(D<T> primal, std::shared_ptr<Tape<T>> tape, std::size_t index, Tag t) {
    D<T> r;
    r.value_ = primal.value_;
    r.node_ = std::make_shared<const ScalarNode<T>>(
        ScalarNode<T>{Mode::reverse, t, std::move(primal), D<T>{}, std::move(tape), index});
    return r;
  }
};

}  // namespace detail

template <std::floating_point T>
Mode D<T>::mode() const noexcept {
  return node_ ? node_->mode : Mode::constant;
}

template <std::floating_point T>
Tag D<T>::tag() const {
  if (!node_) throw tag_error("constant D has no tag");
  return node_->tag;
}

template <std::floating_point T>
bool D<T>::carries(Tag t) const noexcept {
  return node_ && node_->tag == t;
}

template <std::floating_point T>
const D<T>& D<T>::primal() const noexcept {
  return node_ ? node_->primal : *this;
}

/// Builds a forward layer. Both parts must be built from strictly smaller tags.
template <std::floating_point T>
D<T> make_dual(D<T> primal, D<T> tangent, Tag t) {
  if ((!primal.is_const() && primal.tag() >= t) || (!tangent.is_const() && tangent.tag() >= t))
    throw tag_error("make_dual: components must carry tags below the new layer's tag");
  return detail::access::dual(std::move(primal), std::move(tangent), t);
}

template <std::floating_point T>
D<T> primal(const D<T>& x) noexcept {
  return x.primal();
}

/// The perturbation of `x` along tag `t`; zero unless the outermost layer
/// of `x` is a forward layer owned by `t`.
template <std::floating_point T>
D<T> tangent(const D<T>& x, Tag t) {
  const auto* n = detail::access::node(x);
  if (n == nullptr || n->tag != t || n->mode != Mode::forward) return D<T>(0);
  return n->tangent;
}

namespace detail {

template <std::floating_point T>
Tag top_tag(const D<T>& a, const D<T>& b) {
  if (a.is_const()) return b.tag();
  if (b.is_const()) return a.tag();
  return std::max(a.tag(), b.tag());
}

/// `x` seen from tag `t`: its primal if it carries `t`, otherwise `x` is a
/// constant with respect to `t`.
template <std::floating_point T>
const D<T>& peel(const D<T>& x, Tag t) noexcept {
  return x.carries(t) ? x.primal() : x;
}

/// tangent * partial with the unit and all-constant cases short-circuited.
template <std::floating_point T>
D<T> scale_by(const D<T>& v, const D<T>& partial) {
  if (partial.is_const()) {
    if (partial.value() == T(1)) return v;
    if (v.is_const()) return D<T>(v.value() * partial.value());
  }
  return v * partial;
}

template <std::floating_point T, class Partial>
D<T> lift1(const D<T>& x, D<T> y, Partial&& partial) {
  const ScalarNode<T>& n = *access::node(x);
  if (n.mode == Mode::forward) return access::dual(std::move(y), scale_by(n.tangent, partial()), n.tag);
  return n.tape->record_unary(std::move(y), n.index, partial());
}

template <std::floating_point T, class PartialA, class PartialB>
D<T> lift2(const D<T>& a, const D<T>& b, Tag t, D<T> y, PartialA&& pa, PartialB&& pb) {
  const ScalarNode<T>* na = a.carries(t) ? access::node(a) : nullptr;
  const ScalarNode<T>* nb = b.carries(t) ? access::node(b) : nullptr;
  if (na == nullptr) return lift1(b, std::move(y), pb);
  if (nb == nullptr) return lift1(a, std::move(y), pa);
  if (na->mode != nb->mode) throw tag_error("forward and reverse layers share one tag");
  if (na->mode == Mode::forward)
    return access::dual(std::move(y), scale_by(na->tangent, pa()) + scale_by(nb->tangent, pb()), t);
  return na->tape->record_binary(std::move(y), na->index, pa(), nb->index, pb());
}

template <std::floating_point T>
T sign_of(T v) noexcept {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

}  // namespace detail

// Arithmetic. Each operation computes its primal on the peeled operands and
// passes lazily evaluated partials, so a partial is only built for operands
// that actually carry the active tag.

template <std::floating_point T>
D<T> operator+(const D<T>& a, const D<T>& b) {
  if (a.is_const() && b.is_const()) return D<T>(a.value() + b.value());
  const Tag t = detail::top_tag(a, b);
  const D<T>&ap = detail::peel(a, t), &bp = detail::peel(b, t);
  return detail::lift2(a, b, t, ap + bp, [] { return D<T>(1); }, [] { return D<T>(1); });
}

template <std::floating_point T>
D<T> operator-(const D<T>& a, const D<T>& b) {
  if (a.is_const() && b.is_const()) return D<T>(a.value() - b.value());
  const Tag t = detail::top_tag(a, b);
  const D<T>&ap = detail::peel(a, t), &bp = detail::peel(b, t);
  return detail::lift2(a, b, t, ap - bp, [] { return D<T>(1); }, [] { return D<T>(-1); });
}

template <std::floating_point T>
D<T> operator*(const D<T>& a, const D<T>& b) {
  if (a.is_const() && b.is_const()) return D<T>(a.value() * b.value());
  const Tag t = detail::top_tag(a, b);
  const D<T>&ap = detail::peel(a, t), &bp = detail::peel(b, t);
  return detail::lift2(a, b, t, ap * bp, [&] { return bp; }, [&] { return ap; });
}

template <std::floating_point T>
D<T> operator/(const D<T>& a, const D<T>& b) {
  if (a.is_const() && b.is_const()) return D<T>(a.value() / b.value());
  const Tag t = detail::top_tag(a, b);
  const D<T>&ap = detail::peel(a, t), &bp = detail::peel(b, t);
  D<T> y = ap / bp;
  return detail::lift2(
      a, b, t, y, [&] { return D<T>(1) / bp; }, [&] { return -y / bp; });
}

template <std::floating_point T>
D<T> operator-(const D<T>& x) {
  if (x.is_const()) return D<T>(-x.value());
  return detail::lift1(x, -x.primal(), [] { return D<T>(-1); });
}

template <std::floating_point T>
D<T> operator+(const D<T>& x) {
  return x;
}

/// a^b. The partial in b (y log a) is only formed when b is being
/// differentiated, so constant exponents on negative bases stay finite.
template <std::floating_point T>
D<T> pow(const D<T>& a, const D<T>& b) {
  if (a.is_const() && b.is_const()) return D<T>(std::pow(a.value(), b.value()));
  const Tag t = detail::top_tag(a, b);
  const D<T>&ap = detail::peel(a, t), &bp = detail::peel(b, t);
  D<T> y = pow(ap, bp);
  return detail::lift2(
      a, b, t, y, [&] { return bp * pow(ap, bp - D<T>(1)); }, [&] { return y * log(ap); });
}

template <std::floating_point T>
D<T> atan2(const D<T>& a, const D<T>& b) {
  if (a.is_const() && b.is_const()) return D<T>(std::atan2(a.value(), b.value()));
  const Tag t = detail::top_tag(a, b);
  const D<T>&ap = detail::peel(a, t), &bp = detail::peel(b, t);
  const D<T> r2 = ap * ap + bp * bp;
  return detail::lift2(
      a, b, t, atan2(ap, bp), [&] { return bp / r2; }, [&] { return -ap / r2; });
}

/// Ties go to the first argument, derivative included.
template <std::floating_point T>
D<T> min2(const D<T>& a, const D<T>& b) {
  return b.value() < a.value() ? b : a;
}

/// Ties go to the first argument, derivative included.
template <std::floating_point T>
D<T> max2(const D<T>& a, const D<T>& b) {
  return b.value() > a.value() ? b : a;
}

#define NESTAD_MIXED_BINARY(NAME)                                         \
  template <std::floating_point T>                                        \
  D<T> NAME(const D<T>& a, std::type_identity_t<T> b) {                   \
    return NAME(a, D<T>(b));                                              \
  }                                                                       \
  template <std::floating_point T>                                        \
  D<T> NAME(std::type_identity_t<T> a, const D<T>& b) {                   \
    return NAME(D<T>(a), b);                                              \
  }

NESTAD_MIXED_BINARY(operator+)
NESTAD_MIXED_BINARY(operator-)
NESTAD_MIXED_BINARY(operator*)
NESTAD_MIXED_BINARY(operator/)
NESTAD_MIXED_BINARY(pow)
NESTAD_MIXED_BINARY(atan2)
NESTAD_MIXED_BINARY(min2)
NESTAD_MIXED_BINARY(max2)

#undef NESTAD_MIXED_BINARY

// Unary elementary functions: primal on the peeled operand, partial in
// terms of the peeled operand `p` or the result `y`.

#define NESTAD_UNARY(NAME, PARTIAL)                                       \
  template <std::floating_point T>                                        \
  D<T> NAME(const D<T>& x) {                                              \
    if (x.is_const()) return D<T>(std::NAME(x.value()));                  \
    const D<T>& p = x.primal();                                           \
    D<T> y = NAME(p);                                                     \
    return detail::lift1(x, y, [&] { return PARTIAL; });                  \
  }

NESTAD_UNARY(exp, y)
NESTAD_UNARY(log, D<T>(1) / p)
NESTAD_UNARY(sqrt, D<T>(0.5) / y)
NESTAD_UNARY(sin, cos(p))
NESTAD_UNARY(cos, -sin(p))
NESTAD_UNARY(tan, D<T>(1) + y * y)
NESTAD_UNARY(asin, D<T>(1) / sqrt(D<T>(1) - p * p))
NESTAD_UNARY(acos, D<T>(-1) / sqrt(D<T>(1) - p * p))
NESTAD_UNARY(atan, D<T>(1) / (D<T>(1) + p * p))
NESTAD_UNARY(sinh, cosh(p))
NESTAD_UNARY(cosh, sinh(p))
NESTAD_UNARY(tanh, D<T>(1) - y * y)
// d|x|/dx is taken as 0 at x = 0.
NESTAD_UNARY(abs, D<T>(detail::sign_of(p.value())))

#undef NESTAD_UNARY

// Piecewise-constant functions have zero derivative everywhere they are
// differentiable, and at the jumps we pick zero as well.

template <std::floating_point T>
D<T> sign(const D<T>& x) {
  return D<T>(detail::sign_of(x.value()));
}

template <std::floating_point T>
D<T> floor(const D<T>& x) {
  return D<T>(std::floor(x.value()));
}

template <std::floating_point T>
D<T> ceil(const D<T>& x) {
  return D<T>(std::ceil(x.value()));
}

// Comparisons look only at the innermost real value.

template <std::floating_point T>
bool operator==(const D<T>& a, const D<T>& b) noexcept {
  return a.value() == b.value();
}
template <std::floating_point T>
auto operator<=>(const D<T>& a, const D<T>& b) noexcept {
  return a.value() <=> b.value();
}
template <std::floating_point T>
bool operator==(const D<T>& a, std::type_identity_t<T> b) noexcept {
  return a.value() == b;
}
template <std::floating_point T>
auto operator<=>(const D<T>& a, std::type_identity_t<T> b) noexcept {
  return a.value() <=> b;
}

template <std::floating_point T>
std::ostream& operator<<(std::ostream& os, const D<T>& x) {
  os << "D " << x.value();
  if (!x.is_const()) os << (x.mode() == Mode::forward ? " [fwd " : " [rev ") << x.tag() << "]";
  return os;
}

}  // namespace nestad
