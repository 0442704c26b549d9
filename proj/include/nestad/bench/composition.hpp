#pragma once

// Seeded random compositions of elementary operations, R^n -> R^m.
//
// Output j is  tree_j(x) + w_j * s(x)  where tree_j is a random expression
// of bounded depth over the inputs and s = sum_i sin(a_i x_i + c_i) / n
// couples every input into every output at O(n) cost. All operations are
// smooth and bounded-growth on [-1, 1]^n so finite differences stay
// accurate. The same object evaluates on plain reals, on D, and on DV.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "../linalg.hpp"

namespace nestad::bench {

enum class Op : std::uint8_t {
  var,
  constant,
  // unary
  sin,
  cos,
  tanh,
  atan,
  exp_tanh,   // exp(tanh a)
  log1p_sq,   // log(1 + a^2)
  sqrt1p_sq,  // sqrt(1 + a^2)
  neg,
  // binary
  add,
  sub,
  half_mul,   // a * b / 2
  div_1p_sq,  // a / (1 + b^2)
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::var: return "x";
    case Op::constant: return "c";
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::tanh: return "tanh";
    case Op::atan: return "atan";
    case Op::exp_tanh: return "exp_tanh";
    case Op::log1p_sq: return "log1p_sq";
    case Op::sqrt1p_sq: return "sqrt1p_sq";
    case Op::neg: return "neg";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::half_mul: return "half_mul";
    case Op::div_1p_sq: return "div_1p_sq";
  }
  return "?";
}

struct Node {
  Op op;
  std::size_t a = 0;  // child, or input index for var
  std::size_t b = 0;
  double c = 0;
};

class Composition {
 public:
  /// Deterministic in (seed, n, m, max_depth).
  static Composition generate(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t max_depth = 6) {
    if (n == 0 || m == 0) throw shape_error("composition needs n >= 1 and m >= 1");
    Composition g;
    g.n_ = n;
    g.m_ = m;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> depth(1, max_depth);
    for (std::size_t j = 0; j < m; ++j) g.roots_.push_back(g.grow(rng, depth(rng)));
    for (std::size_t i = 0; i < n; ++i) {
      g.freq_.push_back(0.5 + 0.5 * (unit(rng) + 1.0));
      g.phase_.push_back(unit(rng));
    }
    for (std::size_t j = 0; j < m; ++j) g.weight_.push_back(unit(rng));
    for (std::size_t i = 0; i < n; ++i) g.point_.push_back(0.9 * unit(rng));
    return g;
  }

  std::size_t inputs() const noexcept { return n_; }
  std::size_t outputs() const noexcept { return m_; }
  std::size_t nodes() const noexcept { return nodes_.size(); }
  const std::vector<Node>& tape() const noexcept { return nodes_; }

  /// A deterministic evaluation point in [-0.9, 0.9]^n.
  const std::vector<double>& point() const noexcept { return point_; }

  template <std::floating_point T>
  DV<T> point_as() const {
    return DV<T>(std::vector<T>(point_.begin(), point_.end()));
  }

  /// All m outputs, on plain reals or D scalars.
  template <class S>
  std::vector<S> eval(const std::vector<S>& x) const {
    const S s = coupling(x);
    std::vector<S> y;
    y.reserve(m_);
    std::vector<S> memo(nodes_.size());
    std::vector<bool> done(nodes_.size(), false);
    for (std::size_t j = 0; j < m_; ++j) y.push_back(node(roots_[j], x, memo, done) + lit<S>(weight_[j]) * s);
    return y;
  }

  template <std::floating_point T>
  DV<T> operator()(const DV<T>& x) const {
    return DV<T>(eval(unpack(x)));
  }

  template <std::floating_point T>
  std::vector<T> operator()(const std::vector<T>& x) const {
    return eval(x);
  }

  /// First output only, for scalar-valued operators.
  template <std::floating_point T>
  D<T> scalar(const DV<T>& x) const {
    return eval(unpack(x)).front();
  }

  template <std::floating_point T>
  T scalar(const std::vector<T>& x) const {
    return eval(x).front();
  }

  /// First output along the first input, other inputs fixed at point().
  template <class S>
  S univariate(const S& t) const {
    std::vector<S> x;
    for (std::size_t i = 0; i < n_; ++i) x.push_back(i == 0 ? t : lit<S>(point_[i]));
    return eval(x).front();
  }

 private:
  template <class S>
  static S lit(double c) {
    if constexpr (std::floating_point<S>)
      return static_cast<S>(c);
    else
      return S(static_cast<typename S::value_type>(c));
  }

  template <std::floating_point T>
  static std::vector<D<T>> unpack(const DV<T>& x) {
    std::vector<D<T>> xs;
    xs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xs.push_back(x[i]);
    return xs;
  }

  std::size_t push(Node nd) {
    nodes_.push_back(nd);
    return nodes_.size() - 1;
  }

  std::size_t grow(std::mt19937_64& rng, std::size_t depth) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> var(0, n_ - 1);
    if (depth == 0) {
      if (std::uniform_int_distribution<int>(0, 4)(rng) == 0) return push({Op::constant, 0, 0, unit(rng)});
      return push({Op::var, var(rng), 0, 0});
    }
    const int k = std::uniform_int_distribution<int>(0, 11)(rng);
    if (k < 8) {
      static constexpr Op unary[] = {Op::sin,      Op::cos,       Op::tanh, Op::atan,
                                     Op::exp_tanh, Op::log1p_sq, Op::sqrt1p_sq, Op::neg};
      const std::size_t a = grow(rng, depth - 1);
      return push({unary[k], a, 0, 0});
    }
    static constexpr Op binary[] = {Op::add, Op::sub, Op::half_mul, Op::div_1p_sq};
    const std::size_t a = grow(rng, depth - 1);
    const std::size_t b = grow(rng, std::uniform_int_distribution<std::size_t>(0, depth - 1)(rng));
    return push({binary[k - 8], a, b, 0});
  }

  template <class S>
  S coupling(const std::vector<S>& x) const {
    using std::sin;
    S s = lit<S>(0);
    for (std::size_t i = 0; i < n_; ++i) s = s + sin(lit<S>(freq_[i]) * x[i] + lit<S>(phase_[i]));
    return s / lit<S>(static_cast<double>(n_ == 0 ? 1 : n_));
  }

  template <class S>
  S node(std::size_t i, const std::vector<S>& x, std::vector<S>& memo, std::vector<bool>& done) const {
    if (done[i]) return memo[i];
    using std::atan, std::cos, std::exp, std::log, std::sin, std::sqrt, std::tanh;
    const Node& nd = nodes_[i];
    const auto one = lit<S>(1);
    S r = lit<S>(0);
    switch (nd.op) {
      case Op::var: r = x[nd.a]; break;
      case Op::constant: r = lit<S>(nd.c); break;
      case Op::sin: r = sin(node(nd.a, x, memo, done)); break;
      case Op::cos: r = cos(node(nd.a, x, memo, done)); break;
      case Op::tanh: r = tanh(node(nd.a, x, memo, done)); break;
      case Op::atan: r = atan(node(nd.a, x, memo, done)); break;
      case Op::exp_tanh: r = exp(tanh(node(nd.a, x, memo, done))); break;
      case Op::log1p_sq: {
        const S a = node(nd.a, x, memo, done);
        r = log(one + a * a);
        break;
      }
      case Op::sqrt1p_sq: {
        const S a = node(nd.a, x, memo, done);
        r = sqrt(one + a * a);
        break;
      }
      case Op::neg: r = -node(nd.a, x, memo, done); break;
      case Op::add: r = node(nd.a, x, memo, done) + node(nd.b, x, memo, done); break;
      case Op::sub: r = node(nd.a, x, memo, done) - node(nd.b, x, memo, done); break;
      case Op::half_mul: r = node(nd.a, x, memo, done) * node(nd.b, x, memo, done) / lit<S>(2); break;
      case Op::div_1p_sq: {
        const S b = node(nd.b, x, memo, done);
        r = node(nd.a, x, memo, done) / (one + b * b);
        break;
      }
    }
    memo[i] = r;
    done[i] = true;
    return r;
  }

  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> roots_;
  std::vector<double> freq_;
  std::vector<double> phase_;
  std::vector<double> weight_;
  std::vector<double> point_;
};

}  // namespace nestad::bench
