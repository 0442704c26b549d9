#pragma once

// Structure-of-arrays storage shared by DV and DM, and the array intrinsics
// with their forward and reverse rules.
// Include <nestad/core.hpp> rather than this header directly.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "backend.hpp"
#include "errors.hpp"
#include "scalar.hpp"
#include "tag.hpp"

namespace nestad::detail {

template <std::floating_point T>
struct ArrNode;

/// A dense row-major array with the same three-way layering as D.
///
/// Every layer keeps whole arrays: a forward layer holds a primal array and
/// a tangent array, a reverse layer a primal array and one tape position for
/// the entire array. Element access builds a D on demand; an Arr is never
/// an array of D. `values()` always exposes the innermost reals.
template <std::floating_point T>
class Arr {
 public:
  Arr() : data_(std::make_shared<const std::vector<T>>()) {}

  Arr(std::size_t rows, std::size_t cols, std::vector<T> data) : rows_(rows), cols_(cols) {
    if (data.size() != rows * cols)
      throw shape_error("array storage of length " + std::to_string(data.size()) + " does not match shape " +
                        shape_str(rows, cols));
    data_ = std::make_shared<const std::vector<T>>(std::move(data));
  }

  static Arr filled(std::size_t rows, std::size_t cols, T v) { return Arr(rows, cols, std::vector<T>(rows * cols, v)); }
  static Arr column(std::vector<T> v) {
    const std::size_t n = v.size();
    return Arr(n, 1, std::move(v));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return rows_ * cols_; }
  std::span<const T> values() const noexcept { return *data_; }

  Mode mode() const noexcept;
  bool is_const() const noexcept { return node_ == nullptr; }
  Tag tag() const;
  bool carries(Tag t) const noexcept;
  const Arr& primal() const noexcept;

 private:
  friend struct arr_access;

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::shared_ptr<const std::vector<T>> data_;
  std::shared_ptr<const ArrNode<T>> node_;
};

template <std::floating_point T>
struct ArrNode {
  Mode mode = Mode::constant;
  Tag tag;
  Arr<T> primal;
  Arr<T> tangent;
  std::shared_ptr<Tape<T>> tape;
  std::size_t index = 0;
};

struct arr_access {
  template <std::floating_point T>
  static const ArrNode<T>* node(const Arr<T>& x) noexcept {
    return x.node_.get();
  }

  template <std::floating_point T>
  static Arr<T> dual(Arr<T> primal, Arr<T> tangent, Tag t) {
    if (tangent.rows() != primal.rows() || tangent.cols() != primal.cols())
      throw shape_error("tangent " + shape_str(tangent.rows(), tangent.cols()) + " does not match primal " +
                        shape_str(primal.rows(), primal.cols()));
    Arr<T> r = primal;
    r.node_ = std::make_shared<const ArrNode<T>>(
        ArrNode<T>{Mode::forward, t, std::move(primal), std::move(tangent), nullptr, 0});
    return r;
  }

  template <std::floating_point T>
  static Arr<T> rev(Arr<T> primal, std::shared_ptr<Tape<T>> tape, std::size_t index, Tag t) {
    Arr<T> r = primal;
    r.node_ = std::make_shared<const ArrNode<T>>(
        ArrNode<T>{Mode::reverse, t, std::move(primal), Arr<T>{}, std::move(tape), index});
    return r;
  }
};

template <std::floating_point T>
Mode Arr<T>::mode() const noexcept {
  return node_ ? node_->mode : Mode::constant;
}

template <std::floating_point T>
Tag Arr<T>::tag() const {
  if (!node_) throw tag_error("constant array has no tag");
  return node_->tag;
}

template <std::floating_point T>
bool Arr<T>::carries(Tag t) const noexcept {
  return node_ && node_->tag == t;
}

template <std::floating_point T>
const Arr<T>& Arr<T>::primal() const noexcept {
  return node_ ? node_->primal : *this;
}

template <std::floating_point T>
const Arr<T>& peel(const Arr<T>& x, Tag t) noexcept {
  return x.carries(t) ? x.primal() : x;
}

/// Largest tag among the non-constant arguments; at least one must be non-constant.
template <class... Xs>
Tag top_tag_of(const Xs&... xs) {
  std::optional<Tag> best;
  auto visit = [&](const auto& x) {
    if (!x.is_const() && (!best || x.tag() > *best)) best = x.tag();
  };
  (visit(xs), ...);
  if (!best) throw tag_error("top_tag_of: all operands are constant");
  return *best;
}

template <std::floating_point T>
Arr<T> tangent_of(const Arr<T>& x, Tag t) {
  const auto* n = arr_access::node(x);
  if (n == nullptr || n->tag != t || n->mode != Mode::forward) return Arr<T>::filled(x.rows(), x.cols(), T(0));
  return n->tangent;
}

// A type-erased adjoint or tangent: scalars and arrays share one tape.
template <std::floating_point T>
using Value = std::variant<D<T>, Arr<T>>;

template <std::floating_point T>
using LinearMap = std::function<Value<T>(const Value<T>&)>;

/// One argument of an array intrinsic together with the local linear maps
/// relating its tangent/adjoint to the result's.
template <std::floating_point T>
struct Operand {
  Value<T> arg;
  LinearMap<T> jvp;
  LinearMap<T> vjp;
};

template <class Out, std::floating_point T, class In, class Jvp, class Vjp>
Operand<T> operand(const In& arg, Jvp jvp, Vjp vjp) {
  return Operand<T>{Value<T>(arg), [jvp = std::move(jvp)](const Value<T>& v) { return Value<T>(jvp(std::get<In>(v))); },
                    [vjp = std::move(vjp)](const Value<T>& v) { return Value<T>(vjp(std::get<Out>(v))); }};
}

template <std::floating_point T>
Value<T> add_values(const Value<T>& a, const Value<T>& b);

template <std::floating_point T>
struct LayerInfo {
  Mode mode;
  Tag tag;
  std::shared_ptr<Tape<T>> tape;
  std::size_t index;
  Value<T> tangent;
};

template <std::floating_point T>
std::optional<LayerInfo<T>> layer_at(const Value<T>& v, Tag t) {
  if (const auto* d = std::get_if<D<T>>(&v)) {
    if (!d->carries(t)) return std::nullopt;
    const auto* n = access::node(*d);
    return LayerInfo<T>{n->mode, n->tag, n->tape, n->index, Value<T>(n->tangent)};
  }
  const auto& a = std::get<Arr<T>>(v);
  if (!a.carries(t)) return std::nullopt;
  const auto* n = arr_access::node(a);
  return LayerInfo<T>{n->mode, n->tag, n->tape, n->index, Value<T>(n->tangent)};
}

template <std::floating_point T>
D<T> make_layer(D<T> y, D<T> tangent, Tag t) {
  return access::dual(std::move(y), std::move(tangent), t);
}

template <std::floating_point T>
Arr<T> make_layer(Arr<T> y, Arr<T> tangent, Tag t) {
  return arr_access::dual(std::move(y), std::move(tangent), t);
}

/// Wraps the primal result `y` of an intrinsic into a layer for tag `t`:
/// forward layers get the summed jvp contributions of all operands carrying
/// `t`; reverse layers record one tape node with one vjp edge per such operand.
template <std::floating_point T, class R>
R lift(Tag t, R y, std::initializer_list<Operand<T>> ops) {
  std::optional<Mode> mode;
  std::shared_ptr<Tape<T>> tape;
  std::optional<Value<T>> tangent;
  std::vector<std::pair<std::size_t, LinearMap<T>>> edges;
  for (const Operand<T>& op : ops) {
    auto layer = layer_at(op.arg, t);
    if (!layer) continue;
    if (mode && *mode != layer->mode) throw tag_error("forward and reverse layers share one tag");
    mode = layer->mode;
    if (layer->mode == Mode::forward) {
      Value<T> c = op.jvp(layer->tangent);
      tangent = tangent ? add_values(*tangent, c) : std::move(c);
    } else {
      tape = layer->tape;
      edges.emplace_back(layer->index, op.vjp);
    }
  }
  if (!mode) throw tag_error("lift: no operand carries the active tag");
  if (*mode == Mode::forward) return make_layer(std::move(y), std::get<R>(std::move(*tangent)), t);
  return tape->record_linear(std::move(y), std::move(edges));
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw shape_error(what);
}

template <std::floating_point T>
std::string shape_of(const Arr<T>& a) {
  return shape_str(a.rows(), a.cols());
}

template <std::floating_point T>
void require_same_shape(const char* op, const Arr<T>& a, const Arr<T>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

template <std::floating_point T>
Arr<T> transpose(const Arr<T>& a);
template <std::floating_point T>
Arr<T> scale(const D<T>& s, const Arr<T>& a);
template <std::floating_point T>
D<T> dot(const Arr<T>& a, const Arr<T>& b);
template <std::floating_point T>
Arr<T> embed_row(const Arr<T>& v, std::size_t i, std::size_t rows);

template <std::floating_point T>
Arr<T> add(const Arr<T>& a, const Arr<T>& b) {
  require_same_shape("add", a, b);
  if (a.is_const() && b.is_const()) {
    std::vector<T> out(a.size());
    backend<T>().add(a.values(), b.values(), out);
    return Arr<T>(a.rows(), a.cols(), std::move(out));
  }
  const Tag t = top_tag_of(a, b);
  auto id = [](const Arr<T>& v) { return v; };
  return lift<T>(t, add(peel(a, t), peel(b, t)), {operand<Arr<T>, T>(a, id, id), operand<Arr<T>, T>(b, id, id)});
}

template <std::floating_point T>
Arr<T> neg(const Arr<T>& a) {
  if (a.is_const()) {
    std::vector<T> out(a.size());
    backend<T>().scale(T(-1), a.values(), out);
    return Arr<T>(a.rows(), a.cols(), std::move(out));
  }
  const Tag t = a.tag();
  auto n = [](const Arr<T>& v) { return neg(v); };
  return lift<T>(t, neg(a.primal()), {operand<Arr<T>, T>(a, n, n)});
}

template <std::floating_point T>
Arr<T> sub(const Arr<T>& a, const Arr<T>& b) {
  require_same_shape("sub", a, b);
  if (a.is_const() && b.is_const()) {
    std::vector<T> out(a.values().begin(), a.values().end());
    backend<T>().axpy(T(-1), b.values(), out);
    return Arr<T>(a.rows(), a.cols(), std::move(out));
  }
  const Tag t = top_tag_of(a, b);
  auto id = [](const Arr<T>& v) { return v; };
  auto n = [](const Arr<T>& v) { return neg(v); };
  return lift<T>(t, sub(peel(a, t), peel(b, t)), {operand<Arr<T>, T>(a, id, id), operand<Arr<T>, T>(b, n, n)});
}

template <std::floating_point T>
Arr<T> scale(const D<T>& s, const Arr<T>& a) {
  if (s.is_const() && a.is_const()) {
    std::vector<T> out(a.size());
    backend<T>().scale(s.value(), a.values(), out);
    return Arr<T>(a.rows(), a.cols(), std::move(out));
  }
  const Tag t = top_tag_of(s, a);
  const D<T> sp = peel(s, t);
  const Arr<T> ap = peel(a, t);
  return lift<T>(t, scale(sp, ap),
                 {operand<Arr<T>, T>(
                      s, [ap](const D<T>& ds) { return scale(ds, ap); },
                      [ap](const Arr<T>& ybar) { return dot(ybar, ap); }),
                  operand<Arr<T>, T>(
                      a, [sp](const Arr<T>& da) { return scale(sp, da); },
                      [sp](const Arr<T>& ybar) { return scale(sp, ybar); })});
}

/// Elementwise product.
template <std::floating_point T>
Arr<T> hadamard(const Arr<T>& a, const Arr<T>& b) {
  require_same_shape("hadamard", a, b);
  if (a.is_const() && b.is_const()) {
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return Arr<T>(a.rows(), a.cols(), std::move(out));
  }
  const Tag t = top_tag_of(a, b);
  const Arr<T> ap = peel(a, t), bp = peel(b, t);
  return lift<T>(t, hadamard(ap, bp),
                 {operand<Arr<T>, T>(
                      a, [bp](const Arr<T>& da) { return hadamard(da, bp); },
                      [bp](const Arr<T>& ybar) { return hadamard(ybar, bp); }),
                  operand<Arr<T>, T>(
                      b, [ap](const Arr<T>& db) { return hadamard(ap, db); },
                      [ap](const Arr<T>& ybar) { return hadamard(ybar, ap); })});
}

/// C = A B with C' = A' B + A B' forward and A^ += C^ B^T, B^ += A^T C^ reverse.
template <std::floating_point T>
Arr<T> matmul(const Arr<T>& a, const Arr<T>& b) {
  require(a.cols() == b.rows(), "matmul: cannot multiply " + shape_of(a) + " by " + shape_of(b));
  if (a.is_const() && b.is_const()) {
    std::vector<T> out(a.rows() * b.cols());
    if (b.cols() == 1)
      backend<T>().gemv(a.rows(), a.cols(), a.values(), b.values(), out);
    else
      backend<T>().gemm(a.rows(), a.cols(), b.cols(), a.values(), b.values(), out);
    return Arr<T>(a.rows(), b.cols(), std::move(out));
  }
  const Tag t = top_tag_of(a, b);
  const Arr<T> ap = peel(a, t), bp = peel(b, t);
  return lift<T>(t, matmul(ap, bp),
                 {operand<Arr<T>, T>(
                      a, [bp](const Arr<T>& da) { return matmul(da, bp); },
                      [bp](const Arr<T>& ybar) { return matmul(ybar, transpose(bp)); }),
                  operand<Arr<T>, T>(
                      b, [ap](const Arr<T>& db) { return matmul(ap, db); },
                      [ap](const Arr<T>& ybar) { return matmul(transpose(ap), ybar); })});
}

template <std::floating_point T>
Arr<T> transpose(const Arr<T>& a) {
  if (a.is_const()) {
    std::vector<T> out(a.size());
    const auto v = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) out[j * a.rows() + i] = v[i * a.cols() + j];
    return Arr<T>(a.cols(), a.rows(), std::move(out));
  }
  auto tr = [](const Arr<T>& v) { return transpose(v); };
  return lift<T>(a.tag(), transpose(a.primal()), {operand<Arr<T>, T>(a, tr, tr)});
}

/// Frobenius inner product; the vector dot product for n x 1 operands.
template <std::floating_point T>
D<T> dot(const Arr<T>& a, const Arr<T>& b) {
  require(a.size() == b.size(), "dot: length mismatch " + shape_of(a) + " vs " + shape_of(b));
  if (a.is_const() && b.is_const()) return D<T>(backend<T>().dot(a.values(), b.values()));
  const Tag t = top_tag_of(a, b);
  const Arr<T> ap = peel(a, t), bp = peel(b, t);
  return lift<T>(t, dot(ap, bp),
                 {operand<D<T>, T>(
                      a, [bp](const Arr<T>& da) { return dot(da, bp); },
                      [bp](const D<T>& ybar) { return scale(ybar, bp); }),
                  operand<D<T>, T>(
                      b, [ap](const Arr<T>& db) { return dot(ap, db); },
                      [ap](const D<T>& ybar) { return scale(ybar, ap); })});
}

template <std::floating_point T>
D<T> sum(const Arr<T>& a) {
  if (a.is_const()) return D<T>(std::accumulate(a.values().begin(), a.values().end(), T(0)));
  const std::size_t r = a.rows(), c = a.cols();
  return lift<T>(a.tag(), sum(a.primal()),
                 {operand<D<T>, T>(
                     a, [](const Arr<T>& da) { return sum(da); },
                     [r, c](const D<T>& ybar) { return scale(ybar, Arr<T>::filled(r, c, T(1))); })});
}

template <std::floating_point T>
D<T> l2norm(const Arr<T>& a) {
  if (a.is_const()) return D<T>(backend<T>().l2norm(a.values()));
  const Tag t = a.tag();
  const Arr<T>& ap = a.primal();
  const D<T> y = l2norm(ap);
  return lift<T>(t, y,
                 {operand<D<T>, T>(
                     a, [ap, y](const Arr<T>& da) { return dot(ap, da) / y; },
                     [ap, y](const D<T>& ybar) { return scale(ybar / y, ap); })});
}

/// Element `k` (row-major flat index) as a scalar.
template <std::floating_point T>
D<T> element(const Arr<T>& a, std::size_t k) {
  require(k < a.size(), "element: index " + std::to_string(k) + " out of range for " + shape_of(a));
  if (a.is_const()) return D<T>(a.values()[k]);
  const ArrNode<T>& n = *arr_access::node(a);
  if (n.mode == Mode::forward) return access::dual(element(n.primal, k), element(n.tangent, k), n.tag);
  return n.tape->record_scatter(element(n.primal, k), n.index, k);
}

/// Builds an array from scalars, row-major. The result's layers are the
/// union of the scalars' layers, stored as whole arrays.
template <std::floating_point T>
Arr<T> assemble(std::size_t rows, std::size_t cols, std::span<const D<T>> xs) {
  require(xs.size() == rows * cols,
          "assemble: " + std::to_string(xs.size()) + " scalars for shape " + shape_str(rows, cols));
  std::optional<Tag> t;
  for (const auto& x : xs)
    if (!x.is_const() && (!t || x.tag() > *t)) t = x.tag();
  if (!t) {
    std::vector<T> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i].value();
    return Arr<T>(rows, cols, std::move(out));
  }
  std::vector<D<T>> peeled;
  peeled.reserve(xs.size());
  std::optional<Mode> mode;
  for (const auto& x : xs) {
    peeled.push_back(peel(x, *t));
    if (x.carries(*t)) {
      if (mode && *mode != x.mode()) throw tag_error("forward and reverse layers share one tag");
      mode = x.mode();
    }
  }
  Arr<T> y = assemble<T>(rows, cols, peeled);
  if (*mode == Mode::forward) {
    std::vector<D<T>> tangents;
    tangents.reserve(xs.size());
    for (const auto& x : xs) tangents.push_back(tangent(x, *t));
    return arr_access::dual(std::move(y), assemble<T>(rows, cols, tangents), *t);
  }
  std::shared_ptr<Tape<T>> tape;
  std::vector<std::pair<std::size_t, std::size_t>> parents;  // (tape index, element)
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!xs[k].carries(*t)) continue;
    const auto* n = access::node(xs[k]);
    tape = n->tape;
    parents.emplace_back(n->index, k);
  }
  return tape->record_gather(std::move(y), std::move(parents));
}

/// Array of zeros with the given (element, value) contributions summed in.
template <std::floating_point T>
Arr<T> scatter(std::size_t rows, std::size_t cols, std::span<const std::pair<std::size_t, D<T>>> contributions) {
  std::vector<D<T>> xs(rows * cols, D<T>(0));
  std::vector<bool> touched(rows * cols, false);
  for (const auto& [k, v] : contributions) {
    xs[k] = touched[k] ? xs[k] + v : v;
    touched[k] = true;
  }
  return assemble<T>(rows, cols, xs);
}

/// Row `i` of `a` as a cols x 1 array.
template <std::floating_point T>
Arr<T> row(const Arr<T>& a, std::size_t i) {
  require(i < a.rows(), "row: index " + std::to_string(i) + " out of range for " + shape_of(a));
  if (a.is_const()) {
    const auto v = a.values().subspan(i * a.cols(), a.cols());
    return Arr<T>(a.cols(), 1, std::vector<T>(v.begin(), v.end()));
  }
  const std::size_t rows = a.rows();
  return lift<T>(a.tag(), row(a.primal(), i),
                 {operand<Arr<T>, T>(
                     a, [i](const Arr<T>& da) { return row(da, i); },
                     [i, rows](const Arr<T>& ybar) { return embed_row(ybar, i, rows); })});
}

/// A rows x size(v) array of zeros whose row `i` is `v`.
template <std::floating_point T>
Arr<T> embed_row(const Arr<T>& v, std::size_t i, std::size_t rows) {
  require(i < rows, "embed_row: row " + std::to_string(i) + " out of range for " + std::to_string(rows) + " rows");
  if (v.is_const()) {
    std::vector<T> out(rows * v.size(), T(0));
    std::copy(v.values().begin(), v.values().end(), out.begin() + static_cast<std::ptrdiff_t>(i * v.size()));
    return Arr<T>(rows, v.size(), std::move(out));
  }
  return lift<T>(v.tag(), embed_row(v.primal(), i, rows),
                 {operand<Arr<T>, T>(
                     v, [i, rows](const Arr<T>& dv) { return embed_row(dv, i, rows); },
                     [i](const Arr<T>& ybar) { return row(ybar, i); })});
}

/// Stacks equally long vectors as the rows of a matrix.
template <std::floating_point T>
Arr<T> stack_rows(std::span<const Arr<T>> vs, std::size_t cols) {
  for (const auto& v : vs)
    require(v.size() == cols, "stack_rows: expected rows of length " + std::to_string(cols) + ", got " + shape_of(v));
  std::optional<Tag> t;
  for (const auto& v : vs)
    if (!v.is_const() && (!t || v.tag() > *t)) t = v.tag();
  if (!t) {
    std::vector<T> out;
    out.reserve(vs.size() * cols);
    for (const auto& v : vs) out.insert(out.end(), v.values().begin(), v.values().end());
    return Arr<T>(vs.size(), cols, std::move(out));
  }
  std::vector<Arr<T>> peeled;
  std::optional<Mode> mode;
  for (const auto& v : vs) {
    peeled.push_back(peel(v, *t));
    if (v.carries(*t)) {
      if (mode && *mode != v.mode()) throw tag_error("forward and reverse layers share one tag");
      mode = v.mode();
    }
  }
  Arr<T> y = stack_rows<T>(peeled, cols);
  if (*mode == Mode::forward) {
    std::vector<Arr<T>> tangents;
    for (const auto& v : vs) tangents.push_back(tangent_of(v, *t));
    return arr_access::dual(std::move(y), stack_rows<T>(tangents, cols), *t);
  }
  std::shared_ptr<Tape<T>> tape;
  std::vector<std::pair<std::size_t, LinearMap<T>>> edges;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    if (!vs[k].carries(*t)) continue;
    const auto* n = arr_access::node(vs[k]);
    tape = n->tape;
    const bool column = vs[k].cols() == 1;
    edges.emplace_back(n->index, [k, column](const Value<T>& ybar) {
      Arr<T> r = row(std::get<Arr<T>>(ybar), k);
      return Value<T>(column ? std::move(r) : transpose(r));
    });
  }
  return tape->record_linear(std::move(y), std::move(edges));
}

template <std::floating_point T>
struct SymmetryTolerance {
  static constexpr T value = std::is_same_v<T, float> ? T(1e-5) : T(1e-10);
};

/// Relative Frobenius asymmetry ||A - A^T|| / ||A||.
template <std::floating_point T>
T asymmetry(const Arr<T>& a) {
  const auto v = a.values();
  const std::size_t n = a.rows();
  T diff = 0, norm = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const T d = v[i * n + j] - v[j * n + i];
      diff += d * d;
      norm += v[i * n + j] * v[i * n + j];
    }
  return norm == T(0) ? T(0) : std::sqrt(diff / norm);
}

/// X with A X = B for symmetric A.
///   forward:  X' = A^-1 (B' - A' X)
///   reverse:  B^ += A^-1 X^,  A^ += -(A^-1 X^) X^T
/// The reverse rule is the adjoint of the forward rule for arbitrary
/// (not necessarily symmetric) perturbations of A.
template <std::floating_point T>
Arr<T> solve_symmetric(const Arr<T>& a, const Arr<T>& b) {
  require(a.rows() == a.cols(), "solve_symmetric: matrix " + shape_of(a) + " is not square");
  require(b.rows() == a.rows(), "solve_symmetric: right-hand side " + shape_of(b) + " does not match " + shape_of(a));
  const T asym = asymmetry(a);
  if (!(asym <= SymmetryTolerance<T>::value))
    throw symmetry_error("solve_symmetric: matrix " + shape_of(a) + " is not symmetric (relative asymmetry " +
                         std::to_string(asym) + ")");
  if (a.is_const() && b.is_const()) {
    std::vector<T> out(b.size());
    backend<T>().solve_symmetric(a.rows(), b.cols(), a.values(), b.values(), out);
    return Arr<T>(b.rows(), b.cols(), std::move(out));
  }
  const Tag t = top_tag_of(a, b);
  const Arr<T> ap = peel(a, t), bp = peel(b, t);
  const Arr<T> x = solve_symmetric(ap, bp);
  return lift<T>(t, x,
                 {operand<Arr<T>, T>(
                      a, [ap, x](const Arr<T>& da) { return neg(solve_symmetric(ap, matmul(da, x))); },
                      [ap, x](const Arr<T>& xbar) { return neg(matmul(solve_symmetric(ap, xbar), transpose(x))); }),
                  operand<Arr<T>, T>(
                      b, [ap](const Arr<T>& db) { return solve_symmetric(ap, db); },
                      [ap](const Arr<T>& xbar) { return solve_symmetric(ap, xbar); })});
}

/// Applies a scalar function to every element. There is no array rule for
/// an arbitrary closure, so this evaluates `f` per element on D values and
/// reassembles: the slow path.
template <std::floating_point T, class F>
Arr<T> map(const Arr<T>& a, F&& f) {
  if (a.is_const()) {
    std::vector<T> out(a.size());
    backend<T>().map(a.values(), out, [&f](T v) { return D<T>(f(D<T>(v))).value(); });
    return Arr<T>(a.rows(), a.cols(), std::move(out));
  }
  std::vector<D<T>> ys;
  ys.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) ys.push_back(D<T>(f(element(a, k))));
  return assemble<T>(a.rows(), a.cols(), ys);
}

template <std::floating_point T, class F>
Arr<T> map2(const Arr<T>& a, const Arr<T>& b, F&& f) {
  require_same_shape("map2", a, b);
  std::vector<D<T>> ys;
  ys.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) ys.push_back(D<T>(f(element(a, k), element(b, k))));
  return assemble<T>(a.rows(), a.cols(), ys);
}

template <std::floating_point T>
Value<T> add_values(const Value<T>& a, const Value<T>& b) {
  if (const auto* da = std::get_if<D<T>>(&a)) return Value<T>(*da + std::get<D<T>>(b));
  return Value<T>(add(std::get<Arr<T>>(a), std::get<Arr<T>>(b)));
}

}  // namespace nestad::detail
