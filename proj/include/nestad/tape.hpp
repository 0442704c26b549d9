#pragma once

// Reverse-mode trace. Include <nestad/core.hpp> rather than this header directly.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "array.hpp"
#include "errors.hpp"
#include "scalar.hpp"
#include "tag.hpp"

namespace nestad {

/// Append-only record of the operations performed on reverse layers of one
/// tag. Each tape belongs to exactly one differentiation-operator invocation.
///
/// Nodes are scalar or array valued. Edges point from a node to earlier
/// nodes only, so a single descending pass is a reverse topological order.
/// Local partials are stored as D values (and array edges as closures over
/// D/array values), which keeps the adjoint computation itself
/// differentiable by any enclosing operator.
///
/// Not safe for concurrent use.
template <std::floating_point T>
class Tape : public std::enable_shared_from_this<Tape<T>> {
 public:
  using Value = detail::Value<T>;
  using LinearMap = detail::LinearMap<T>;

  static std::shared_ptr<Tape> create(Tag tag) { return std::shared_ptr<Tape>(new Tape(tag)); }

  Tag tag() const noexcept { return tag_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Registers an independent variable and returns its reverse layer.
  D<T> variable(const D<T>& primal) {
    check_below(primal.is_const() ? std::nullopt : std::optional<Tag>(primal.tag()));
    const std::size_t i = push_node(false, 1, 1);
    return detail::access::rev(primal, this->shared_from_this(), i, tag_);
  }

  detail::Arr<T> variable(const detail::Arr<T>& primal) {
    check_below(primal.is_const() ? std::nullopt : std::optional<Tag>(primal.tag()));
    const std::size_t i = push_node(true, primal.rows(), primal.cols());
    return detail::arr_access::rev(primal, this->shared_from_this(), i, tag_);
  }

  D<T> record_unary(D<T> y, std::size_t parent, D<T> partial) {
    const std::size_t i = push_node(false, 1, 1);
    push_edge({Edge::Kind::scale, parent, 0, std::move(partial), {}});
    return detail::access::rev(std::move(y), this->shared_from_this(), i, tag_);
  }

  D<T> record_binary(D<T> y, std::size_t pa, D<T> da, std::size_t pb, D<T> db) {
    const std::size_t i = push_node(false, 1, 1);
    push_edge({Edge::Kind::scale, pa, 0, std::move(da), {}});
    push_edge({Edge::Kind::scale, pb, 0, std::move(db), {}});
    return detail::access::rev(std::move(y), this->shared_from_this(), i, tag_);
  }

  /// y is element `element` of array node `parent`.
  D<T> record_scatter(D<T> y, std::size_t parent, std::size_t element) {
    const std::size_t i = push_node(false, 1, 1);
    push_edge({Edge::Kind::scatter, parent, element, D<T>{}, {}});
    return detail::access::rev(std::move(y), this->shared_from_this(), i, tag_);
  }

  /// Element k of y is scalar node p, for each (p, k) in `parents`.
  detail::Arr<T> record_gather(detail::Arr<T> y, std::vector<std::pair<std::size_t, std::size_t>> parents) {
    const std::size_t i = push_node(true, y.rows(), y.cols());
    for (const auto& [p, k] : parents) push_edge({Edge::Kind::gather, p, k, D<T>{}, {}});
    return detail::arr_access::rev(std::move(y), this->shared_from_this(), i, tag_);
  }

  D<T> record_linear(D<T> y, std::vector<std::pair<std::size_t, LinearMap>> edges) {
    const std::size_t i = push_node(false, 1, 1);
    for (auto& [p, f] : edges) push_edge({Edge::Kind::linear, p, 0, D<T>{}, std::move(f)});
    return detail::access::rev(std::move(y), this->shared_from_this(), i, tag_);
  }

  detail::Arr<T> record_linear(detail::Arr<T> y, std::vector<std::pair<std::size_t, LinearMap>> edges) {
    const std::size_t i = push_node(true, y.rows(), y.cols());
    for (auto& [p, f] : edges) push_edge({Edge::Kind::linear, p, 0, D<T>{}, std::move(f)});
    return detail::arr_access::rev(std::move(y), this->shared_from_this(), i, tag_);
  }

  /// Zeroes every adjoint, seeds node `output` and propagates to all of its
  /// ancestors. The seed must have the node's kind and shape.
  void sweep(std::size_t output, Value seed) {
    if (output >= nodes_.size()) throw std::out_of_range("sweep: node " + std::to_string(output) + " not on tape");
    const Node& out = nodes_[output];
    if (const auto* a = std::get_if<detail::Arr<T>>(&seed)) {
      if (!out.is_array || a->rows() != out.rows || a->cols() != out.cols)
        throw shape_error("sweep: seed " + detail::shape_of(*a) + " does not match output " +
                          (out.is_array ? detail::shape_str(out.rows, out.cols) : std::string("scalar")));
    } else if (out.is_array) {
      throw shape_error("sweep: scalar seed for array output " + detail::shape_str(out.rows, out.cols));
    }
    reset();
    adjoints_[output] = std::move(seed);
    for (std::size_t i = output + 1; i-- > 0;) {
      flush_scatter(i);
      if (!adjoints_[i]) continue;
      const Value adj = *adjoints_[i];
      const Node& n = nodes_[i];
      for (std::size_t e = n.first_edge; e < n.first_edge + n.edge_count; ++e) propagate(edges_[e], adj);
    }
    swept_ = true;
  }

  void reset() {
    adjoints_.assign(nodes_.size(), std::nullopt);
    pending_.assign(nodes_.size(), {});
    swept_ = false;
  }

  bool swept() const noexcept { return swept_; }

  /// Nodes that node `i` has edges to.
  std::vector<std::size_t> parents(std::size_t i) const {
    const Node& n = nodes_.at(i);
    std::vector<std::size_t> ps;
    for (std::size_t e = n.first_edge; e < n.first_edge + n.edge_count; ++e) ps.push_back(edges_[e].parent);
    return ps;
  }

  /// True once an adjoint was read before any sweep completed.
  bool read_before_sweep() const noexcept { return read_before_sweep_; }

  /// Adjoint of node `index` from the last sweep; nullopt means zero.
  std::optional<Value> adjoint(std::size_t index) const {
    if (!swept_) {
      read_before_sweep_ = true;
      return std::nullopt;
    }
    if (index >= adjoints_.size()) return std::nullopt;
    return adjoints_[index];
  }

  D<T> scalar_adjoint(std::size_t index) const {
    auto a = adjoint(index);
    return a ? std::get<D<T>>(*a) : D<T>(0);
  }

  detail::Arr<T> array_adjoint(std::size_t index) const {
    auto a = adjoint(index);
    if (a) return std::get<detail::Arr<T>>(*a);
    const Node& n = nodes_.at(index);
    return detail::Arr<T>::filled(n.rows, n.cols, T(0));
  }

 private:
  struct Edge {
    enum class Kind : std::uint8_t {
      scale,    // scalar parent: parent^ += partial * node^
      scatter,  // node is element `element` of array parent
      gather,   // scalar parent is element `element` of this array node
      linear,   // parent^ += vjp(node^)
    };
    Kind kind;
    std::size_t parent;
    std::size_t element;
    D<T> partial;
    LinearMap vjp;
  };

  struct Node {
    std::size_t first_edge;
    std::size_t edge_count;
    std::size_t rows;
    std::size_t cols;
    bool is_array;
  };

  explicit Tape(Tag tag) : tag_(tag) {}

  void check_below(std::optional<Tag> t) const {
    if (t && *t >= tag_) throw tag_error("tape variable must be built from smaller tags");
  }

  std::size_t push_node(bool is_array, std::size_t rows, std::size_t cols) {
    nodes_.push_back(Node{edges_.size(), 0, rows, cols, is_array});
    return nodes_.size() - 1;
  }

  void push_edge(Edge e) {
    edges_.push_back(std::move(e));
    ++nodes_.back().edge_count;
  }

  void accumulate(std::size_t i, Value v) {
    auto& slot = adjoints_[i];
    if (!slot)
      slot = std::move(v);
    else
      slot = detail::add_values(*slot, v);
  }

  void flush_scatter(std::size_t i) {
    auto& pend = pending_[i];
    if (pend.empty()) return;
    const Node& n = nodes_[i];
    accumulate(i, Value(detail::scatter<T>(n.rows, n.cols, pend)));
    pend.clear();
  }

  void propagate(const Edge& e, const Value& adj) {
    switch (e.kind) {
      case Edge::Kind::scale:
        accumulate(e.parent, Value(detail::scale_by(std::get<D<T>>(adj), e.partial)));
        break;
      case Edge::Kind::scatter:
        pending_[e.parent].emplace_back(e.element, std::get<D<T>>(adj));
        break;
      case Edge::Kind::gather:
        accumulate(e.parent, Value(detail::element(std::get<detail::Arr<T>>(adj), e.element)));
        break;
      case Edge::Kind::linear:
        accumulate(e.parent, e.vjp(adj));
        break;
    }
  }

  Tag tag_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::optional<Value>> adjoints_;
  std::vector<std::vector<std::pair<std::size_t, D<T>>>> pending_;
  bool swept_ = false;
  mutable bool read_before_sweep_ = false;
};

/// Runs a reverse sweep from `output` seeded with `seed`. `output` must be a
/// reverse layer owned by `t`.
template <std::floating_point T>
void reverse_sweep(const D<T>& output, const D<T>& seed, Tag t) {
  if (!output.carries(t) || output.mode() != Mode::reverse)
    throw tag_error("reverse_sweep: output is not a reverse value of the requested tag");
  const auto* n = detail::access::node(output);
  n->tape->sweep(n->index, typename Tape<T>::Value(seed));
}

/// Adjoint accumulated into reverse value `x` by the last sweep over its
/// tape. Zero when `x` is not a reverse value or no sweep has run; the tape
/// then reports read_before_sweep().
template <std::floating_point T>
D<T> adjoint(const D<T>& x) {
  if (x.mode() != Mode::reverse) return D<T>(0);
  const auto* n = detail::access::node(x);
  return n->tape->scalar_adjoint(n->index);
}

}  // namespace nestad
