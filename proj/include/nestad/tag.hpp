#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <ostream>

namespace nestad {

/// Identifies one invocation of a differentiation operator. Perturbations
/// introduced by different invocations carry different tags, and a nested
/// invocation always receives a larger tag than the one enclosing it.
struct Tag {
  std::uint64_t id = 0;

  friend constexpr auto operator<=>(const Tag&, const Tag&) = default;
  friend std::ostream& operator<<(std::ostream& os, const Tag& t) { return os << "tag#" << t.id; }
};

/// Returns a tag strictly greater than every tag issued before in this process.
/// Safe to call concurrently.
inline Tag fresh_tag() noexcept {
  static std::atomic<std::uint64_t> counter{0};
  return Tag{counter.fetch_add(1, std::memory_order_relaxed)};
}

/// How a differentiable value carries its outermost derivative layer.
enum class Mode : std::uint8_t { constant, forward, reverse };

}  // namespace nestad
