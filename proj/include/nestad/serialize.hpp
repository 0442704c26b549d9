#pragma once

// Binary dumps of primal vectors and matrices.
//
// Layout (all little-endian):
//   bytes 0-3   magic "NDA8" (double) or "NDA4" (float)
//   bytes 4-7   rank, 1 or 2
//   bytes 8-11  rows
//   bytes 12-15 cols (1 for rank 1)
//   then rows*cols IEEE-754 values, row-major

#include <array>
#include <bit>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace nestad {

class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <std::floating_point T>
constexpr std::array<char, 4> magic() {
  if constexpr (sizeof(T) == 8)
    return {'N', 'D', 'A', '8'};
  else
    return {'N', 'D', 'A', '4'};
}

template <class U>
void put_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(buf[i], buf[sizeof(U) - 1 - i]);
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw format_error("truncated array file");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(buf[i], buf[sizeof(U) - 1 - i]);
  U v;
  std::memcpy(&v, buf, sizeof(U));
  return v;
}

using bits32 = std::uint32_t;

template <std::floating_point T>
using bits_of = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;

}  // namespace detail

/// Primal values with their shape, as read back from a dump.
template <std::floating_point T>
struct ArrayFile {
  std::uint32_t rank = 1;
  std::uint32_t rows = 0;
  std::uint32_t cols = 1;
  std::vector<T> data;
};

template <std::floating_point T>
void write_array(std::ostream& os, std::uint32_t rank, std::uint32_t rows, std::uint32_t cols, std::span<const T> data) {
  const auto m = detail::magic<T>();
  os.write(m.data(), 4);
  detail::put_le<detail::bits32>(os, rank);
  detail::put_le<detail::bits32>(os, rows);
  detail::put_le<detail::bits32>(os, cols);
  for (T v : data) detail::put_le(os, std::bit_cast<detail::bits_of<T>>(v));
  if (!os) throw format_error("write failed");
}

template <std::floating_point T>
void write(std::ostream& os, const DV<T>& v) {
  write_array<T>(os, 1, static_cast<std::uint32_t>(v.size()), 1, v.values());
}

template <std::floating_point T>
void write(std::ostream& os, const DM<T>& m) {
  write_array<T>(os, 2, static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols()), m.values());
}

template <std::floating_point T>
ArrayFile<T> read_array(std::istream& is) {
  char m[4];
  if (!is.read(m, 4)) throw format_error("truncated array file");
  const auto want = detail::magic<T>();
  if (std::memcmp(m, want.data(), 4) != 0) throw format_error("bad magic or precision mismatch");
  ArrayFile<T> f;
  f.rank = detail::get_le<detail::bits32>(is);
  f.rows = detail::get_le<detail::bits32>(is);
  f.cols = detail::get_le<detail::bits32>(is);
  if (f.rank != 1 && f.rank != 2) throw format_error("unsupported rank " + std::to_string(f.rank));
  if (f.rank == 1 && f.cols != 1) throw format_error("rank-1 array with cols != 1");
  const std::size_t n = std::size_t(f.rows) * f.cols;
  f.data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) f.data.push_back(std::bit_cast<T>(detail::get_le<detail::bits_of<T>>(is)));
  return f;
}

template <std::floating_point T>
DV<T> read_vector(std::istream& is) {
  auto f = read_array<T>(is);
  if (f.rank != 1) throw format_error("expected a vector");
  return DV<T>(std::move(f.data));
}

template <std::floating_point T>
DM<T> read_matrix(std::istream& is) {
  auto f = read_array<T>(is);
  if (f.rank != 2) throw format_error("expected a matrix");
  return DM<T>(f.rows, f.cols, std::move(f.data));
}

template <class A>
void save(const std::string& path, const A& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open " + path);
  write(os, a);
}

}  // namespace nestad
