#pragma once

// Overhead measurements: time an operator against plain evaluation of the
// same generated function and report the ratio.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "../diff.hpp"
#include "composition.hpp"

namespace nestad::bench {

struct BenchResult {
  std::string op;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t reps = 0;
  double primal_ns = 0;  // mean
  double op_ns = 0;      // mean
  double ratio = 0;      // op_ns / primal_ns

  bool operator==(const BenchResult&) const = default;
};

class usage_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input dimension n and output dimension m.
struct Size {
  std::size_t n = 1;
  std::size_t m = 1;
};

enum class Shape { univariate, scalar, vector, square, cube };

struct OpInfo {
  const char* name;
  Shape shape;
};

inline const std::vector<OpInfo>& operations() {
  static const std::vector<OpInfo> ops{
      {"diff", Shape::univariate},       {"diff2", Shape::univariate},    {"diffn", Shape::univariate},
      {"grad", Shape::scalar},           {"gradv", Shape::scalar},        {"hessian", Shape::scalar},
      {"hessianv", Shape::scalar},       {"gradhessian", Shape::scalar},  {"gradhessianv", Shape::scalar},
      {"laplacian", Shape::scalar},      {"jacobian", Shape::vector},     {"jacobianT", Shape::vector},
      {"jacobianv", Shape::vector},      {"jacobianTv", Shape::vector},   {"div", Shape::square},
      {"curl", Shape::cube},             {"curldiv", Shape::cube},
  };
  return ops;
}

inline std::string operation_names() {
  std::string s;
  for (const auto& o : operations()) s += (s.empty() ? "" : ", ") + std::string(o.name);
  return s;
}

inline const OpInfo& find_operation(const std::string& name) {
  for (const auto& o : operations())
    if (name == o.name) return o;
  throw usage_error("unknown operation '" + name + "'; valid operations: " + operation_names());
}

/// The (n, m) an operation actually runs at for a requested size.
inline Size effective_size(Shape s, Size req) {
  switch (s) {
    case Shape::univariate: return {1, 1};
    case Shape::scalar: return {req.n, 1};
    case Shape::vector: return req;
    case Shape::square: return {req.n, req.n};
    case Shape::cube: return {3, 3};
  }
  return req;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::size_t n, std::size_t m) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (n + 1) + 0xBF58476D1CE4E5B9ull * (m + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// The function and input used for one (seed, n, m); shared by every op.
inline Composition instance(std::uint64_t seed, Size s, std::size_t max_depth = 4) {
  return Composition::generate(mix_seed(seed, s.n, s.m), s.n, s.m, max_depth);
}

struct BenchHooks {
  std::function<void(const std::string& op, Size)> before;
  std::function<void(const BenchResult&)> after;
};

namespace detail {

inline volatile double sink = 0;

template <class F>
double mean_ns(std::size_t reps, F&& f) {
  f();  // warm-up, not timed
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t r = 0; r < reps; ++r) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(reps);
}

template <class X>
double touch(const X& x) {
  if constexpr (requires { x.values(); }) {
    const auto v = x.values();
    return v.empty() ? 0.0 : static_cast<double>(v[0]);
  } else if constexpr (requires { x.value(); }) {
    return static_cast<double>(x.value());
  } else {
    return static_cast<double>(x);
  }
}

inline BenchResult run_one(const OpInfo& info, const Composition& c, std::size_t reps) {
  using T = double;
  const std::string op = info.name;
  const std::vector<T> xp(c.point().begin(), c.point().end());
  const DV<T> x = c.point_as<T>();
  const DV<T> v = DV<T>::filled(c.inputs(), T(1) / static_cast<T>(c.inputs()));
  const DV<T> w = DV<T>::filled(c.outputs(), T(1));
  const T x0 = xp.front();

  auto uni = [&c](const D<T>& t) { return c.univariate(t); };
  auto sca = [&c](const DV<T>& z) { return c.scalar(z); };
  auto vec = [&c](const DV<T>& z) { return c(z); };

  double primal = 0;
  if (info.shape == Shape::univariate)
    primal = mean_ns(reps, [&] { sink = sink + c.univariate(x0); });
  else if (info.shape == Shape::scalar)
    primal = mean_ns(reps, [&] { sink = sink + c.scalar(xp); });
  else
    primal = mean_ns(reps, [&] { sink = sink + c(xp).front(); });

  auto time = [&](auto&& body) { return mean_ns(reps, [&] { sink = sink + touch(body()); }); };
  double t = 0;
  if (op == "diff") t = time([&] { return diff(uni, x0); });
  else if (op == "diff2") t = time([&] { return diff2(uni, x0); });
  else if (op == "diffn") t = time([&] { return diffn(3, uni, x0); });
  else if (op == "grad") t = time([&] { return grad(sca, x); });
  else if (op == "gradv") t = time([&] { return gradv(sca, x, v); });
  else if (op == "hessian") t = time([&] { return hessian(sca, x); });
  else if (op == "hessianv") t = time([&] { return hessianv(sca, x, v); });
  else if (op == "gradhessian") t = time([&] { return gradhessian(sca, x).second; });
  else if (op == "gradhessianv") t = time([&] { return gradhessianv(sca, x, v).second; });
  else if (op == "laplacian") t = time([&] { return laplacian(sca, x); });
  else if (op == "jacobian") t = time([&] { return jacobian(vec, x); });
  else if (op == "jacobianT") t = time([&] { return jacobianT(vec, x); });
  else if (op == "jacobianv") t = time([&] { return jacobianv(vec, x, v); });
  else if (op == "jacobianTv") t = time([&] { return jacobianTv(vec, x, w); });
  else if (op == "div") t = time([&] { return div(vec, x); });
  else if (op == "curl") t = time([&] { return curl(vec, x); });
  else if (op == "curldiv") t = time([&] { return curldiv(vec, x).first; });
  else throw usage_error("unknown operation '" + op + "'; valid operations: " + operation_names());

  return BenchResult{op, c.inputs(), c.outputs(), reps, primal, t, primal > 0 ? t / primal : 0.0};
}

}  // namespace detail

/// One result per (operation, size). Sizes an operation cannot take are
/// mapped by effective_size; duplicates after mapping are measured once.
inline std::vector<BenchResult> run_bench(const std::vector<std::string>& ops, const std::vector<Size>& sizes,
                                          std::size_t reps, std::uint64_t seed, const BenchHooks& hooks = {}) {
  if (reps < 1) throw usage_error("reps must be at least 1");
  if (sizes.empty()) throw usage_error("at least one size is required");
  for (const Size& s : sizes)
    if (s.n == 0 || s.m == 0) throw usage_error("sizes must be positive");
  std::vector<const OpInfo*> selected;
  for (const auto& name : ops) selected.push_back(&find_operation(name));

  std::vector<BenchResult> out;
  for (const OpInfo* info : selected) {
    std::vector<std::pair<std::size_t, std::size_t>> seen;
    for (const Size& req : sizes) {
      const Size s = effective_size(info->shape, req);
      bool dup = false;
      for (const auto& p : seen) dup = dup || (p.first == s.n && p.second == s.m);
      if (dup) continue;
      seen.emplace_back(s.n, s.m);
      const Composition c = instance(seed, s);
      if (hooks.before) hooks.before(info->name, s);
      BenchResult r = detail::run_one(*info, c, reps);
      if (hooks.after) hooks.after(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* csv_header = "op,n,m,reps,primal_ns,op_ns,ratio";

inline void write_csv(std::ostream& os, const std::vector<BenchResult>& rs) {
  os << csv_header << '\n';
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rs)
    os << r.op << ',' << r.n << ',' << r.m << ',' << r.reps << ',' << r.primal_ns << ',' << r.op_ns << ','
       << r.ratio << '\n';
  os.precision(old);
}

class csv_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<BenchResult> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != csv_header) throw csv_error("missing or wrong CSV header");
  std::vector<BenchResult> rs;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw csv_error("line " + std::to_string(lineno) + ": expected 7 fields");
    try {
      BenchResult r;
      r.op = f[0];
      r.n = std::stoull(f[1]);
      r.m = std::stoull(f[2]);
      r.reps = std::stoull(f[3]);
      r.primal_ns = std::stod(f[4]);
      r.op_ns = std::stod(f[5]);
      r.ratio = std::stod(f[6]);
      rs.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw csv_error("line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return rs;
}

/// Fixed-width table for terminals.
inline void write_table(std::ostream& os, const std::vector<BenchResult>& rs,
                        const std::vector<double>* peak_bytes = nullptr) {
  os << std::left << std::setw(14) << "op" << std::right << std::setw(6) << "n" << std::setw(6) << "m"
     << std::setw(7) << "reps" << std::setw(14) << "primal_ns" << std::setw(14) << "op_ns" << std::setw(10)
     << "ratio";
  if (peak_bytes) os << std::setw(14) << "peak_bytes";
  os << '\n';
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& r = rs[i];
    os << std::left << std::setw(14) << r.op << std::right << std::setw(6) << r.n << std::setw(6) << r.m
       << std::setw(7) << r.reps << std::fixed << std::setprecision(0) << std::setw(14) << r.primal_ns
       << std::setw(14) << r.op_ns << std::setprecision(2) << std::setw(10) << r.ratio;
    if (peak_bytes) os << std::setprecision(0) << std::setw(14) << (*peak_bytes)[i];
    os << '\n' << std::defaultfloat;
  }
}

}  // namespace nestad::bench
