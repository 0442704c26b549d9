#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nestad {

/// Operands whose shapes do not conform to the operation.
class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// solve_symmetric was handed a matrix that is not symmetric within tolerance.
class symmetry_error : public shape_error {
 public:
  using shape_error::shape_error;
};

/// Linear solve on a (numerically) singular matrix.
class solve_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Misuse of tags: sweeping with the wrong tag, or forward and reverse
/// layers sharing one tag.
class tag_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An iteration ran out of budget. `phase` names the stage that failed
/// ("primal", "tangent", "adjoint", "newton"), `residual` is the last
/// measured residual.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(std::string phase, double residual, std::size_t iterations)
      : std::runtime_error("no convergence in " + phase + " phase after " + std::to_string(iterations) +
                           " iterations (last residual " + std::to_string(residual) + ")"),
        phase_(std::move(phase)),
        residual_(residual),
        iterations_(iterations) {}

  const std::string& phase() const noexcept { return phase_; }
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::string phase_;
  double residual_;
  std::size_t iterations_;
};

namespace detail {

inline std::string shape_str(std::size_t rows, std::size_t cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

}  // namespace detail
}  // namespace nestad
