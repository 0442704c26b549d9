#pragma once

// Newton's method and gradient descent built on the differentiation
// operators. The objective is an ordinary generic callable; callers never
// name a derivative type.

#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "diff.hpp"

namespace nestad {

/// Newton could not take a step: the Hessian at `iterate()` is not positive
/// definite or the step solve failed.
class newton_error : public solve_error {
 public:
  newton_error(const std::string& what, std::vector<double> iterate)
      : solve_error(what), iterate_(std::move(iterate)) {}
  const std::vector<double>& iterate() const noexcept { return iterate_; }

 private:
  std::vector<double> iterate_;
};

namespace detail {

template <std::floating_point T>
std::vector<double> to_doubles(const DV<T>& x) {
  const auto v = x.values();
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace detail

/// Minimizes f by Newton steps x <- x - H^-1 g until |g| < eps. Throws
/// newton_error when H is indefinite or singular, convergence_error
/// (phase "newton") after max_iter steps.
template <std::floating_point T, class F>
DV<T> argmin_newton(T eps, F&& f, DV<T> x, std::size_t max_iter = 1000) {
  for (std::size_t iter = 0;; ++iter) {
    auto [g, h] = gradhessian(f, x);
    const D<T> gnorm = l2norm(g);
    if (gnorm < eps) return x;
    if (iter == max_iter) throw convergence_error("newton", static_cast<double>(gnorm.value()), max_iter);
    const auto hv = h.values();
    if (!is_positive_definite<T>(h.rows(), hv))
      throw newton_error("argmin_newton: Hessian is not positive definite at iteration " + std::to_string(iter),
                         detail::to_doubles(x));
    try {
      x = x - solve_symmetric(h, g);
    } catch (const shape_error& e) {
      throw newton_error(std::string("argmin_newton: ") + e.what(), detail::to_doubles(x));
    } catch (const solve_error& e) {
      throw newton_error(std::string("argmin_newton: ") + e.what(), detail::to_doubles(x));
    }
  }
}

template <std::floating_point T, class F>
std::vector<T> argmin_newton(T eps, F&& f, const std::vector<T>& x0, std::size_t max_iter = 1000) {
  return argmin_newton(eps, f, DV<T>(x0), max_iter).to_vector();
}

/// `steps` iterations of x <- x - lr * grad f(x).
template <std::floating_point T, class F>
DV<T> gradient_descent(T lr, std::size_t steps, F&& f, DV<T> x) {
  for (std::size_t k = 0; k < steps; ++k) x = x - lr * grad(f, x);
  return x;
}

template <std::floating_point T, class F>
std::vector<T> gradient_descent(T lr, std::size_t steps, F&& f, const std::vector<T>& x0) {
  return gradient_descent(lr, steps, f, DV<T>(x0)).to_vector();
}

}  // namespace nestad
