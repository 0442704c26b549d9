// Minimize the Rosenbrock function with Newton's method. The objective is a
// generic lambda; argmin_newton differentiates it twice internally.

#include <iostream>

#include <nestad/nestad.hpp>

int main() {
  auto rosenbrock = [](const auto& v) {
    const auto a = 1.0 - v[0];
    const auto b = v[1] - v[0] * v[0];
    return a * a + 100.0 * b * b;
  };
  const nestad::DV64 x0{-1.2, 1.0};
  const auto xmin = nestad::argmin_newton(1e-10, rosenbrock, x0);
  std::cout << "argmin  " << xmin << '\n';
  std::cout << "|grad|  " << nestad::l2norm(nestad::grad(rosenbrock, xmin)) << '\n';

  // plain vectors in, plain vectors out
  const std::vector<double> q = nestad::argmin_newton(1e-12, [](const auto& v) {
    return (v[0] - 3.0) * (v[0] - 3.0) + 2.0 * (v[1] + 1.0) * (v[1] + 1.0);
  }, std::vector<double>{0.0, 0.0});
  std::cout << "quadratic minimum at " << q[0] << ", " << q[1] << '\n';
}
