// Nested derivatives: the classic perturbation-confusion expression, a
// derivative of a function that itself takes a derivative, and the Hessian
// assembled as the Jacobian of the gradient.

#include <cmath>
#include <iostream>

#include <nestad/nestad.hpp>

using nestad::D64;
using nestad::DV64;

int main() {
  // d/dx [ x * d/dy (x + y) ] at x = 1 is 1; conflating the two
  // perturbations would give 2.
  const D64 z = nestad::diff([](const D64& x) { return x * nestad::diff([&](const D64& y) { return x + y; }, 1.0); },
                             1.0);
  std::cout << "z = " << z << '\n';

  // a derivative taken at a point that depends on the outer variable:
  // d/da [ d/dx (x - a)^2 x  at x = a + 1 ] = d/da (2a + 3) = 2
  auto f = [](const D64& a) {
    auto inner = [&](const D64& x) { return (x - a) * (x - a) * x; };
    return nestad::diff(inner, a + 1.0);
  };
  std::cout << "d/da diff(inner)(a+1) at a=0.5: " << nestad::diff(f, 0.5) << '\n';

  for (std::size_t k = 0; k <= 4; ++k)
    std::cout << "d^" << k << "/dx^" << k << " exp(2x) at 0 = "
              << nestad::diffn(k, [](const D64& x) { return exp(2.0 * x); }, 0.0) << '\n';

  auto g = [](const DV64& v) { return v[0] * v[0] * v[1] + sin(v[1]) * v[2]; };
  const DV64 x{1.0, 2.0, 0.5};
  std::cout << "H = jacobian(grad g) = " << nestad::jacobian(nestad::grad(g), x) << '\n';
  std::cout << "hessian g            = " << nestad::hessian(g, x) << '\n';
  std::cout << "laplacian g          = " << nestad::laplacian(g, x) << '\n';
}
