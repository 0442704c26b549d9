// Square roots as fixed points of the Babylonian update, differentiated
// without unrolling the iteration.

#include <cmath>
#include <iostream>

#include <nestad/nestad.hpp>

using nestad::D64;
using nestad::DV64;

int main() {
  auto babylonian = [](const D64& x, const D64& b) { return (x + b / x) / 2.0; };
  auto root = [&](const D64& b) { return nestad::fixed_point(babylonian, 1.0, b); };

  for (double b : {1.0, 2.0, 9.0}) {
    std::cout << "b = " << b << "  sqrt = " << root(D64(b)) << "  d/db forward = " << nestad::diff(root, b)
              << "  reverse = " << nestad::grad([&](const DV64& v) { return root(v[0]); }, DV64{b})
              << "  expected = " << 0.5 / std::sqrt(b) << '\n';
  }
  std::cout << "second derivative at 4: " << nestad::diff2(root, 4.0) << " (expected " << -0.25 / std::pow(4.0, 1.5)
            << ")\n";
}
