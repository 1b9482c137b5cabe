#include <iostream>

#include "incidence_lab/incidence_lab.hpp"

int main() {
  using namespace inclab;
  for (std::size_t n : {64, 256, 1024, 4096}) {
    auto P = uniform_unit_square(n, derive_seed(11, n));
    auto pairing = greedy_pairing(P);
    auto t = small_triangle_pipeline(P);
    std::cout << "n=" << n << "  pairs=" << pairing.pairs.size() << "  max pair distance=" << pairing.max_distance
              << " (bound " << pairing.bound() << ")  pipeline area=" << t.area;
    if (n <= 256) std::cout << "  exact minimum=" << brute_force_min_triangle(P).area;
    std::cout << '\n';
  }
}
