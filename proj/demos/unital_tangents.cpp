#include <iostream>

#include "incidence_lab/incidence_lab.hpp"

int main() {
  using namespace inclab;
  for (std::uint32_t p : {3u, 5u, 7u}) {
    FiniteField F(p);
    auto U = build_unital(F);
    auto tangency = verify_tangency(F, U);
    auto vinh = vinh_check(F, point_ids(F, U), U.tangents);
    std::cout << "p=" << p << " (F_q = F_p[x]/(" << F.modulus_string() << "))  |P|=" << U.points.size()
              << "  tangency " << (tangency.pass ? "exact" : "FAILS") << "  I=" << vinh.incidences << "  |P||L|/q=" << vinh.expected
              << "  slack=" << vinh.slack << " <= " << vinh.bound << '\n';
  }
}
