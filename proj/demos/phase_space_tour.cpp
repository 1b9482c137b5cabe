#include <iostream>

#include "incidence_lab/incidence_lab.hpp"

int main() {
  using namespace inclab;
  auto X = gen_grid_slope_field(dyadic(6));
  std::cout << "grid slope field: " << X.size() << " phase points, delta=" << format_scale(X.delta()) << "\n\n";

  std::cout << "covering numbers |X|_{u x uw x w} against max{u^-2 w^-1, u^-1 w^-2}\n";
  for (int i = 0; i <= 3; ++i)
    for (int k = 0; k <= 3; ++k) {
      ScaleTriple s{dyadic(i), dyadic(i + k), dyadic(k)};
      double model = std::max(std::pow(s.u, -2) / s.w, std::pow(s.w, -2) / s.u);
      std::cout << "  " << s.to_string() << ": " << covering_number(X, s) << " (model " << model << ")\n";
    }

  auto report = high_low_scan(gen_uniform_random(1000, 1), dyadic(8), dyadic(3));
  std::cout << "\nhigh-low scan of 1000 random phase points\n" << report.to_csv();

  auto u = uniformize(gen_uniform_random(2000, 2), 2, 3);
  std::cout << "\nuniformize: kept " << u.output.size() << " of 2000 points, certificate K=" << u.certificate.K << '\n';
}
