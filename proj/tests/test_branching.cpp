#include <gtest/gtest.h>

#include <cmath>

#include "incidence_lab/branching.hpp"
#include "incidence_lab/constructions.hpp"
#include "incidence_lab/regularity.hpp"

using namespace inclab;

namespace {

BranchingFunction linear(int m, double a, double b, double c) {
  return BranchingFunction::from_function(m, 1, [=](double x, double y, double z) { return a * x + b * y + c * z; });
}

const BranchingFunction& lattice_branching() {
  static const BranchingFunction f = [] {
    auto X = gen_lattice(dyadic(4));
    auto u = uniformize(X, 2, 2);
    BranchingOptions opt;
    opt.log2_K = std::log2(u.certificate.K);
    return compute_branching(X, 2, 2, opt);
  }();
  return f;
}

}  // namespace

TEST(Branching, GridShapeAndAccess) {
  BranchingFunction f(4, 2);
  EXPECT_EQ(f.delta(), dyadic(8));
  EXPECT_TRUE(f.in_domain(1, 2, 3));
  EXPECT_FALSE(f.in_domain(1, 1, 3));
  EXPECT_FALSE(f.has(0, 0, 0));
  EXPECT_THROW(f(0, 0, 0), std::out_of_range);
  EXPECT_THROW(f.set(0, 0, 1, 1.0), std::out_of_range);
  f.set(1, 1, 2, 0.5);
  EXPECT_EQ(f.sheet(1, 1), 0.5);
  EXPECT_THROW(BranchingFunction(0, 1), std::invalid_argument);
}

TEST(Branching, ToleranceFormula) {
  EXPECT_DOUBLE_EQ(branching_tolerance(6, 2, 0), 0.5);
  EXPECT_DOUBLE_EQ(branching_tolerance(4, 3, 2), 6.0 * 2 / 12 + 0.75);
}

TEST(Branching, LatticeMatchesCoveringOracle) {
  auto X = gen_lattice(dyadic(4));
  auto f = compute_branching(X, 2, 2);
  EXPECT_EQ(f(0, 0, 0), 0.0);
  EXPECT_FALSE(f.certified);
  for (auto [i, j, k] : std::vector<std::tuple<int, int, int>>{{0, 0, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 2}, {2, 2, 2}, {2, 1, 1}}) {
    ScaleTriple s{dyadic(2 * i), dyadic(2 * k), dyadic(2 * j)};
    EXPECT_DOUBLE_EQ(f(i, j, k), std::log2(static_cast<double>(covering_number(X, s))) / 4);
    EXPECT_NEAR(f(i, j, k), (i + j + k) / 2.0, 0.25) << i << j << k;
  }
}

TEST(Branching, RejectsCoarseConfiguration) {
  auto X = gen_lattice(dyadic(3));
  EXPECT_THROW(compute_branching(X, 2, 2), std::invalid_argument);
}

TEST(Branching, GridSlopeFieldSheetFollowsMaxLaw) {
  auto X = gen_grid_slope_field(dyadic(8));
  BranchingOptions opt;
  opt.sheet_only = true;
  auto f = compute_branching(X, 4, 2, opt);
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; i + j <= 4; ++j) {
      double x = i / 4.0, y = j / 4.0;
      EXPECT_NEAR(f.sheet(i, j), std::max(2 * x + y, x + 2 * y), 0.25) << i << "," << j;
    }
}

TEST(Branching, ExportsCsvAndJson) {
  auto f = linear(2, 1, 1, 0);
  auto csv = f.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,z,f");
  auto j = f.to_json();
  EXPECT_EQ(j["m"], 2);
}

TEST(Lipschitz, ConstantZeroHasNoViolation) {
  auto f = linear(5, 0, 0, 0);
  auto r = check_lipschitz_monotone(f);
  EXPECT_EQ(r.max_violation(), 0.0);
  EXPECT_TRUE(r.within_tolerance());
}

TEST(Lipschitz, TwoXIsMonotoneButNotLipschitz) {
  auto f = linear(5, 2, 0, 0);
  auto r = check_lipschitz_monotone(f);
  EXPECT_EQ(r.max_violation("monotone"), 0.0);
  // Over all comparable pairs the worst is (0,0,0) -> (1,0,0): 2 - 1.
  EXPECT_NEAR(r.max_violation("lipschitz"), 1.0, 1e-12);
  // On a grid large enough for the edge scan, each x-edge fails by one step.
  auto g = linear(20, 2, 0, 0);
  auto rg = check_lipschitz_monotone(g);
  EXPECT_NEAR(rg.max_violation("lipschitz"), 1.0 / 20, 1e-12);
}

TEST(Lipschitz, UniformizedLatticeWithinTolerance) {
  const auto& f = lattice_branching();
  EXPECT_TRUE(f.certified);
  auto r = check_lipschitz_monotone(f);
  EXPECT_LE(r.max_violation(), f.tolerance);
}

TEST(Submodular, LinearIsModular) {
  auto f = linear(6, 0.3, 1.7, 0.9);
  EXPECT_LE(check_submodular(f).max_violation(), 1e-12);
}

TEST(Submodular, MaxLawExhaustiveAtTen) {
  auto f = BranchingFunction::from_function(10, 1, [](double x, double y, double) { return std::max(2 * x + y, x + 2 * y); });
  auto r = check_submodular(f);
  EXPECT_LE(r.max_violation(), 1e-12);
  EXPECT_GT(r.checks.at(0).checked, 100000u);
}

TEST(Submodular, DetectsSupermodularFunction) {
  auto f = BranchingFunction::from_function(4, 1, [](double x, double y, double) { return x * y; });
  EXPECT_GT(check_submodular(f).max_violation(), 0.0);
}

TEST(Submodular, UniformizedLatticeWithinTolerance) {
  const auto& f = lattice_branching();
  EXPECT_LE(check_submodular(f).max_violation(), f.tolerance);
}

TEST(Directions, LatticeSpreadsFully) {
  const auto& f = lattice_branching();
  auto dn = direction_numbers(f);
  for (int t = 0; t <= 2; ++t)
    for (int i = 0; i <= 2; ++i)
      for (int j = 0; j + t <= 2; ++j) {
        auto d = dn.dir(t, i, j);
        if (!d) continue;
        EXPECT_NEAR(*d, t / 2.0, f.tolerance);
      }
  auto rep = check_direction_inequalities(dn, f);
  EXPECT_LE(rep.max_violation(), f.tolerance);
}

TEST(Directions, SingleSlopeHasNoDirections) {
  auto X = gen_single_slope(4000, 0.25, 3);
  auto f = compute_branching(X, 3, 2);
  auto dn = direction_numbers(f);
  for (int t = 0; t <= 3; ++t)
    for (int i = 0; i <= 3; ++i)
      for (int j = 0; j <= 3; ++j)
        if (auto d = dn.dir(t, i, j)) {
          EXPECT_LE(std::abs(*d), f.tolerance);
        }
  auto scan = directional_stability_scan(dn, 1, 0.5, f.tolerance);
  EXPECT_TRUE(scan.unstable.empty());
  EXPECT_FALSE(scan.stable.empty());
}

TEST(Directions, LinearModelExactValues) {
  auto f = linear(4, 0.5, 1.5, 1.0);
  auto dn = direction_numbers(f);
  // d(t; x, y) = f(x, y+t, x+y) - f(x, y, x+y) = 1.5 t; d∨(t; x, y) = 0.5 t.
  EXPECT_NEAR(*dn.dir(2, 1, 1), 0.75, 1e-12);
  EXPECT_NEAR(*dn.dual(2, 1, 1), 0.25, 1e-12);
  EXPECT_FALSE(dn.dir(1, 0, 4).has_value());
}

TEST(Functionals, LinearE) {
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 1}, {1.7, 1.7}, {2, 0.5}}) {
    auto f = linear(6, a, b, 0);
    auto be = be_functionals(f);
    for (int s = 0; s <= 6; ++s)
      for (int x = 0; x + s <= 6; ++x) {
        auto e = be.e_at(s, x, 0);
        ASSERT_TRUE(e.has_value());
        EXPECT_NEAR(*e, (a + b - 3) / 2 * s / 6.0, 1e-12);
      }
  }
}

TEST(Functionals, BVanishesAtZero) {
  auto f = lattice_branching();
  auto be = be_functionals(f);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j)
      if (auto b = be.b_at(0, i, j)) {
        EXPECT_EQ(*b, 0.0);
      }
  auto g = BranchingFunction::from_function(5, 1, [](double x, double y, double z) { return std::sin(x) + y * y + z / 3; });
  auto bg = be_functionals(g);
  for (int i = 0; i <= 5; ++i)
    for (int j = 0; j <= 5; ++j)
      if (auto b = bg.b_at(0, i, j)) {
        EXPECT_NEAR(*b, 0.0, 1e-15);
      }
}

TEST(Functionals, MaxLawEOnTheDiagonal) {
  // f(s,0; x,x) = f(0,s; x,x) = 2s, so e(s; x,x) = s/2.
  auto f = BranchingFunction::from_function(8, 1, [](double x, double y, double) { return std::max(2 * x + y, x + 2 * y); });
  auto be = be_functionals(f);
  for (int x = 0; 2 * x <= 8; ++x)
    for (int s = 0; 2 * x + s <= 8; ++s) {
      auto e = be.e_at(s, x, x);
      ASSERT_TRUE(e.has_value());
      EXPECT_NEAR(*e, s / 16.0, 1e-12);
    }
}

TEST(Functionals, BFromDirectionsOnLattice) {
  const auto& f = lattice_branching();
  auto rep = check_b_from_directions(be_functionals(f), direction_numbers(f), f.tolerance);
  EXPECT_LE(rep.max_violation(), f.tolerance);
}

TEST(Effective, LinearAboveThreeIsEffective) {
  // f = 0.7x + 0.7y + z: on the sheet f = 1.7(x + y), b ≡ 0 and e(s) = 0.2 s.
  auto f = linear(6, 0.7, 0.7, 1.0);
  auto be = be_functionals(f);
  EXPECT_NEAR(*be.b_at(2, 1, 1), 0.0, 1e-12);
  auto search = find_effective_triple(be, 0.02, 1.0);
  ASSERT_TRUE(search.triple.has_value());
  EXPECT_TRUE(certify_effective(be, *search.triple));
  EXPECT_EQ(search.triple->t, 6);
  EXPECT_EQ(search.triple->x, 0);
  EXPECT_EQ(search.triple->y, 0);
  EXPECT_NEAR(search.triple->margin, 0.2 - 0.02, 1e-12);
  // Every candidate that the search would accept is re-verified over the whole s-range.
  for (int t = 1; t <= 6; ++t) {
    EffectiveTriple tr{t, 0, 0, 0.2 * t / 6 - 1e-9, 1.0, 0, 0, 0};
    EXPECT_TRUE(certify_effective(be, tr));
    tr.c1 = 0.2 * t / 6 + 1e-6;
    EXPECT_FALSE(certify_effective(be, tr));
  }
}

TEST(Effective, LinearBelowThreeIsNot) {
  auto f = linear(6, 0.5, 0.5, 1.0);
  auto search = find_effective_triple(be_functionals(f), 1e-9, 1.0);
  EXPECT_FALSE(search.triple.has_value());
  EXPECT_LT(search.best_margin, 0.0);
}

TEST(Effective, RespectsC2) {
  auto f = linear(6, 0.7, 0.7, 1.0);
  auto search = find_effective_triple(be_functionals(f), 0.0, 0.5);
  ASSERT_TRUE(search.triple.has_value());
  EXPECT_LE(search.triple->t, 3);
}

TEST(Stability, TelescopingFindsAStablePoint) {
  for (double rho : {0.25, 0.5, 1.0}) {
    auto f = BranchingFunction::from_function(8, 1, [](double x, double y, double z) { return std::max(2 * x + y, x + 2 * y) * 0.5 + z * 0.5; });
    auto scan = directional_stability_scan(direction_numbers(f), 1, rho, 0.0);
    EXPECT_TRUE(scan.telescoping_applicable);
    EXPECT_TRUE(scan.telescoping_ok);
  }
  const auto& g = lattice_branching();
  auto scan = directional_stability_scan(direction_numbers(g), 1, 0.5, g.tolerance);
  EXPECT_TRUE(scan.telescoping_ok);
  EXPECT_THROW(directional_stability_scan(direction_numbers(g), 0, 0.5, 0), std::invalid_argument);
}
