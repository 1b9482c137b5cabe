#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "incidence_lab/config_io.hpp"
#include "incidence_lab/constructions.hpp"
#include "incidence_lab/phase_space.hpp"

using namespace inclab;

namespace {

PhasePoint random_point(Rng& rng) { return {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}; }

ScaleTriple random_admissible(Rng& rng) {
  double u = rng.uniform(0.01, 1), w = rng.uniform(0.01, 1);
  return {u, rng.uniform(u * w, 1), w};
}

/// The directed distance written out term by term.
double d_oracle(double a0, double b0, double c0, double a1, double b1, double c1, double u, double v, double w) {
  double x = std::abs(a1 - a0) / u;
  double y = std::abs(b1 - b0 - c0 * (a1 - a0)) / v;
  double z = std::abs(c1 - c0) / w;
  return std::max(x, std::max(y, z));
}

/// Brute-force M over every half-side lattice center near [-1,1]^3.
std::size_t brute_concentration(const Configuration& X, const ScaleTriple& s) {
  std::size_t best = 0;
  for (double a = -1 - s.u; a <= 1 + s.u + 1e-12; a += s.u / 2)
    for (double c = -1 - s.w; c <= 1 + s.w + 1e-12; c += s.w / 2)
      for (double b = -2 - s.v - 2 * s.u; b <= 2 + s.v + 2 * s.u + 1e-12; b += s.v / 2) {
        std::size_t n = 0;
        for (const auto& p : X.points()) n += d_oracle(a, b, c, p.a, p.b, p.c, s.u, s.v, s.w) <= 1;
        best = std::max(best, n);
      }
  return best;
}

}  // namespace

TEST(DirectedDistance, WorkedExampleGivesOne) {
  // The published triple 1/4 x 1/8 x 1 has v < uw, so the checked entry point rejects it.
  EXPECT_THROW(directed_distance({0, 0, 0.5}, {0.25, 0.125, 0.5}, {0.25, 0.125, 1}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(d_oracle(0, 0, 0.5, 0.25, 0.125, 0.5, 0.25, 0.125, 1), 1.0);
  // The b-term vanishes, so raising v to the admissible 1/4 keeps the value.
  EXPECT_DOUBLE_EQ(directed_distance({0, 0, 0.5}, {0.25, 0.125, 0.5}, {0.25, 0.25, 1}), 1.0);
}

TEST(DirectedDistance, IdentityIsZero) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto p = random_point(rng);
    EXPECT_EQ(directed_distance(p, p, random_admissible(rng)), 0.0);
  }
}

TEST(DirectedDistance, AsymmetryExampleWithinSquare) {
  PhasePoint w0{0, 0, 0}, w1{0.1, 0.02, 0.3};
  ScaleTriple s{1, 1, 1};
  double d01 = directed_distance(w0, w1, s), d10 = directed_distance(w1, w0, s);
  // d01 = max(0.1, 0.02, 0.3); d10 = max(0.1, |0 - (0.02 - 0.03)|, 0.3).
  EXPECT_DOUBLE_EQ(d01, 0.3);
  EXPECT_DOUBLE_EQ(d10, 0.3);
  EXPECT_LE(std::abs(d01 - d10), d01 * d01);
}

TEST(DirectedDistance, MatchesTermwiseOracle) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    auto p = random_point(rng), q = random_point(rng);
    auto s = random_admissible(rng);
    double oracle = d_oracle(p.a, p.b, p.c, q.a, q.b, q.c, s.u, s.v, s.w);
    EXPECT_NEAR(directed_distance(p, q, s), oracle, 1e-14 * oracle);
  }
}

TEST(DirectedDistance, RejectsInadmissibleScale) {
  EXPECT_THROW(directed_distance({}, {}, {0.5, 0.1, 0.5}), std::invalid_argument);
  EXPECT_THROW(directed_distance({}, {}, {0, 1, 1}), std::invalid_argument);
}

TEST(DirectedDistance, UnboundedSlotsDropTerms) {
  PhasePoint p{0, 0, 0}, q{0.9, 0.25, -0.8};
  EXPECT_DOUBLE_EQ(directed_distance(p, q, {kUnbounded, 1, kUnbounded}), 0.25);
  EXPECT_DOUBLE_EQ(directed_distance(p, q, {kUnbounded, kUnbounded, 1}), 0.8);
}

TEST(MetricLaws, ApproximateTransitivityAndSymmetry) {
  Rng rng(11);
  for (int i = 0; i < 20000; ++i) {
    auto s = random_admissible(rng);
    auto p0 = random_point(rng), p1 = random_point(rng), p2 = random_point(rng);
    double d01 = directed_distance(p0, p1, s), d12 = directed_distance(p1, p2, s), d02 = directed_distance(p0, p2, s);
    double d10 = directed_distance(p1, p0, s);
    EXPECT_LE(d02, (d01 + d12 + d01 * d12) * (1 + 1e-12));
    EXPECT_LE(std::abs(d01 - d10), d01 * d01 * (1 + 1e-12) + 1e-12);
  }
}

TEST(MetricLaws, Homogeneity) {
  Rng rng(13);
  for (int i = 0; i < 5000; ++i) {
    auto s = random_admissible(rng);
    auto w = random_point(rng), dw = random_point(rng);
    double lambda = rng.uniform(-3, 3);
    PhasePoint a{w.a + dw.a, w.b + dw.b, w.c + dw.c}, b{w.a + lambda * dw.a, w.b + lambda * dw.b, w.c + lambda * dw.c};
    double base = directed_distance(w, a, s);
    EXPECT_NEAR(directed_distance(w, b, s), std::abs(lambda) * base, 1e-12 * std::max(1.0, std::abs(lambda) * base));
  }
}

TEST(MetricLaws, PointMetricComparisonUsesSqrtFive) {
  Rng rng(17);
  for (int i = 0; i < 20000; ++i) {
    double u = dyadic(static_cast<int>(rng.below(8)));
    auto p0 = random_point(rng), p1 = random_point(rng);
    double d = distance(p0.point(), p1.point());
    double D = directed_distance(p0, p1, {u, u, 1});
    EXPECT_LE(d / (std::sqrt(5.0) * u), D * (1 + 1e-12));
    EXPECT_LE(D, 2 * d / u + 2 + 1e-12);
  }
  // The factor 1/(2u) is too strong: Δa = 1, Δb = 2, c0 = 1 gives d = √5 while D = 1/u.
  const double u = 1;
  PhasePoint a{-0.5, -1, 1}, b{0.5, 1, 1};
  double D = directed_distance(a, b, {u, u, 1});
  EXPECT_DOUBLE_EQ(D, 1.0);
  EXPECT_GT(distance(a.point(), b.point()) / (2 * u), D);
}

TEST(Rect, ContainsCenterAndRejectsOutside) {
  PhaseRect R{{0.1, 0.2, 0.3}, {0.25, 0.125, 0.5}, false};
  EXPECT_TRUE(rect_contains(R, R.center));
  EXPECT_FALSE(rect_contains(R, {0.1 + 0.25 + 1e-9, 0.2 + 0.3 * (0.25 + 1e-9), 0.3}));
  EXPECT_FALSE(rect_contains(R, {0.1, 0.2, 0.3 + 0.5 + 1e-9}));
  EXPECT_FALSE(rect_contains(R, {0.1, 0.2 + 0.125 + 1e-9, 0.3}));
  EXPECT_TRUE(rect_contains(R, {0.1, 0.2 + 0.125, 0.3}));
  EXPECT_TRUE(dilated_contains(R, 2, {0.1 + 0.5, 0.2 + 0.3 * 0.5, 0.3}));
  EXPECT_FALSE(rect_contains(R, {0.1 + 0.5, 0.2 + 0.3 * 0.5, 0.3}));
  EXPECT_THROW(dilated_contains(R, 0.5, R.center), std::invalid_argument);
}

TEST(Rect, ExplicitParametrizationIsInside) {
  Rng rng(19);
  for (int i = 0; i < 10000; ++i) {
    auto s = random_admissible(rng);
    PhasePoint o = random_point(rng);
    double t = rng.uniform(-s.u, s.u), r = rng.uniform(-s.v, s.v), q = rng.uniform(-s.w, s.w);
    PhaseRect R{o, s, false};
    EXPECT_TRUE(rect_contains(R, {o.a + t, o.b + o.c * t + r, o.c + q}));
  }
}

TEST(DyadicCover, AssignedRectangleContainsPointAndIsOnLattice) {
  auto X = gen_uniform_random(3000, 23);
  for (auto s : {ScaleTriple{0.25, 0.125, 0.5}, ScaleTriple{0.125, dyadic(6), 0.125}, ScaleTriple{1, 1, 1}, ScaleTriple{dyadic(5), dyadic(5), 1}}) {
    auto rects = dyadic_cover_assign(X, s);
    ASSERT_EQ(rects.size(), X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
      EXPECT_TRUE(rect_contains(rects[i], X[i]));
      EXPECT_TRUE(rects[i].dyadic);
      EXPECT_TRUE(on_dyadic_lattice(rects[i].center, s));
    }
  }
}

TEST(DyadicCover, LatticeCenterMapsToItself) {
  ScaleTriple s{0.25, 0.125, 0.5};
  PhasePoint center{-1 + 0.25 * 3, -1 + 0.125 * 5, -1 + 0.5 * 1};
  Configuration X({center}, dyadic(10));
  auto rects = dyadic_cover_assign(X, s);
  EXPECT_EQ(rects[0].center, center);
}

TEST(DyadicCover, OverlapCounts) {
  Rng rng(29);
  ScaleTriple s{0.25, 0.125, 0.5};
  for (int i = 0; i < 2000; ++i) EXPECT_LE(lattice_multiplicity(random_point(rng), s, 1), 125.0L);
  for (int i = 0; i < 4; ++i) EXPECT_LE(lattice_multiplicity(random_point(rng), s, kLatticeExponent), std::ldexp(1.0L, 50));
}

TEST(Covering, SingletonAndEmpty) {
  Configuration one({{0.3, -0.2, 0.1}}, dyadic(10));
  ScaleTriple s{0.25, 0.125, 0.5};
  EXPECT_EQ(covering_number(one, s), 1u);
  EXPECT_EQ(concentration(one, s), 1u);
  Configuration none({}, dyadic(10));
  EXPECT_EQ(covering_number(none, s), 0u);
  EXPECT_EQ(concentration(none, s), 0u);
}

TEST(Covering, PlanarLatticeMatchesOccupiedSquares) {
  auto X = gen_lattice(dyadic(6), true);
  for (int k = 1; k <= 5; ++k) {
    double w = dyadic(k);
    std::set<std::pair<long, long>> squares;
    for (const auto& p : X.points()) squares.insert({std::lround(std::floor((p.a + 1) / w)), std::lround(std::floor((p.b + 1) / w))});
    double cover = static_cast<double>(covering_number(X, {w, w, 1}));
    double direct = static_cast<double>(squares.size());
    EXPECT_LE(cover, 8 * direct);
    EXPECT_LE(direct, 8 * cover);
    EXPECT_LE(cover, 8 / (w * w));
    EXPECT_GE(cover, 1 / (8 * w * w));
  }
}

TEST(Covering, MonotoneInScale) {
  auto pts = gen_uniform_random(4000, 31).points();
  Configuration X({pts.begin(), pts.end()}, dyadic(12));
  Rng rng(37);
  for (int i = 0; i < 200; ++i) {
    int iu = static_cast<int>(rng.below(6)), iw = static_cast<int>(rng.below(6));
    int iv = static_cast<int>(rng.below(static_cast<std::uint64_t>(iu + iw + 1)));
    ScaleTriple big{dyadic(iu), dyadic(iv), dyadic(iw)};
    ScaleTriple small{dyadic(iu + static_cast<int>(rng.below(2))), dyadic(iv + static_cast<int>(rng.below(2))), dyadic(iw + static_cast<int>(rng.below(2)))};
    if (!small.admissible()) continue;
    EXPECT_GE(covering_number(X, small), covering_number(X, big));
  }
}

TEST(Covering, RejectsScalesBelowDelta) {
  auto X = gen_lattice(dyadic(4));
  EXPECT_THROW(covering_number(X, {dyadic(5), dyadic(5), 1}), std::invalid_argument);
  EXPECT_THROW(covering_number(X, {0.3, 0.3, 1}), std::invalid_argument);
}

TEST(Concentration, MatchesBruteForceScan) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto X = gen_cluster_mix(40, 20, seed);
    for (auto s : {ScaleTriple{0.25, 0.125, 0.5}, ScaleTriple{0.5, 0.25, 0.5}, ScaleTriple{0.25, 0.25, 1}}) {
      EXPECT_EQ(concentration(X, s), brute_concentration(X, s)) << "seed " << seed << " scale " << s.to_string();
    }
  }
}

TEST(Concentration, WitnessContainsThatManyPoints) {
  auto X = gen_uniform_random(2000, 41);
  ScaleTriple s{0.125, dyadic(5), 0.25};
  auto c = concentration_witness(X, s);
  std::size_t n = 0;
  for (const auto& p : X.points()) n += c.witness.contains(p);
  EXPECT_EQ(n, c.count);
  EXPECT_TRUE(on_dyadic_lattice(c.witness.center, s));
}

TEST(Rescale, OriginHalfScaleFormula) {
  PhaseRect R{{0, 0, 0}, {0.5, 0.25, 0.5}, false};
  Configuration X({{0.1, 0.02, 0.1}, {0.2, 0.05, 0.3}, {0.9, 0.9, 0.9}}, dyadic(10));
  auto Y = rescale(R, X);
  ASSERT_EQ(Y.size(), 2u);
  EXPECT_DOUBLE_EQ(Y[0].a, 0.2);
  EXPECT_DOUBLE_EQ(Y[0].b, 0.08);
  EXPECT_DOUBLE_EQ(Y[0].c, 0.2);
  EXPECT_DOUBLE_EQ(Y[1].a, 0.4);
  EXPECT_DOUBLE_EQ(Y[1].b, 0.2);
  EXPECT_DOUBLE_EQ(Y[1].c, 0.6);
  EXPECT_DOUBLE_EQ(Y.delta(), dyadic(8));
}

TEST(Rescale, IsometryOnWorkedPair) {
  PhasePoint w1{0.1, 0.02, 0.1}, w2{0.2, 0.05, 0.3};
  auto psi = [](const PhasePoint& p) { return PhasePoint{2 * p.a, 4 * p.b, 2 * p.c}; };
  for (auto s : {ScaleTriple{1, 1, 1}, ScaleTriple{0.5, 0.25, 0.5}, ScaleTriple{0.3, 0.2, 0.6}}) {
    double lhs = directed_distance(psi(w1), psi(w2), s);
    double rhs = directed_distance(w1, w2, {s.u * 0.5, s.v * 0.25, s.w * 0.5});
    EXPECT_NEAR(lhs, rhs, 1e-10);
  }
}

TEST(Rescale, IsometryOnRandomRectangles) {
  Rng rng(43);
  for (int i = 0; i < 2000; ++i) {
    double u0 = rng.uniform(0.05, 1), w0 = rng.uniform(0.05, 1);
    PhaseRect R{random_point(rng), {u0, u0 * w0, w0}, false};
    std::vector<PhasePoint> pts;
    for (int k = 0; k < 2; ++k) {
      double t = rng.uniform(-u0, u0), r = rng.uniform(-u0 * w0, u0 * w0), q = rng.uniform(-w0, w0);
      pts.push_back({R.center.a + t, R.center.b + R.center.c * t + r, R.center.c + q});
    }
    auto Y = rescale(R, Configuration(pts, 1));
    ASSERT_EQ(Y.size(), 2u);
    auto s = random_admissible(rng);
    EXPECT_NEAR(directed_distance(Y[0], Y[1], s), directed_distance(pts[0], pts[1], {s.u * u0, s.v * u0 * w0, s.w * w0}), 1e-10);
  }
}

TEST(Rescale, EmptyAndInvalid) {
  PhaseRect R{{0.5, 0.5, 0.5}, {0.125, dyadic(4), 0.5}, false};
  Configuration X({{-0.9, -0.9, -0.9}}, dyadic(10));
  EXPECT_TRUE(rescale(R, X).empty());
  PhaseRect bad{{0, 0, 0}, {0.5, 0.5, 0.5}, false};
  EXPECT_THROW(rescale(bad, X), std::invalid_argument);
}

TEST(SeparatedNet, SeparatedInputUnchanged) {
  auto X = gen_lattice(dyadic(2), true);
  ScaleTriple s{0.125, 0.125, 1};
  auto net = separated_net(X, s, 1);
  EXPECT_EQ(net.size(), X.size());
}

TEST(SeparatedNet, CoincidentPointsCollapse) {
  Configuration X({{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}}, dyadic(10));
  EXPECT_EQ(separated_net(X, {0.25, 0.125, 0.5}, 1).size(), 1u);
}

TEST(SeparatedNet, SeparatedMaximalAndComparableToCover) {
  auto X = gen_lattice(dyadic(4));
  ScaleTriple s{0.25, 0.125, 0.25};
  for (double lambda : {1.0, 2.0}) {
    auto net = separated_net(X, s, lambda);
    for (std::size_t i = 0; i < net.size(); ++i)
      for (std::size_t j = i + 1; j < net.size(); ++j) {
        EXPECT_GE(directed_distance(X[net[i]], X[net[j]], s), lambda);
        EXPECT_GE(directed_distance(X[net[j]], X[net[i]], s), lambda);
      }
    std::vector<char> in(X.size(), 0);
    for (auto i : net) in[i] = 1;
    for (std::size_t i = 0; i < X.size(); i += 7) {
      if (in[i]) continue;
      bool near = false;
      for (auto j : net) near = near || directed_distance(X[j], X[i], s) < lambda || directed_distance(X[i], X[j], s) < lambda;
      EXPECT_TRUE(near);
    }
    if (lambda == 1.0) {
      double cover = static_cast<double>(covering_number(X, s));
      EXPECT_LE(static_cast<double>(net.size()), 64 * cover);
      EXPECT_LE(cover, 64 * static_cast<double>(net.size()));
    }
  }
}

TEST(ConfigurationIO, TextRoundTrip) {
  auto X = gen_uniform_random(50, 47);
  std::stringstream ss;
  write_configuration(ss, X);
  auto Y = read_configuration(ss);
  ASSERT_EQ(Y.size(), X.size());
  EXPECT_EQ(Y.delta(), X.delta());
  EXPECT_EQ(Y.provenance(), X.provenance());
  for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(Y[i], X[i]);
  std::stringstream bad("0.1 0.2 0.3\n");
  EXPECT_THROW(read_configuration(bad), std::invalid_argument);
}

TEST(Scales, ParseAndFormatDyadicLiterals) {
  EXPECT_EQ(parse_scale("2^-10"), dyadic(10));
  EXPECT_EQ(parse_scale("0.25"), 0.25);
  EXPECT_EQ(format_scale(dyadic(12)), "2^-12");
  EXPECT_EQ(parse_scale(format_scale(dyadic(37))), dyadic(37));
  EXPECT_THROW(parse_scale("2^x"), std::invalid_argument);
}
