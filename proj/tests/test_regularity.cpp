#include <gtest/gtest.h>

#include <cmath>

#include "incidence_lab/constructions.hpp"
#include "incidence_lab/regularity.hpp"

using namespace inclab;

TEST(Hypergraph, BiregularIsKeptIntact) {
  Hypergraph H(2);
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = 0; b < 4; ++b) H.add({a, b});
  auto r = regularize_hypergraph(H);
  EXPECT_EQ(r.kept.size(), 16u);
  ASSERT_EQ(r.bands.size(), 2u);
  for (const auto& b : r.bands) {
    EXPECT_EQ(b.vertices, 4u);
    EXPECT_EQ(b.min_degree, 4u);
    EXPECT_EQ(b.max_degree, 4u);
    EXPECT_EQ(b.top, 4.0);
  }
  EXPECT_TRUE(r.bands_hold());
  EXPECT_TRUE(r.size_guarantee_holds());
}

TEST(Hypergraph, StarPlusMatchingOneClass) {
  // Hand run: degree 16 (one vertex, 16 edges) ties degree 1 (16 vertices, 16 edges); the tie goes to more vertices.
  Hypergraph H(1);
  for (int i = 0; i < 16; ++i) H.add({0});
  for (std::uint32_t i = 1; i <= 16; ++i) H.add({i});
  auto r = regularize_hypergraph(H);
  EXPECT_EQ(r.kept.size(), 16u);
  EXPECT_EQ(r.kept.front(), 16u);
  EXPECT_EQ(r.bands[0].min_degree, 1u);
  EXPECT_EQ(r.bands[0].max_degree, 1u);
  EXPECT_GE(2 * r.kept.size(), H.edges());
  EXPECT_TRUE(r.bands_hold());
}

TEST(Hypergraph, StarPlusMatchingTwoClasses) {
  Hypergraph H(2);
  for (std::uint32_t i = 0; i < 16; ++i) H.add({0, 100 + i});
  for (std::uint32_t i = 0; i < 16; ++i) H.add({1 + i, 200 + i});
  auto r = regularize_hypergraph(H);
  EXPECT_EQ(r.kept.size(), 16u);
  for (auto e : r.kept) EXPECT_GE(e, 16u);
  EXPECT_TRUE(r.bands_hold());
  EXPECT_TRUE(r.size_guarantee_holds());
}

TEST(Hypergraph, SingleTuple) {
  Hypergraph H(3);
  H.add({7, 8, 9});
  auto r = regularize_hypergraph(H);
  ASSERT_EQ(r.kept.size(), 1u);
  for (const auto& b : r.bands) {
    EXPECT_EQ(b.min_degree, 1u);
    EXPECT_EQ(b.max_degree, 1u);
  }
}

TEST(Hypergraph, RandomInstancesMeetGuarantees) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t t = 1 + rng.below(4);
    Hypergraph H(t);
    std::size_t E = 50 + rng.below(2000);
    std::vector<std::uint32_t> tuple(t);
    for (std::size_t e = 0; e < E; ++e) {
      for (auto& x : tuple) x = static_cast<std::uint32_t>(std::pow(rng.uniform01(), 3) * 200);
      H.add(tuple);
    }
    auto r = regularize_hypergraph(H);
    EXPECT_TRUE(r.bands_hold());
    EXPECT_TRUE(r.size_guarantee_holds());
  }
}

TEST(Hypergraph, Errors) {
  EXPECT_THROW(Hypergraph(0), std::invalid_argument);
  Hypergraph H(2);
  EXPECT_THROW(regularize_hypergraph(H), std::invalid_argument);
  EXPECT_THROW(H.add({1, 2, 3}), std::invalid_argument);
}

TEST(ScaleFamily, CountsAdmissibleTriples) {
  auto f = admissible_scale_family(2, 3);
  // Σ_{i,j} (min(2, i+j) + 1) over i, j ∈ {0,1,2}.
  std::size_t expected = 0;
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; j <= 2; ++j) expected += static_cast<std::size_t>(std::min(2, i + j) + 1);
  EXPECT_EQ(f.size(), expected);
  for (const auto& s : f) {
    EXPECT_TRUE(s.admissible());
    EXPECT_TRUE(s.dyadic());
  }
}

TEST(Certificate, InequalityVerifiedPerScale) {
  auto X = gen_uniform_random(1500, 3);
  std::vector<ScaleTriple> scales{{0.5, 0.25, 0.5}, {0.25, 0.125, 0.5}, {1, 1, 1}};
  auto cert = certify_uniformity(X, scales);
  ASSERT_EQ(cert.entries.size(), 3u);
  EXPECT_TRUE(cert.holds());
  for (const auto& e : cert.entries) {
    EXPECT_LE(static_cast<double>(e.concentration), cert.K * static_cast<double>(e.min_count) * (1 + 1e-12));
    EXPECT_EQ(e.concentration, concentration(X, e.scale));
  }
}

TEST(Uniformize, LatticePassesCertificate) {
  auto X = gen_lattice(dyadic(3));
  auto u = uniformize(X, 1, 3);
  EXPECT_TRUE(u.certificate.holds());
  EXPECT_TRUE(u.passes(X.size()));
  EXPECT_GE(u.output.size(), 1u);
  EXPECT_LE(u.certificate.K, 16.0);
  EXPECT_EQ(u.output.size(), u.kept_indices.size());
  for (std::size_t i = 0; i < u.output.size(); ++i) EXPECT_EQ(u.output[i], X[u.kept_indices[i]]);
}

TEST(Uniformize, ClusterPlusDust) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto X = gen_cluster_mix(3000, 2000, seed);
    auto u = uniformize(X, 3, 4);
    EXPECT_TRUE(u.certificate.holds());
    EXPECT_TRUE(u.passes(X.size()));
    EXPECT_FALSE(u.output.empty());
  }
}

TEST(Uniformize, Singleton) {
  Configuration X({{0.2, 0.3, -0.4}}, dyadic(20));
  auto u = uniformize(X, 3, 4);
  ASSERT_EQ(u.output.size(), 1u);
  EXPECT_EQ(u.certificate.K, 1.0);
  EXPECT_TRUE(u.passes(1));
}

TEST(Uniformize, OutputSatisfiesWeakUniformity) {
  for (auto [m, T] : std::vector<std::pair<int, int>>{{1, 3}, {2, 2}}) {
    auto X = gen_lattice(dyadic(m * T));
    auto u = uniformize(X, m, T);
    for (const auto& e : u.certificate.entries) EXPECT_LE(weak_uniformity_constant(u.output, e.scale), 8 * u.certificate.K);
  }
}

TEST(Uniformize, RejectsTooFineScaleList) {
  auto X = gen_uniform_random(10, 1);
  EXPECT_THROW(uniformize(X, 3, 7), std::invalid_argument);
  EXPECT_THROW(uniformize(X, 0, 2), std::invalid_argument);
}

TEST(WeakUniformity, LatticeClusterAndTwoClusters) {
  auto L = gen_lattice(dyadic(3));
  // M · N / |X| for the full lattice: the sheared b-tiles and the closed boundary keep it a small constant above 1.
  for (auto s : {ScaleTriple{0.125, 0.125, 0.125}, ScaleTriple{0.25, 0.125, 0.25}, ScaleTriple{0.5, 0.25, 0.5}}) {
    double W = weak_uniformity_constant(L, s);
    EXPECT_GE(W, 1.0);
    EXPECT_LE(W, 4.0);
  }
  std::vector<PhasePoint> one, two;
  Rng rng(7);
  for (int i = 0; i < 100; ++i) one.push_back({0.26 + rng.uniform(0, 0.1), 0.26 + rng.uniform(0, 0.1), 0.26 + rng.uniform(0, 0.1)});
  Configuration C1(one, dyadic(12));
  EXPECT_EQ(weak_uniformity_constant(C1, {0.5, 0.5, 0.5}), 1.0);
  for (int i = 0; i < 50; ++i) {
    two.push_back({-0.9 + rng.uniform(0, 0.01), -0.9 + rng.uniform(0, 0.01), -0.9 + rng.uniform(0, 0.01)});
    two.push_back({0.6 + rng.uniform(0, 0.01), 0.6 + rng.uniform(0, 0.01), 0.6 + rng.uniform(0, 0.01)});
  }
  Configuration C2(two, dyadic(12));
  // M = 50 and two occupied tiles: 50 · 2 / 100.
  EXPECT_EQ(weak_uniformity_constant(C2, {0.25, 0.25, 1}), 1.0);
}

TEST(KatzTao, WorkedExampleDeltaOneHundredth) {
  const double delta = 0.01;
  std::vector<double> P;
  for (int i = 0; i <= 100; ++i) P.push_back(i * delta);
  auto fr = check_frostman_1d(P, delta, 1, 2);
  EXPECT_TRUE(fr.ok);
  auto r = katz_tao_extract(P, delta, 1, 2);
  EXPECT_EQ(r.required, 9u);
  EXPECT_GE(r.points.size(), 9u);
  EXPECT_EQ(r.windows.violations, 0u);
  EXPECT_EQ(r.windows.dyadic_violations, 0u);
  // Independent window scan: every pair (i, j) of output points.
  for (std::size_t i = 0; i < r.points.size(); ++i)
    for (std::size_t j = i; j < r.points.size(); ++j) {
      double w = std::max(r.points[j] - r.points[i], delta);
      EXPECT_LE(static_cast<double>(j - i + 1), 4 * w / delta + 1e-9);
    }
}

TEST(KatzTao, DyadicGridAtTwoToMinusTen) {
  const double delta = dyadic(10);
  std::vector<double> P;
  for (int i = 0; i <= 1024; ++i) P.push_back(i * delta);
  auto r = katz_tao_extract(P, delta, 1, 2);
  EXPECT_GE(r.points.size(), static_cast<std::size_t>(std::ceil(1024.0 / 12)));
  EXPECT_EQ(r.windows.violations, 0u);
}

TEST(KatzTao, ZeroExponent) {
  std::vector<double> P{-0.5, 0.0, 0.5};
  auto r = katz_tao_extract(P, 0.25, 0, 2);
  EXPECT_EQ(r.required, 1u);
  EXPECT_GE(r.points.size(), 1u);
  EXPECT_EQ(r.windows.violations, 0u);
}

TEST(KatzTao, SetOfTheTargetSizeCannotBeFrostman) {
  // |P| = (1/6) C^{-1} δ^{-s} forces C δ^s |P| = 1/6 < 1, so a single point already breaks the Frostman bound.
  const double delta = dyadic(6);
  std::vector<double> P;
  for (int i = 0; i < 6; ++i) P.push_back(-1 + i * 0.4);
  EXPECT_THROW(katz_tao_extract(P, delta, 1, 64.0 / 36), std::invalid_argument);
}

TEST(KatzTao, Errors) {
  EXPECT_THROW(katz_tao_extract(std::vector<double>{0.0, 0.001}, 0.01, 1, 2), std::invalid_argument);
  std::vector<double> clumped;
  for (int i = 0; i < 10; ++i) clumped.push_back(i * 0.01);
  clumped.push_back(0.9);
  EXPECT_THROW(katz_tao_extract(clumped, 0.01, 1, 1), std::invalid_argument);
  EXPECT_THROW(katz_tao_extract(std::vector<double>{2.0}, 0.01, 0, 1), std::invalid_argument);
  EXPECT_THROW(katz_tao_extract(std::vector<double>{}, 0.01, 0, 1), std::invalid_argument);
}

TEST(Frostman, LatticeFullScaleWitness) {
  auto X = gen_lattice(dyadic(3));
  auto r = check_frostman(X, 1.5, 1.5);
  EXPECT_NEAR(r.C, 1.0, 1e-12);
  EXPECT_EQ(r.witness.scale, (ScaleTriple{1, 1, 1}));
  for (const auto& e : r.entries) EXPECT_LE(e.ratio, r.C);
}

TEST(Frostman, MassInsideOneRectangle) {
  // An 8 x 8 x 8 grid filling R_{u0 × u0w0 × w0}(0) with u0 = w0 = 1/4.
  const double u0 = 0.25, w0 = 0.25;
  std::vector<PhasePoint> pts;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k) {
        double t = u0 * (-0.875 + 0.25 * i), r = u0 * w0 * (-0.875 + 0.25 * j), c = w0 * (-0.875 + 0.25 * k);
        pts.push_back({t, r, c});
      }
  Configuration X(pts, dyadic(10));
  auto rep = check_frostman(X, 1, 1);
  EXPECT_NEAR(rep.C, 1 / (u0 * w0), 1e-9);
  EXPECT_EQ(rep.witness.scale, (ScaleTriple{u0, u0 * w0, w0}));
  std::size_t inside = 0;
  for (const auto& p : X.points()) inside += rep.witness.contains(p);
  EXPECT_EQ(inside, X.size());
  EXPECT_EQ(best_rectangle(X, 1, 1).scale, rep.witness.scale);
}

TEST(Frostman, GridSlopeFieldBoundedOnTheLineAlphaPlusBetaThree) {
  auto X = gen_grid_slope_field(dyadic(6));
  for (auto [a, b] : std::vector<std::pair<double, double>>{{1, 2}, {1.5, 1.5}, {2, 1}}) {
    auto r = check_frostman(X, a, b);
    EXPECT_LE(r.C, 4.0) << a << "," << b;
    EXPECT_GE(r.C, 1.0);
  }
}

TEST(Frostman, RejectsNonBlowupScales) {
  auto X = gen_uniform_random(10, 1);
  std::vector<ScaleTriple> bad{{0.5, 0.5, 0.5}};
  EXPECT_THROW(check_frostman(X, 1, 1, bad), std::invalid_argument);
  EXPECT_THROW(check_frostman(X, 0, 1), std::invalid_argument);
}
