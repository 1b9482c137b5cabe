#include <gtest/gtest.h>

#include <cmath>

#include "incidence_lab/constructions.hpp"
#include "incidence_lab/heilbronn.hpp"

using namespace inclab;

namespace {

double brute_min_area(const std::vector<Point2>& P) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < P.size(); ++i)
    for (std::size_t j = i + 1; j < P.size(); ++j)
      for (std::size_t k = j + 1; k < P.size(); ++k)
        best = std::min(best, 0.5 * std::abs((P[j].x - P[i].x) * (P[k].y - P[i].y) - (P[k].x - P[i].x) * (P[j].y - P[i].y)));
  return best;
}

}  // namespace

TEST(Geometry, TriangleAndHullArea) {
  EXPECT_DOUBLE_EQ(triangle_area({0, 0}, {1, 0}, {0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(triangle_area({0, 0}, {1, 1}, {2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(hull_area({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}}), 1.0);
  auto l = Line2::through({0, 0}, {1, 1});
  EXPECT_NEAR(l.distance({1, 0}), std::sqrt(0.5), 1e-15);
}

TEST(Pairing, FourCornersGiveOnePair) {
  std::vector<Point2> P{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  auto r = greedy_pairing(P);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_DOUBLE_EQ(r.max_distance, 1.0);
  EXPECT_EQ(r.leftovers.size(), 2u);
}

TEST(Pairing, RandomHundredMeetsDistanceBound) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto P = uniform_unit_square(100, seed);
    auto r = greedy_pairing(P);
    ASSERT_EQ(r.pairs.size(), 25u);
    EXPECT_DOUBLE_EQ(r.bound(), 1.0);
    EXPECT_LE(r.max_distance, 1.0);
    std::vector<int> seen(100, 0);
    for (auto [i, j] : r.pairs) {
      EXPECT_LE(distance(P[i], P[j]), r.max_distance);
      ++seen[i];
      ++seen[j];
    }
    for (auto i : r.leftovers) ++seen[i];
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Pairing, LargerSetsStayUnderBound) {
  for (std::size_t n : {256u, 1000u, 4096u}) {
    auto P = uniform_unit_square(n, n);
    auto r = greedy_pairing(P);
    EXPECT_EQ(r.pairs.size(), n / 4);
    EXPECT_LE(r.max_distance, r.bound());
  }
}

TEST(CrossIncidence, FastEqualsNaive) {
  for (std::size_t n : {4u, 10u, 64u, 500u, 2000u}) {
    auto P = uniform_unit_square(n, 77 + n);
    auto pairing = greedy_pairing(P);
    std::vector<std::size_t> owner(n, pairing.pairs.size());
    for (std::size_t k = 0; k < pairing.pairs.size(); ++k) owner[pairing.pairs[k].first] = owner[pairing.pairs[k].second] = k;
    auto fast = nearest_cross_incidence(P, owner, pairing.lines);
    auto slow = nearest_cross_incidence_naive(P, owner, pairing.lines);
    EXPECT_EQ(fast.point, slow.point);
    EXPECT_EQ(fast.line, slow.line);
    EXPECT_DOUBLE_EQ(fast.distance, slow.distance);
  }
}

TEST(CrossIncidence, PointLinePairs) {
  std::vector<Point2> P{{0, 0}, {0, 1}, {3, 0.25}};
  std::vector<Line2> L{Line2::through({0, 0}, {1, 0}), Line2::through({0, 1}, {1, 1}), Line2::through({3, 0}, {3, 1})};
  auto hit = nearest_cross_incidence(P, L);
  EXPECT_EQ(hit.line, 0u);
  EXPECT_EQ(hit.point, 2u);
  EXPECT_DOUBLE_EQ(hit.distance, 0.25);
  EXPECT_THROW(nearest_cross_incidence(std::vector<Point2>{{0, 0}}, std::vector<Line2>{L[0]}), std::invalid_argument);
}

TEST(Pipeline, FourCorners) {
  std::vector<Point2> P{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  auto t = small_triangle_pipeline(P);
  EXPECT_DOUBLE_EQ(t.area, 0.5);
  EXPECT_DOUBLE_EQ(t.recompute(P), 0.5);
  EXPECT_DOUBLE_EQ(t.base, 1.0);
  EXPECT_DOUBLE_EQ(t.dist, 1.0);
  EXPECT_DOUBLE_EQ(brute_force_min_triangle(P, 3).area, 0.5);
  EXPECT_DOUBLE_EQ(brute_force_min_triangle(P, 4).area, 1.0);
}

TEST(Pipeline, CollinearGivesZero) {
  std::vector<Point2> P;
  for (int i = 0; i < 40; ++i) P.push_back({i / 39.0, 0.5});
  EXPECT_EQ(small_triangle_pipeline(P).area, 0.0);
  EXPECT_EQ(brute_force_min_triangle(P).area, 0.0);
}

TEST(Pipeline, AreaIsHalfBaseTimesDistance) {
  auto P = uniform_unit_square(1000, 3);
  auto t = small_triangle_pipeline(P);
  ASSERT_EQ(t.indices.size(), 3u);
  EXPECT_NEAR(t.area, 0.5 * t.base * t.dist, 1e-12);
  EXPECT_DOUBLE_EQ(t.area, t.recompute(P));
}

TEST(Pipeline, NeverBelowBruteForce) {
  for (std::size_t n : {8u, 32u, 100u, 256u}) {
    auto P = uniform_unit_square(n, 1000 + n);
    auto b = brute_force_min_triangle(P);
    EXPECT_GE(small_triangle_pipeline(P).area, b.area);
    EXPECT_DOUBLE_EQ(b.area, brute_min_area(P));
    EXPECT_DOUBLE_EQ(b.recompute(P), b.area);
  }
}

TEST(BruteForce, WorkersAgreeAndKGons) {
  auto P = uniform_unit_square(120, 8);
  auto a = brute_force_min_triangle(P, 3, 1), b = brute_force_min_triangle(P, 3, 3);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.area, b.area);
  auto Q = uniform_unit_square(20, 9);
  auto k4 = brute_force_min_triangle(Q, 4), k5 = brute_force_min_triangle(Q, 5);
  EXPECT_GE(k4.area, brute_force_min_triangle(Q, 3).area);
  EXPECT_GE(k5.area, k4.area);
  EXPECT_DOUBLE_EQ(k4.recompute(Q), k4.area);
}

TEST(BruteForce, Errors) {
  auto P = uniform_unit_square(401, 1);
  EXPECT_THROW(brute_force_min_triangle(P), std::invalid_argument);
  EXPECT_THROW(brute_force_min_triangle(uniform_unit_square(61, 1), 4), std::invalid_argument);
  EXPECT_THROW(brute_force_min_triangle(uniform_unit_square(2, 1)), std::invalid_argument);
  EXPECT_THROW(brute_force_min_triangle(uniform_unit_square(10, 1), 2), std::invalid_argument);
  EXPECT_THROW(small_triangle_pipeline(uniform_unit_square(3, 1)), std::invalid_argument);
}

TEST(Sweep, RandomSlopeAndGridDegenerate) {
  std::vector<std::size_t> ns{64, 128, 256, 512};
  auto r = exponent_sweep("uniform_random", ns, 5, 11, 128);
  EXPECT_FALSE(r.degenerate);
  EXPECT_LT(r.slope, -0.5);
  EXPECT_TRUE(r.pipeline_above_brute);
  EXPECT_LE(r.max_pair_ratio, 1.0);
  EXPECT_EQ(r.medians.size(), 4u);
  EXPECT_EQ(r.brute_medians.size(), 2u);
  auto g = exponent_sweep("grid", ns, 1, 11);
  EXPECT_TRUE(g.degenerate);
  EXPECT_TRUE(std::isnan(g.slope));
  EXPECT_THROW(exponent_sweep("uniform_random", std::vector<std::size_t>{64, 128}, 1, 1), std::invalid_argument);
  EXPECT_THROW(heilbronn_points("spiral", 10, 1), std::invalid_argument);
}

TEST(Sweep, DeterministicAcrossWorkers) {
  std::vector<std::size_t> ns{64, 128, 256};
  EXPECT_EQ(exponent_sweep("uniform_random", ns, 3, 5, 64, 1).to_csv(), exponent_sweep("uniform_random", ns, 3, 5, 64, 3).to_csv());
}
