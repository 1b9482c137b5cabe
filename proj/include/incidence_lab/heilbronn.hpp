#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "incidence_lab/common.hpp"
#include "incidence_lab/constructions.hpp"

namespace inclab {

/// Line {p : n·p = h} with unit normal n.
struct Line2 {
  double nx = 0, ny = 1, h = 0;

  static Line2 through(const Point2& p, const Point2& q) {
    double dx = q.x - p.x, dy = q.y - p.y;
    double len = std::hypot(dx, dy);
    if (!(len > 0)) throw std::invalid_argument("line through two equal points");
    Line2 l{-dy / len, dx / len, 0};
    l.h = l.nx * p.x + l.ny * p.y;
    return l;
  }
  double distance(const Point2& p) const { return std::abs(nx * p.x + ny * p.y - h); }
};

/// 2 · signed area of (p, q, r).
inline double det3(const Point2& p, const Point2& q, const Point2& r) { return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x); }

inline double triangle_area(const Point2& p, const Point2& q, const Point2& r) { return 0.5 * std::abs(det3(p, q, r)); }

/// Area of the convex hull (monotone chain).
inline double hull_area(std::vector<Point2> pts) {
  if (pts.size() < 3) return 0;
  std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && det3(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && det3(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  double twice = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    twice += a.x * b.y - a.y * b.x;
  }
  return 0.5 * std::abs(twice);
}

// ---------------------------------------------------------------------------
// Pairing.

struct PairingResult {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<Line2> lines;  ///< ℓ_j through pair j
  std::vector<std::size_t> leftovers;
  double max_distance = 0;
  double bound() const { return 10 / std::sqrt(static_cast<double>(n)); }
};

/// Greedy pigeonhole pairing: while fewer than ⌊n/4⌋ pairs, bin the remaining n_r points into a g x g grid,
/// g = ⌈√n_r / 5⌉, and pair the closest two points of the first cell holding two.
inline PairingResult greedy_pairing(std::span<const Point2> P) {
  const std::size_t n = P.size();
  if (n < 4) throw std::invalid_argument("greedy_pairing needs at least 4 points");
  for (const auto& p : P)
    if (!(p.x >= 0 && p.x <= 1 && p.y >= 0 && p.y <= 1)) throw std::invalid_argument("greedy_pairing needs points in [0,1]^2");
  PairingResult out;
  out.n = n;
  std::vector<char> used(n, 0);
  std::vector<std::size_t> rem(n);
  std::iota(rem.begin(), rem.end(), 0);
  std::vector<std::vector<std::size_t>> cells;
  while (out.pairs.size() < n / 4) {
    auto g = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(rem.size())) / 5));
    g = std::max<std::size_t>(g, 1);
    cells.assign(g * g, {});
    auto cell_of = [&](double x) { return std::min(g - 1, static_cast<std::size_t>(x * static_cast<double>(g))); };
    for (auto i : rem) cells[cell_of(P[i].y) * g + cell_of(P[i].x)].push_back(i);
    auto it = std::find_if(cells.begin(), cells.end(), [](const auto& c) { return c.size() >= 2; });
    if (it == cells.end()) throw std::logic_error("pigeonhole failed");  // g^2 < n_r always leaves a shared cell
    const auto& c = *it;
    std::size_t bi = c[0], bj = c[1];
    double best = distance(P[bi], P[bj]);
    for (std::size_t x = 0; x < c.size(); ++x)
      for (std::size_t y = x + 1; y < c.size(); ++y) {
        double d = distance(P[c[x]], P[c[y]]);
        if (d < best) {
          best = d;
          bi = c[x];
          bj = c[y];
        }
      }
    if (bi > bj) std::swap(bi, bj);
    out.pairs.emplace_back(bi, bj);
    out.lines.push_back(Line2::through(P[bi], P[bj]));
    out.max_distance = std::max(out.max_distance, best);
    used[bi] = used[bj] = 1;
    std::erase_if(rem, [&](std::size_t i) { return used[i] != 0; });
  }
  out.leftovers = rem;
  return out;
}

// ---------------------------------------------------------------------------
// Nearest cross incidence.

struct CrossIncidence {
  std::size_t point = 0;  ///< index into the point list
  std::size_t line = 0;   ///< index into the line list
  double distance = std::numeric_limits<double>::infinity();
};

namespace detail {

inline bool better(const CrossIncidence& a, const CrossIncidence& b) {
  return std::tie(a.distance, a.line, a.point) < std::tie(b.distance, b.line, b.point);
}

}  // namespace detail

/// Exhaustive min of d(points[j], lines[k]) over owner[j] != k.
inline CrossIncidence nearest_cross_incidence_naive(std::span<const Point2> points, std::span<const std::size_t> owner, std::span<const Line2> lines) {
  CrossIncidence best;
  for (std::size_t k = 0; k < lines.size(); ++k)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (owner[j] != k) {
        CrossIncidence c{j, k, lines[k].distance(points[j])};
        if (detail::better(c, best)) best = c;
      }
  return best;
}

/// Same result as the exhaustive loop; points are bucketed in a grid and each line scans a tube of growing radius.
inline CrossIncidence nearest_cross_incidence(std::span<const Point2> points, std::span<const std::size_t> owner, std::span<const Line2> lines) {
  if (points.size() != owner.size()) throw std::invalid_argument("owner list must match the point list");
  bool any = false;
  for (std::size_t j = 0; j < points.size() && !any; ++j) any = lines.size() > 1 || (lines.size() == 1 && owner[j] != 0);
  if (!any) throw std::invalid_argument("nearest_cross_incidence needs a point and a line it does not own");
  double x0 = points[0].x, x1 = x0, y0 = points[0].y, y1 = y0;
  for (const auto& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const auto G = static_cast<std::size_t>(std::max(1.0, std::ceil(std::sqrt(static_cast<double>(points.size())))));
  const double wx = std::max(x1 - x0, 1e-300) / static_cast<double>(G), wy = std::max(y1 - y0, 1e-300) / static_cast<double>(G);
  std::vector<std::vector<std::size_t>> grid(G * G);
  auto col = [&](double x) { return static_cast<std::size_t>(std::clamp((x - x0) / wx, 0.0, static_cast<double>(G - 1))); };
  auto row = [&](double y) { return static_cast<std::size_t>(std::clamp((y - y0) / wy, 0.0, static_cast<double>(G - 1))); };
  for (std::size_t j = 0; j < points.size(); ++j) grid[row(points[j].y) * G + col(points[j].x)].push_back(j);

  const double diam = std::hypot(x1 - x0, y1 - y0);
  double r = std::max(diam, 1e-300) / static_cast<double>(points.size() * points.size());
  for (;;) {
    CrossIncidence best;
    const double rr = r * (1 + 1e-9) + 1e-15;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const auto& l = lines[k];
      auto visit_cell = [&](std::size_t cx, std::size_t cy) {
        for (auto j : grid[cy * G + cx]) {
          if (owner[j] == k) continue;
          CrossIncidence c{j, k, l.distance(points[j])};
          if (c.distance <= r && detail::better(c, best)) best = c;
        }
      };
      if (std::abs(l.ny) >= std::abs(l.nx)) {
        // y = (h - nx x) / ny; vertical half-width rr / |ny|
        for (std::size_t cx = 0; cx < G; ++cx) {
          double xa = x0 + wx * static_cast<double>(cx), xb = xa + wx;
          double ya = (l.h - l.nx * xa) / l.ny, yb = (l.h - l.nx * xb) / l.ny;
          double lo = std::min(ya, yb) - rr / std::abs(l.ny), hi = std::max(ya, yb) + rr / std::abs(l.ny);
          if (hi < y0 || lo > y1) continue;
          for (std::size_t cy = row(lo); cy <= row(hi); ++cy) visit_cell(cx, cy);
        }
      } else {
        for (std::size_t cy = 0; cy < G; ++cy) {
          double ya = y0 + wy * static_cast<double>(cy), yb = ya + wy;
          double xa = (l.h - l.ny * ya) / l.nx, xb = (l.h - l.ny * yb) / l.nx;
          double lo = std::min(xa, xb) - rr / std::abs(l.nx), hi = std::max(xa, xb) + rr / std::abs(l.nx);
          if (hi < x0 || lo > x1) continue;
          for (std::size_t cx = col(lo); cx <= col(hi); ++cx) visit_cell(cx, cy);
        }
      }
    }
    if (best.distance <= r) return best;
    if (r > 4 * diam + 4 * std::abs(lines[0].h) + 1) return nearest_cross_incidence_naive(points, owner, lines);
    r *= 4;
  }
}

/// Point-line pairs p_j ∈ ℓ_j (owner of point j is line j).
inline CrossIncidence nearest_cross_incidence(std::span<const Point2> points, std::span<const Line2> lines) {
  if (points.size() < 2 || lines.size() != points.size()) throw std::invalid_argument("nearest_cross_incidence needs n >= 2 point-line pairs");
  std::vector<std::size_t> owner(points.size());
  std::iota(owner.begin(), owner.end(), 0);
  return nearest_cross_incidence(points, owner, lines);
}

// ---------------------------------------------------------------------------
// Triangles.

struct TriangleResult {
  std::vector<std::size_t> indices;
  double area = 0;
  std::string method;
  double base = 0;  ///< pipeline: |p_k p_k'|
  double dist = 0;  ///< pipeline: d(p_j, ℓ_k)

  /// Recomputes the area from the points (triangle determinant, or hull area for k-gons).
  double recompute(std::span<const Point2> P) const {
    std::vector<Point2> pts;
    for (auto i : indices) pts.push_back(P[i]);
    if (pts.size() == 3) return triangle_area(pts[0], pts[1], pts[2]);
    return hull_area(pts);
  }
};

/// Pairing, lines through the pairs, nearest cross incidence, then the triangle (p_k, p_k', q).
/// The third vertex ranges over every point outside pair k (pair heads, partners and leftovers).
inline TriangleResult small_triangle_pipeline(std::span<const Point2> P) {
  if (P.size() < 4) throw std::invalid_argument("small_triangle_pipeline needs at least 4 points");
  auto pairing = greedy_pairing(P);
  const std::size_t none = pairing.pairs.size();
  std::vector<std::size_t> owner(P.size(), none);
  for (std::size_t k = 0; k < pairing.pairs.size(); ++k) owner[pairing.pairs[k].first] = owner[pairing.pairs[k].second] = k;
  auto hit = nearest_cross_incidence(P, owner, pairing.lines);
  auto [i, j] = pairing.pairs[hit.line];
  TriangleResult t;
  t.indices = {i, j, hit.point};
  t.area = triangle_area(P[i], P[j], P[hit.point]);
  t.method = "pipeline";
  t.base = distance(P[i], P[j]);
  t.dist = hit.distance;
  return t;
}

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace detail

/// Exact minimum over all k-subsets of the convex-hull area (k = 3: triangle area).
inline TriangleResult brute_force_min_triangle(std::span<const Point2> P, std::size_t k = 3, unsigned workers = 1) {
  const std::size_t n = P.size();
  if (k < 3) throw std::invalid_argument("polygon size must be at least 3");
  if (n < k) throw std::invalid_argument("brute force needs at least k points");
  const std::size_t cap = k == 3 ? 400 : k == 4 ? 60 : k == 5 ? 30 : 0;
  if ((cap > 0 && n > cap) || (cap == 0 && detail::binomial(n, k) > 1e7))
    throw std::invalid_argument("brute force over " + std::to_string(n) + " points exceeds the cap for k=" + std::to_string(k));
  std::vector<TriangleResult> best(n - k + 1);
  parallel_for(n - k + 1, workers, [&](std::size_t lead) {
    TriangleResult& b = best[lead];
    b.area = std::numeric_limits<double>::infinity();
    b.method = k == 3 ? "brute_force" : "kgon";
    std::vector<std::size_t> idx(k);
    idx[0] = lead;
    for (std::size_t x = 1; x < k; ++x) idx[x] = lead + x;
    std::vector<Point2> pts(k);
    for (;;) {
      double area;
      if (k == 3) {
        area = triangle_area(P[idx[0]], P[idx[1]], P[idx[2]]);
      } else {
        for (std::size_t x = 0; x < k; ++x) pts[x] = P[idx[x]];
        area = hull_area(pts);
      }
      if (area < b.area) {
        b.area = area;
        b.indices = idx;
      }
      // next combination with idx[0] fixed
      std::size_t pos = k - 1;
      while (pos >= 1 && idx[pos] == n - k + pos) --pos;
      if (pos == 0) break;
      ++idx[pos];
      for (std::size_t x = pos + 1; x < k; ++x) idx[x] = idx[x - 1] + 1;
    }
  });
  TriangleResult out = best[0];
  for (const auto& b : best)
    if (b.area < out.area) out = b;
  return out;
}

// ---------------------------------------------------------------------------
// Exponent sweep.

struct SweepRow {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::string method;
  double area = 0;
  double dist = 0;
};

struct SweepResult {
  std::string generator;
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::size_t, double>> medians;  ///< pipeline median area per n
  std::vector<std::pair<std::size_t, double>> brute_medians;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double brute_slope = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  ///< some median area is 0, so the log-log fit is undefined
  double max_pair_ratio = 0;  ///< max pair distance / (10/√n) over all runs
  bool pipeline_above_brute = true;

  std::string to_csv() const {
    std::ostringstream os;
    os << "n,trial,method,area,dist\n";
    for (const auto& r : rows) os << r.n << ',' << r.trial << ',' << r.method << ',' << format_real(r.area) << ',' << format_real(r.dist) << '\n';
    os << "# slope=" << format_real(slope) << " brute_slope=" << format_real(brute_slope) << " degenerate=" << (degenerate ? 1 : 0)
       << " max_pair_ratio=" << format_real(max_pair_ratio) << '\n';
    return os.str();
  }
};

inline std::vector<Point2> heilbronn_points(const std::string& generator, std::size_t n, std::uint64_t seed) {
  if (generator == "uniform_random") return uniform_unit_square(n, seed);
  if (generator == "grid") return grid_unit_square(n);
  throw std::invalid_argument("unknown point generator '" + generator + "' (expected uniform_random or grid)");
}

/// Pipeline (and brute force for n <= brute_max_n) over trials per n; per-n medians and log-log slope.
inline SweepResult exponent_sweep(const std::string& generator, std::span<const std::size_t> n_list, std::size_t trials, std::uint64_t seed,
                                  std::size_t brute_max_n = 0, unsigned workers = 1) {
  if (n_list.size() < 3) throw std::invalid_argument("exponent_sweep needs at least 3 values of n");
  if (trials == 0) throw std::invalid_argument("exponent_sweep needs at least one trial");
  SweepResult out;
  out.generator = generator;
  struct Job {
    std::size_t n, trial;
    TriangleResult pipe;
    double pair_ratio = 0;
    std::optional<TriangleResult> brute;
  };
  std::vector<Job> jobs;
  for (auto n : n_list)
    for (std::size_t t = 0; t < trials; ++t) jobs.push_back({n, t, {}, 0, std::nullopt});
  parallel_for(jobs.size(), workers, [&](std::size_t x) {
    auto& job = jobs[x];
    auto P = heilbronn_points(generator, job.n, derive_seed(seed, job.n, job.trial));
    auto pairing = greedy_pairing(P);
    job.pair_ratio = pairing.max_distance / pairing.bound();
    job.pipe = small_triangle_pipeline(P);
    if (job.n <= brute_max_n) job.brute = brute_force_min_triangle(P, 3);
  });
  for (auto n : n_list) {
    std::vector<double> pipe, brute;
    for (const auto& job : jobs) {
      if (job.n != n) continue;
      out.rows.push_back({n, job.trial, "pipeline", job.pipe.area, job.pipe.dist});
      pipe.push_back(job.pipe.area);
      out.max_pair_ratio = std::max(out.max_pair_ratio, job.pair_ratio);
      if (job.brute) {
        out.rows.push_back({n, job.trial, "brute_force", job.brute->area, 0});
        brute.push_back(job.brute->area);
        if (job.pipe.area < job.brute->area) out.pipeline_above_brute = false;
      }
    }
    out.medians.emplace_back(n, median(pipe));
    if (!brute.empty()) out.brute_medians.emplace_back(n, median(brute));
  }
  auto fit = [&](const std::vector<std::pair<std::size_t, double>>& med, bool& degenerate) {
    std::vector<double> xs, ys;
    for (auto [n, a] : med) {
      if (!(a > 0)) {
        degenerate = true;
        return std::numeric_limits<double>::quiet_NaN();
      }
      xs.push_back(std::log(static_cast<double>(n)));
      ys.push_back(std::log(a));
    }
    return xs.size() >= 2 ? least_squares_slope(xs, ys) : std::numeric_limits<double>::quiet_NaN();
  };
  out.slope = fit(out.medians, out.degenerate);
  bool brute_degenerate = false;
  out.brute_slope = fit(out.brute_medians, brute_degenerate);
  return out;
}

}  // namespace inclab
