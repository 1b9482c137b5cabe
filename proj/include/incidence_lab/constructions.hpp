#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "incidence_lab/common.hpp"
#include "incidence_lab/phase_space.hpp"
#include "json.hpp"

namespace inclab {

/// Smallest pairwise Euclidean distance in R^3 (infinity for fewer than two points).
inline double min_separation(std::span<const PhasePoint> pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::infinity();
  std::vector<PhasePoint> s(pts.begin(), pts.end());
  std::sort(s.begin(), s.end(), [](const PhasePoint& p, const PhasePoint& q) { return p.a < q.a; });
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size() && s[j].a - s[i].a < best; ++j)
      best = std::min(best, std::sqrt((s[j].a - s[i].a) * (s[j].a - s[i].a) + (s[j].b - s[i].b) * (s[j].b - s[i].b) +
                                      (s[j].c - s[i].c) * (s[j].c - s[i].c)));
  return best;
}

/// δ for sampled sets: the realized minimum separation rounded down to a power of two, within [2^-40, 1].
inline double separation_delta(std::span<const PhasePoint> pts) {
  double sep = min_separation(pts);
  if (!std::isfinite(sep)) return 1.0;
  return std::max(dyadic(40), dyadic_floor(std::max(sep, dyadic(40))));
}

inline Configuration gen_uniform_random(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("gen_uniform_random needs n >= 1");
  Rng rng(seed);
  std::vector<PhasePoint> pts(n);
  for (auto& p : pts) {
    p.a = rng.uniform(-1, 1);
    p.b = rng.uniform(-1, 1);
    p.c = rng.uniform(-1, 1);
  }
  double delta = separation_delta(pts);
  return Configuration(std::move(pts), delta, {"uniform_random", seed, "n=" + std::to_string(n)});
}

/// Slope field φ on [-1,1]²: the identity φ(x,y) = x or a bilinear table on a uniform grid.
struct SlopeField {
  std::string name = "identity";
  std::size_t grid = 0;        ///< table side length (0 for identity)
  std::vector<double> values;  ///< row-major, values[i * grid + j] = φ(x_i, y_j)

  static SlopeField identity() { return {}; }
  static SlopeField table(std::size_t side, std::vector<double> vals) {
    if (side < 2 || vals.size() != side * side) throw std::invalid_argument("slope table must be side x side with side >= 2");
    return {"table", side, std::move(vals)};
  }

  double operator()(double x, double y) const {
    if (grid == 0) return x;
    double fx = (x + 1) / 2 * static_cast<double>(grid - 1), fy = (y + 1) / 2 * static_cast<double>(grid - 1);
    auto i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(fx))), grid - 2);
    auto j = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(fy))), grid - 2);
    double s = fx - static_cast<double>(i), t = fy - static_cast<double>(j);
    auto at = [&](std::size_t a, std::size_t b) { return values[a * grid + b]; };
    return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) + (1 - s) * t * at(i, j + 1) + s * t * at(i + 1, j + 1);
  }
};

/// Checks |φ_x + φ φ_y| ∈ [1/4, 4] and |φ| <= 1 on a sample grid by central differences.
inline bool slope_field_nondegenerate(const SlopeField& phi, std::string* why = nullptr) {
  const int N = 64;
  const double h = 1e-4;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      double x = -1 + 2.0 * i / N, y = -1 + 2.0 * j / N;
      double v = phi(x, y);
      if (std::abs(v) > 1) {
        if (why) *why = "slope outside [-1,1] at (" + format_real(x) + "," + format_real(y) + ")";
        return false;
      }
      double xl = std::max(-1.0, x - h), xr = std::min(1.0, x + h), yl = std::max(-1.0, y - h), yr = std::min(1.0, y + h);
      double phx = (phi(xr, y) - phi(xl, y)) / (xr - xl), phy = (phi(x, yr) - phi(x, yl)) / (yr - yl);
      double g = std::abs(phx + v * phy);
      if (g < 0.25 || g > 4) {
        if (why) *why = "|(1,phi).grad phi| = " + format_real(g) + " at (" + format_real(x) + "," + format_real(y) + ")";
        return false;
      }
    }
  return true;
}

/// X = {(x, y, φ(x, y)) : (x, y) ∈ δZ² ∩ [-1,1]²}, x outer, y inner.
inline Configuration gen_grid_slope_field(double delta, const SlopeField& phi = SlopeField::identity()) {
  if (!is_dyadic(delta) || delta < dyadic(16)) throw std::invalid_argument("grid_slope_field needs dyadic delta >= 2^-16");
  std::string why;
  if (!slope_field_nondegenerate(phi, &why)) throw std::invalid_argument("slope field rejected: " + why);
  const auto side = static_cast<std::size_t>(std::lround(2 / delta)) + 1;
  std::vector<PhasePoint> pts;
  pts.reserve(side * side);
  for (std::size_t i = 0; i < side; ++i) {
    double x = -1 + static_cast<double>(i) * delta;
    for (std::size_t j = 0; j < side; ++j) {
      double y = -1 + static_cast<double>(j) * delta;
      pts.push_back({x, y, phi(x, y)});
    }
  }
  return Configuration(std::move(pts), delta, {"grid_slope_field", 0, "phi=" + phi.name + ";delta=" + format_scale(delta)});
}

/// δZ³ ∩ Ω, or δZ² × {0} ∩ Ω when `planar`.
inline Configuration gen_lattice(double delta, bool planar = false) {
  if (!is_dyadic(delta) || delta < dyadic(10)) throw std::invalid_argument("lattice needs dyadic delta >= 2^-10");
  const auto side = static_cast<std::size_t>(std::lround(2 / delta)) + 1;
  std::vector<PhasePoint> pts;
  pts.reserve(side * side * (planar ? 1 : side));
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      double a = -1 + static_cast<double>(i) * delta, b = -1 + static_cast<double>(j) * delta;
      if (planar) {
        pts.push_back({a, b, 0.0});
        continue;
      }
      for (std::size_t k = 0; k < side; ++k) pts.push_back({a, b, -1 + static_cast<double>(k) * delta});
    }
  return Configuration(std::move(pts), delta, {"lattice", 0, std::string(planar ? "planar;" : "") + "delta=" + format_scale(delta)});
}

namespace detail {

inline bool close_to(double x, double y) { return std::abs(x - y) < 1e-9; }

}  // namespace detail

/// The exponents offered by the digit constructions.
inline bool ad_point_exponent_supported(double t) {
  return detail::close_to(t, 1) || detail::close_to(t, std::log2(3.0)) || detail::close_to(t, 2);
}
inline bool ad_slope_exponent_supported(double s) {
  return detail::close_to(s, 0) || detail::close_to(s, 0.5) || detail::close_to(s, std::log(2.0) / std::log(3.0)) || detail::close_to(s, 1);
}

/// Digit-restricted point set in [-1,1)² with spacing δ: a line (t=1), Sierpinski corners (t=log2 3) or the full grid (t=2).
inline std::vector<Point2> ad_regular_points(double t, double delta) {
  if (!ad_point_exponent_supported(t)) throw std::invalid_argument("unrealizable point exponent " + format_real(t));
  if (!is_dyadic(delta) || delta < dyadic(12)) throw std::invalid_argument("ad_regular_points needs dyadic delta >= 2^-12");
  const int K = dyadic_exponent(delta) + 1;
  const std::uint64_t side = 1ULL << K;
  std::vector<Point2> out;
  for (std::uint64_t i = 0; i < side; ++i)
    for (std::uint64_t j = 0; j < side; ++j) {
      bool keep = detail::close_to(t, 2) || (detail::close_to(t, 1) ? j == side / 2 : (i & j) == 0);
      if (keep) out.push_back({-1 + static_cast<double>(i) * delta, -1 + static_cast<double>(j) * delta});
    }
  return out;
}

/// Cantor slope set in [-1,1) of dimension s at resolution no finer than δ (s = 0 gives the single slope 0).
inline std::vector<double> ad_regular_slopes(double s, double delta) {
  if (!ad_slope_exponent_supported(s)) throw std::invalid_argument("unrealizable slope exponent " + format_real(s));
  if (detail::close_to(s, 0)) return {0.0};
  auto digits = [](int base, int levels, std::initializer_list<int> allowed) {
    std::vector<std::uint64_t> ks{0};
    for (int l = 0; l < levels; ++l) {
      std::vector<std::uint64_t> next;
      for (auto k : ks)
        for (int d : allowed) next.push_back(k * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(d));
      ks = std::move(next);
    }
    return ks;
  };
  std::vector<double> out;
  if (detail::close_to(s, 1)) {
    const auto side = static_cast<std::uint64_t>(std::lround(2 / delta));
    for (std::uint64_t k = 0; k < side; ++k) out.push_back(-1 + static_cast<double>(k) * delta);
    return out;
  }
  int base = detail::close_to(s, 0.5) ? 4 : 3;
  int levels = 0;
  while (std::pow(base, levels + 1) * delta <= 2 + 1e-12) ++levels;
  double step = 2 / std::pow(base, levels);
  for (auto k : digits(base, levels, {0, 2})) out.push_back(-1 + static_cast<double>(k) * step);
  std::sort(out.begin(), out.end());
  return out;
}

/// Cartesian assembly ω = (p, slope) over per-point slope sets.
inline Configuration gen_lines_through_points(std::span<const Point2> P, const std::vector<std::vector<double>>& slopes, double delta,
                                              Provenance prov = {"lines_through_points", 0, ""}) {
  if (slopes.size() != P.size() && slopes.size() != 1)
    throw std::invalid_argument("lines_through_points needs one slope set per point (or one shared set)");
  std::vector<PhasePoint> pts;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto& set = slopes.size() == 1 ? slopes[0] : slopes[i];
    for (double c : set) {
      if (!(std::abs(c) <= 1)) throw std::invalid_argument("slope outside [-1,1]: " + format_real(c));
      pts.push_back({P[i].x, P[i].y, c});
    }
  }
  return Configuration(std::move(pts), delta, std::move(prov));
}

/// AD-regular point set with a Cantor set of slopes through each point.
inline Configuration gen_ad_regular_product(double t, double s, double delta, std::uint64_t seed) {
  auto P = ad_regular_points(t, delta);
  auto base = ad_regular_slopes(s, delta);
  Rng rng(seed);
  std::vector<std::vector<double>> sets;
  sets.reserve(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (detail::close_to(s, 0)) {
      sets.push_back({rng.uniform(-1, 1)});
    } else if (detail::close_to(s, 1)) {
      sets.push_back(base);
    } else {
      auto set = base;
      if (rng.next() & 1)
        for (auto& c : set) c = -c;
      sets.push_back(std::move(set));
    }
  }
  return gen_lines_through_points(P, sets, delta,
                                  {"ad_regular_product", seed, "t=" + format_real(t) + ";s=" + format_real(s) + ";delta=" + format_scale(delta)});
}

/// max over centers x0 ∈ P and dyadic w ∈ [δ, 1] of max(r, 1/r), r = |P ∩ B(x0, w)| / (w^t |P|).
/// Points must lie on the grid -1 + δZ².
inline double ad_regularity_constant(std::span<const Point2> P, double t, double delta) {
  if (P.empty()) throw std::invalid_argument("ad_regularity_constant of an empty set");
  const auto side = static_cast<std::int64_t>(std::lround(2 / delta)) + 1;
  std::vector<std::int64_t> ix(P.size()), iy(P.size());
  std::vector<std::uint32_t> grid(static_cast<std::size_t>(side * side), 0);
  for (std::size_t i = 0; i < P.size(); ++i) {
    double fx = (P[i].x + 1) / delta, fy = (P[i].y + 1) / delta;
    ix[i] = std::llround(fx);
    iy[i] = std::llround(fy);
    if (std::abs(fx - static_cast<double>(ix[i])) > 1e-9 || std::abs(fy - static_cast<double>(iy[i])) > 1e-9 || ix[i] < 0 || iy[i] < 0 ||
        ix[i] >= side || iy[i] >= side)
      throw std::invalid_argument("ad_regularity_constant: point off the delta grid");
    ++grid[static_cast<std::size_t>(ix[i] * side + iy[i])];
  }
  // Column prefix sums: pre[x][y] = points with this x and y' < y.
  std::vector<std::uint32_t> pre(static_cast<std::size_t>(side * (side + 1)), 0);
  for (std::int64_t x = 0; x < side; ++x)
    for (std::int64_t y = 0; y < side; ++y)
      pre[static_cast<std::size_t>(x * (side + 1) + y + 1)] =
          pre[static_cast<std::size_t>(x * (side + 1) + y)] + grid[static_cast<std::size_t>(x * side + y)];
  double worst = 1;
  const double n = static_cast<double>(P.size());
  for (double w = 1; w >= delta; w /= 2) {
    const auto r = static_cast<std::int64_t>(std::floor(w / delta + 1e-9));
    for (std::size_t i = 0; i < P.size(); ++i) {
      std::uint64_t count = 0;
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        std::int64_t x = ix[i] + dx;
        if (x < 0 || x >= side) continue;
        auto dy = static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(r * r - dx * dx)) + 1e-9));
        std::int64_t y0 = std::max<std::int64_t>(0, iy[i] - dy), y1 = std::min<std::int64_t>(side - 1, iy[i] + dy);
        if (y0 > y1) continue;
        count += pre[static_cast<std::size_t>(x * (side + 1) + y1 + 1)] - pre[static_cast<std::size_t>(x * (side + 1) + y0)];
      }
      double ratio = static_cast<double>(count) / (std::pow(w, t) * n);
      worst = std::max({worst, ratio, 1 / ratio});
    }
  }
  return worst;
}

/// A dense cluster (side 2^-6 box around a seeded center) mixed with uniform dust.
inline Configuration gen_cluster_mix(std::size_t n_cluster, std::size_t n_dust, std::uint64_t seed) {
  if (n_cluster + n_dust == 0) throw std::invalid_argument("cluster_mix needs at least one point");
  Rng rng(seed);
  PhasePoint center{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
  const double r = dyadic(6);
  std::vector<PhasePoint> pts;
  pts.reserve(n_cluster + n_dust);
  for (std::size_t i = 0; i < n_cluster; ++i)
    pts.push_back({center.a + rng.uniform(-r, r), center.b + rng.uniform(-r, r), center.c + rng.uniform(-r, r)});
  for (std::size_t i = 0; i < n_dust; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  double delta = separation_delta(pts);
  return Configuration(std::move(pts), delta,
                       {"cluster_mix", seed, "n_cluster=" + std::to_string(n_cluster) + ";n_dust=" + std::to_string(n_dust)});
}

/// n random points of [-1,1]², all carrying the same slope.
inline Configuration gen_single_slope(std::size_t n, double slope, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("single_slope needs n >= 1");
  if (!(std::abs(slope) <= 1)) throw std::invalid_argument("slope outside [-1,1]");
  Rng rng(seed);
  std::vector<PhasePoint> pts(n);
  for (auto& p : pts) {
    p.a = rng.uniform(-1, 1);
    p.b = rng.uniform(-1, 1);
    p.c = slope;
  }
  double delta = separation_delta(pts);
  return Configuration(std::move(pts), delta, {"single_slope", seed, "n=" + std::to_string(n) + ";slope=" + format_real(slope)});
}

/// n i.i.d. uniform points of [0,1]².
inline std::vector<Point2> uniform_unit_square(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point2> out(n);
  for (auto& p : out) {
    p.x = rng.uniform01();
    p.y = rng.uniform01();
  }
  return out;
}

/// The first n points of the ⌈√n⌉ x ⌈√n⌉ grid in [0,1]².
inline std::vector<Point2> grid_unit_square(std::size_t n) {
  auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::vector<Point2> out;
  for (std::size_t i = 0; i < side && out.size() < n; ++i)
    for (std::size_t j = 0; j < side && out.size() < n; ++j)
      out.push_back({side > 1 ? static_cast<double>(i) / static_cast<double>(side - 1) : 0.0,
                     side > 1 ? static_cast<double>(j) / static_cast<double>(side - 1) : 0.0});
  return out;
}

/// Serializable description of a generator run.
struct GeneratorSpec {
  std::string kind = "uniform_random";
  std::size_t n = 1000;
  double delta = 1.0 / 256;
  std::uint64_t seed = 0;
  double t = 2;            ///< AD point exponent
  double s = 1;            ///< AD slope exponent
  double slope = 0;        ///< single_slope
  std::size_t n_dust = 0;  ///< cluster_mix
  std::string input;       ///< lines_through_points: planar point file "x y" per line
  std::vector<double> slopes;

  nlohmann::json to_json() const {
    return {{"kind", kind}, {"n", n}, {"delta", format_scale(delta)}, {"seed", seed}, {"t", t}, {"s", s},
            {"slope", slope}, {"n_dust", n_dust}, {"input", input}, {"slopes", slopes}};
  }
  static GeneratorSpec from_json(const nlohmann::json& j) {
    GeneratorSpec g;
    g.kind = j.value("kind", g.kind);
    g.n = j.value("n", g.n);
    if (j.contains("delta")) g.delta = j["delta"].is_string() ? parse_scale(j["delta"].get<std::string>()) : j["delta"].get<double>();
    g.seed = j.value("seed", g.seed);
    g.t = j.value("t", g.t);
    g.s = j.value("s", g.s);
    g.slope = j.value("slope", g.slope);
    g.n_dust = j.value("n_dust", g.n_dust);
    g.input = j.value("input", g.input);
    g.slopes = j.value("slopes", g.slopes);
    return g;
  }
};

inline std::vector<Point2> read_planar_points(std::istream& is) {
  std::vector<Point2> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Point2 p;
    if (!(ls >> p.x >> p.y)) throw std::invalid_argument("planar point line is not 'x y': " + line);
    out.push_back(p);
  }
  return out;
}

inline Configuration generate(const GeneratorSpec& g) {
  if (g.kind == "uniform_random") return gen_uniform_random(g.n, g.seed);
  if (g.kind == "grid_slope_field") return gen_grid_slope_field(g.delta);
  if (g.kind == "ad_regular_product") return gen_ad_regular_product(g.t, g.s, g.delta, g.seed);
  if (g.kind == "cluster_mix") return gen_cluster_mix(g.n, g.n_dust, g.seed);
  if (g.kind == "single_slope") return gen_single_slope(g.n, g.slope, g.seed);
  if (g.kind == "lattice") return gen_lattice(g.delta);
  if (g.kind == "lines_through_points") {
    std::ifstream is(g.input);
    if (!is) throw std::invalid_argument("cannot open planar point file " + g.input);
    auto P = read_planar_points(is);
    if (g.slopes.empty()) throw std::invalid_argument("lines_through_points needs a slope list");
    return gen_lines_through_points(P, {g.slopes}, g.delta);
  }
  throw std::invalid_argument("unknown generator kind: " + g.kind);
}

}  // namespace inclab
