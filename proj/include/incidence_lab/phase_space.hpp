#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "incidence_lab/common.hpp"

namespace inclab {

/// ω = (a, b, c): the point (a, b) together with a line of slope c through it.
struct PhasePoint {
  double a = 0;
  double b = 0;
  double c = 0;

  friend bool operator==(const PhasePoint&, const PhasePoint&) = default;

  Point2 point() const { return {a, b}; }
  bool in_omega() const { return std::abs(a) <= 1 && std::abs(b) <= 1 && std::abs(c) <= 1; }
};

/// Marker for an unbounded (box) slot of a scale triple.
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Exponent of the lattice offset 2^{-10} used for dyadic rectangle centers.
inline constexpr int kLatticeExponent = 10;

struct ScaleTriple {
  double u = 1;
  double v = 1;
  double w = 1;

  friend bool operator==(const ScaleTriple&, const ScaleTriple&) = default;

  bool bounded() const { return std::isfinite(u) && std::isfinite(v) && std::isfinite(w); }
  bool positive() const { return u > 0 && v > 0 && w > 0; }
  /// v >= u w when all three slots are bounded.
  bool admissible() const { return positive() && (!bounded() || v >= u * w); }
  bool dyadic() const { return bounded() && is_dyadic(u) && is_dyadic(v) && is_dyadic(w); }
  double min_side() const { return std::min({u, v, w}); }
  ScaleTriple scaled(double lambda) const { return {u * lambda, v * lambda, w * lambda}; }

  std::string to_string() const { return format_scale(u) + "x" + format_scale(v) + "x" + format_scale(w); }
};

inline void require_admissible(const ScaleTriple& s) {
  if (!s.positive() || std::isnan(s.u) || std::isnan(s.v) || std::isnan(s.w))
    throw std::invalid_argument("scale sides must be positive: " + s.to_string());
  if (!s.admissible()) throw std::invalid_argument("inadmissible scale (v < u w): " + s.to_string());
}

inline void require_dyadic_admissible(const ScaleTriple& s) {
  require_admissible(s);
  if (!s.dyadic()) throw std::invalid_argument("scale is not dyadic: " + s.to_string());
}

namespace detail {

inline double distance_unchecked(const PhasePoint& from, const PhasePoint& to, const ScaleTriple& s) {
  double da = std::abs(to.a - from.a) / s.u;
  double db = std::abs(to.b - (from.b + from.c * (to.a - from.a))) / s.v;
  double dc = std::abs(to.c - from.c) / s.w;
  return std::max({da, db, dc});
}

}  // namespace detail

/// d_{u×v×w}(from → to). Unbounded slots drop their term.
inline double directed_distance(const PhasePoint& from, const PhasePoint& to, const ScaleTriple& scale) {
  require_admissible(scale);
  return detail::distance_unchecked(from, to, scale);
}

/// Skewed rectangle R_{u×v×w}(center) = {ω : d(center → ω) <= 1}.
struct PhaseRect {
  PhasePoint center;
  ScaleTriple scale;
  bool dyadic = false;

  bool contains(const PhasePoint& omega) const { return contains_dilated(1.0, omega); }
  bool contains_dilated(double lambda, const PhasePoint& omega) const {
    return detail::distance_unchecked(center, omega, scale) <= lambda;
  }
};

inline bool rect_contains(const PhaseRect& rect, const PhasePoint& omega) {
  if (!rect.scale.bounded()) throw std::invalid_argument("rect_contains needs a bounded scale");
  require_admissible(rect.scale);
  return rect.contains(omega);
}

inline bool dilated_contains(const PhaseRect& rect, double lambda, const PhasePoint& omega) {
  if (!(lambda >= 1)) throw std::invalid_argument("dilation factor must be >= 1");
  if (!rect.scale.bounded()) throw std::invalid_argument("dilated_contains needs a bounded scale");
  require_admissible(rect.scale);
  return rect.contains_dilated(lambda, omega);
}

/// True when the center lies on (2^{-10}u)Z x (2^{-10}v)Z x (2^{-10}w)Z.
inline bool on_dyadic_lattice(const PhasePoint& center, const ScaleTriple& s) {
  auto on = [](double x, double side) {
    double q = x / std::ldexp(side, -kLatticeExponent);
    return std::isfinite(q) && q == std::floor(q);
  };
  return on(center.a, s.u) && on(center.b, s.v) && on(center.c, s.w);
}

/// Provenance of a configuration.
struct Provenance {
  std::string generator;
  std::uint64_t seed = 0;
  std::string params;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Finite multiset X of phase points with ambient scale δ. Immutable after construction.
class Configuration {
 public:
  Configuration() = default;
  Configuration(std::vector<PhasePoint> points, double delta, Provenance provenance = {})
      : points_(std::move(points)), delta_(delta), provenance_(std::move(provenance)) {
    if (!(delta_ > 0) || delta_ > 1) throw std::invalid_argument("configuration delta must lie in (0,1]");
    for (const auto& p : points_)
      if (!std::isfinite(p.a) || !std::isfinite(p.b) || !std::isfinite(p.c))
        throw std::invalid_argument("configuration contains a non-finite coordinate");
  }

  std::span<const PhasePoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const PhasePoint& operator[](std::size_t i) const { return points_[i]; }
  double delta() const { return delta_; }
  const Provenance& provenance() const { return provenance_; }

  /// P[X], one entry per point of X.
  std::vector<Point2> P() const {
    std::vector<Point2> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.point());
    return out;
  }

  bool in_omega() const {
    return std::all_of(points_.begin(), points_.end(), [](const PhasePoint& p) { return p.in_omega(); });
  }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::vector<PhasePoint> points_;
  double delta_ = 1;
  Provenance provenance_;
};

inline Configuration subset(const Configuration& X, std::span<const std::size_t> indices) {
  std::vector<PhasePoint> pts;
  pts.reserve(indices.size());
  for (auto i : indices) pts.push_back(X[i]);
  return Configuration(std::move(pts), X.delta(), X.provenance());
}

// ---------------------------------------------------------------------------
// Tiles: the canonical cover used for covering numbers.
//
// Tile centers sit at odd multiples of the sides, offset from -1, and form a
// sub-lattice of C_{u×v×w}. The a and c coordinates are rounded first and the
// b coordinate is rounded along the shear of the chosen slope, as in the
// constructive proof of the covering lemma.

struct TileKey {
  std::int64_t ia = 0;
  std::int64_t ic = 0;
  std::int64_t ib = 0;
  friend auto operator<=>(const TileKey&, const TileKey&) = default;
};

namespace detail {

/// Index of the half-open cell [-1 + 2 side k, -1 + 2 side (k+1)); the point 1 joins the last cell of [-1,1].
inline std::int64_t tile_index(double x, double side) {
  auto k = static_cast<std::int64_t>(std::floor((x + 1) / (2 * side)));
  if (k > 0 && x <= 1 && -1 + 2 * side * static_cast<double>(k) >= 1) --k;
  return k;
}

inline double tile_coordinate(std::int64_t k, double side) { return -1 + side * static_cast<double>(2 * k + 1); }

}  // namespace detail

inline TileKey tile_key(const PhasePoint& omega, const ScaleTriple& s) {
  TileKey key;
  key.ia = detail::tile_index(omega.a, s.u);
  key.ic = detail::tile_index(omega.c, s.w);
  double a0 = detail::tile_coordinate(key.ia, s.u);
  double c0 = detail::tile_coordinate(key.ic, s.w);
  key.ib = detail::tile_index(omega.b - c0 * (omega.a - a0), s.v);
  return key;
}

inline PhasePoint tile_center(const TileKey& key, const ScaleTriple& s) {
  return {detail::tile_coordinate(key.ia, s.u), detail::tile_coordinate(key.ib, s.v), detail::tile_coordinate(key.ic, s.w)};
}

/// Assigns every point of X its dyadic tile rectangle; the rectangle always contains the point.
inline std::vector<PhaseRect> dyadic_cover_assign(const Configuration& X, const ScaleTriple& scale) {
  require_dyadic_admissible(scale);
  std::vector<PhaseRect> out;
  out.reserve(X.size());
  for (const auto& p : X.points()) out.push_back({tile_center(tile_key(p, scale), scale), scale, true});
  return out;
}

namespace detail {

inline std::size_t count_distinct_sorted(std::vector<TileKey>& keys) {
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

}  // namespace detail

/// Number of distinct tiles met by the points (no validation).
inline std::size_t count_tiles(std::span<const PhasePoint> points, const ScaleTriple& s) {
  if (points.empty()) return 0;
  bool inside = std::all_of(points.begin(), points.end(), [](const PhasePoint& p) { return p.in_omega(); });
  if (inside) {
    // Bitmap over the bounded key range of points in Ω.
    std::int64_t na = detail::tile_index(1.0, s.u) + 1;
    std::int64_t nc = detail::tile_index(1.0, s.w) + 1;
    std::int64_t bmin = detail::tile_index(-1 - s.u, s.v);
    std::int64_t bmax = detail::tile_index(1 + s.u, s.v) + 1;
    std::int64_t nb = bmax - bmin + 1;
    long double space = static_cast<long double>(na) * nc * nb;
    if (space <= static_cast<long double>(1ULL << 31)) {
      std::vector<std::uint64_t> bits(static_cast<std::size_t>((na * nc * nb + 63) / 64), 0);
      std::size_t count = 0;
      for (const auto& p : points) {
        TileKey k = tile_key(p, s);
        auto idx = static_cast<std::uint64_t>((k.ia * nc + k.ic) * nb + (k.ib - bmin));
        std::uint64_t mask = 1ULL << (idx & 63);
        std::uint64_t& word = bits[idx >> 6];
        if (!(word & mask)) {
          word |= mask;
          ++count;
        }
      }
      return count;
    }
  }
  std::vector<TileKey> keys;
  keys.reserve(points.size());
  for (const auto& p : points) keys.push_back(tile_key(p, s));
  return detail::count_distinct_sorted(keys);
}

/// |X|_{u×v×w}: number of distinct dyadic rectangles assigned to points of X.
inline std::size_t covering_number(const Configuration& X, const ScaleTriple& scale) {
  require_dyadic_admissible(scale);
  if (scale.min_side() < X.delta()) throw std::invalid_argument("scale side below the configuration's delta");
  return count_tiles(X.points(), scale);
}

// ---------------------------------------------------------------------------
// Lattice rectangles used for concentration: centers on the half-side lattice
// (u/2)Z x (v/2)Z x (w/2)Z, a sub-lattice of C_{u×v×w}.

/// Calls fn(ia, ic, ib) for every center (ia h_u, ib h_v, ic h_w), h = side 2^{-refine},
/// whose rectangle contains omega.
template <class Fn>
void for_each_lattice_center(const PhasePoint& omega, const ScaleTriple& s, int refine, Fn&& fn) {
  double hu = std::ldexp(s.u, -refine), hv = std::ldexp(s.v, -refine), hw = std::ldexp(s.w, -refine);
  auto a_lo = static_cast<std::int64_t>(std::ceil((omega.a - s.u) / hu));
  auto a_hi = static_cast<std::int64_t>(std::floor((omega.a + s.u) / hu));
  auto c_lo = static_cast<std::int64_t>(std::ceil((omega.c - s.w) / hw));
  auto c_hi = static_cast<std::int64_t>(std::floor((omega.c + s.w) / hw));
  for (auto ia = a_lo; ia <= a_hi; ++ia) {
    double a0 = static_cast<double>(ia) * hu;
    for (auto ic = c_lo; ic <= c_hi; ++ic) {
      double c0 = static_cast<double>(ic) * hw;
      double bp = omega.b - c0 * (omega.a - a0);
      auto b_lo = static_cast<std::int64_t>(std::ceil((bp - s.v) / hv));
      auto b_hi = static_cast<std::int64_t>(std::floor((bp + s.v) / hv));
      for (auto ib = b_lo; ib <= b_hi; ++ib) fn(ia, ic, ib);
    }
  }
}

/// Number of centers of the lattice (side 2^{-refine})Z^3 whose rectangle contains omega.
inline long double lattice_multiplicity(const PhasePoint& omega, const ScaleTriple& s, int refine) {
  require_dyadic_admissible(s);
  double hu = std::ldexp(s.u, -refine), hv = std::ldexp(s.v, -refine), hw = std::ldexp(s.w, -refine);
  auto a_lo = static_cast<std::int64_t>(std::ceil((omega.a - s.u) / hu));
  auto a_hi = static_cast<std::int64_t>(std::floor((omega.a + s.u) / hu));
  auto c_lo = static_cast<std::int64_t>(std::ceil((omega.c - s.w) / hw));
  auto c_hi = static_cast<std::int64_t>(std::floor((omega.c + s.w) / hw));
  long double total = 0;
  for (auto ia = a_lo; ia <= a_hi; ++ia) {
    double a0 = static_cast<double>(ia) * hu;
    for (auto ic = c_lo; ic <= c_hi; ++ic) {
      double c0 = static_cast<double>(ic) * hw;
      double bp = omega.b - c0 * (omega.a - a0);
      auto b_lo = static_cast<std::int64_t>(std::ceil((bp - s.v) / hv));
      auto b_hi = static_cast<std::int64_t>(std::floor((bp + s.v) / hv));
      if (b_hi >= b_lo) total += static_cast<long double>(b_hi - b_lo + 1);
    }
  }
  return total;
}

struct ConcentrationResult {
  std::size_t count = 0;
  PhaseRect witness;
};

/// M_{u×v×w}: max over half-side lattice rectangles of the number of points inside (no validation).
inline ConcentrationResult concentration_of(std::span<const PhasePoint> points, const ScaleTriple& s) {
  ConcentrationResult out;
  out.witness.scale = s;
  out.witness.dyadic = true;
  if (points.empty()) return out;
  std::vector<TileKey> hits;
  hits.reserve(points.size() * 64);
  for (const auto& p : points)
    for_each_lattice_center(p, s, 1, [&](std::int64_t ia, std::int64_t ic, std::int64_t ib) { hits.push_back({ia, ic, ib}); });
  std::sort(hits.begin(), hits.end());
  std::size_t best = 0;
  TileKey best_key{};
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    if (j - i > best) {
      best = j - i;
      best_key = hits[i];
    }
    i = j;
  }
  out.count = best;
  out.witness.center = {static_cast<double>(best_key.ia) * s.u / 2, static_cast<double>(best_key.ib) * s.v / 2,
                        static_cast<double>(best_key.ic) * s.w / 2};
  return out;
}

inline ConcentrationResult concentration_witness(const Configuration& X, const ScaleTriple& scale) {
  require_dyadic_admissible(scale);
  if (scale.min_side() < X.delta()) throw std::invalid_argument("scale side below the configuration's delta");
  return concentration_of(X.points(), scale);
}

/// M_{u×v×w}(X) = max |X ∩ R|.
inline std::size_t concentration(const Configuration& X, const ScaleTriple& scale) {
  return concentration_witness(X, scale).count;
}

// ---------------------------------------------------------------------------
// Rectangle queries.

namespace detail {

/// Calls fn(ia, ic, ib_lo, ib_hi) for tile-key ranges (at bucket scale) that can hold a point
/// ω' with d_query(center → ω') <= lambda.
template <class Fn>
void for_each_candidate_range(const PhasePoint& center, const ScaleTriple& query, double lambda, const ScaleTriple& bucket,
                              Fn&& fn) {
  const double ru = lambda * query.u, rv = lambda * query.v, rw = lambda * query.w;
  const double bu = bucket.u, bv = bucket.v, bw = bucket.w;
  auto cell = [](double x, double side) { return static_cast<std::int64_t>(std::floor((x + 1) / (2 * side))); };
  std::int64_t a_lo = cell(center.a - ru, bu) - 1, a_hi = cell(center.a + ru, bu);
  std::int64_t c_lo = cell(center.c - rw, bw) - 1, c_hi = cell(center.c + rw, bw);
  for (auto ia = a_lo; ia <= a_hi; ++ia) {
    double a0 = tile_coordinate(ia, bu);
    double lo = std::max(a0 - bu, center.a - ru), hi = std::min(a0 + bu, center.a + ru);
    if (lo > hi) continue;
    for (auto ic = c_lo; ic <= c_hi; ++ic) {
      double c0 = tile_coordinate(ic, bw);
      if (c0 + bw < center.c - rw || c0 - bw > center.c + rw) continue;
      // b' - c0 (a' - a0) must lie within rv of b + c (a' - a) - c0 (a' - a0) for some a' in [lo, hi].
      double g1 = center.c * (lo - center.a) - c0 * (lo - a0);
      double g2 = center.c * (hi - center.a) - c0 * (hi - a0);
      double blo = center.b + std::min(g1, g2) - rv, bhi = center.b + std::max(g1, g2) + rv;
      fn(ia, ic, cell(blo, bv) - 1, cell(bhi, bv) + 1);
    }
  }
}

}  // namespace detail

/// Buckets points by tile at a fixed scale and answers "which points lie in λ·R_s(ω)".
class RectIndex {
 public:
  RectIndex(std::span<const PhasePoint> points, const ScaleTriple& bucket) : points_(points), bucket_(bucket) {
    require_admissible(bucket_);
    if (!bucket_.bounded()) throw std::invalid_argument("RectIndex needs a bounded bucket scale");
    std::vector<std::pair<TileKey, std::uint32_t>> keyed;
    keyed.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) keyed.emplace_back(tile_key(points[i], bucket_), static_cast<std::uint32_t>(i));
    std::sort(keyed.begin(), keyed.end());
    order_.reserve(keyed.size());
    for (std::size_t i = 0; i < keyed.size(); ++i) {
      if (i == 0 || !(keyed[i].first == keyed[i - 1].first)) {
        keys_.push_back(keyed[i].first);
        offsets_.push_back(static_cast<std::uint32_t>(i));
      }
      order_.push_back(keyed[i].second);
    }
    offsets_.push_back(static_cast<std::uint32_t>(keyed.size()));
  }

  /// Calls fn(index) for every point ω' with d_query(center → ω') <= lambda.
  template <class Fn>
  void for_each_in(const PhasePoint& center, const ScaleTriple& query, double lambda, Fn&& fn) const {
    detail::for_each_candidate_range(center, query, lambda, bucket_, [&](std::int64_t ia, std::int64_t ic, std::int64_t lo, std::int64_t hi) {
      auto it = std::lower_bound(keys_.begin(), keys_.end(), TileKey{ia, ic, lo});
      for (; it != keys_.end() && !(TileKey{ia, ic, hi} < *it); ++it) {
        auto k = static_cast<std::size_t>(it - keys_.begin());
        for (auto j = offsets_[k]; j < offsets_[k + 1]; ++j) {
          std::uint32_t idx = order_[j];
          if (detail::distance_unchecked(center, points_[idx], query) <= lambda) fn(static_cast<std::size_t>(idx));
        }
      }
    });
  }

  /// Same count as for_each_in; tiles lying well inside the query rectangle are counted whole.
  std::size_t count_in(const PhasePoint& center, const ScaleTriple& query, double lambda = 1) const {
    constexpr double kMargin = 1 - 1e-9;
    const double ru = lambda * query.u * kMargin, rv = lambda * query.v * kMargin, rw = lambda * query.w * kMargin;
    std::size_t n = 0;
    detail::for_each_candidate_range(center, query, lambda, bucket_, [&](std::int64_t ia, std::int64_t ic, std::int64_t lo, std::int64_t hi) {
      const double a0 = detail::tile_coordinate(ia, bucket_.u), c0 = detail::tile_coordinate(ic, bucket_.w);
      const bool ac_inside = std::abs(a0 - center.a) + bucket_.u <= ru && std::abs(c0 - center.c) + bucket_.w <= rw;
      auto it = std::lower_bound(keys_.begin(), keys_.end(), TileKey{ia, ic, lo});
      for (; it != keys_.end() && !(TileKey{ia, ic, hi} < *it); ++it) {
        auto k = static_cast<std::size_t>(it - keys_.begin());
        if (ac_inside) {
          const double b0 = detail::tile_coordinate(it->ib, bucket_.v);
          double worst = 0;
          for (double a1 : {a0 - bucket_.u, a0 + bucket_.u})
            worst = std::max(worst, std::abs(b0 - center.b + c0 * (a1 - a0) - center.c * (a1 - center.a)));
          if (worst + bucket_.v <= rv) {
            n += offsets_[k + 1] - offsets_[k];
            continue;
          }
        }
        for (auto j = offsets_[k]; j < offsets_[k + 1]; ++j)
          if (detail::distance_unchecked(center, points_[order_[j]], query) <= lambda) ++n;
      }
    });
    return n;
  }

 private:
  std::span<const PhasePoint> points_;
  ScaleTriple bucket_;
  std::vector<TileKey> keys_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> order_;
};

/// |X ∩ R_s(ω)| for every ω in X.
inline std::vector<std::size_t> rect_counts(std::span<const PhasePoint> points, const ScaleTriple& s) {
  if (points.empty()) return {};
  const double occupancy = static_cast<double>(points.size()) / static_cast<double>(count_tiles(points, s));
  RectIndex index(points, occupancy > 64 ? s.scaled(0.125) : s);
  std::vector<std::size_t> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = index.count_in(points[i], s);
  return out;
}

// ---------------------------------------------------------------------------

/// Blowup ψ_R of a u0 × u0w0 × w0 rectangle onto the full phase space, applied to X ∩ R.
inline Configuration rescale(const PhaseRect& rect, const Configuration& X) {
  const auto& s = rect.scale;
  require_admissible(s);
  if (!s.bounded() || s.v != s.u * s.w)
    throw std::invalid_argument("rescale needs a rectangle of the form u0 x u0w0 x w0, got " + s.to_string());
  const auto& o = rect.center;
  std::vector<PhasePoint> out;
  for (const auto& p : X.points()) {
    if (!rect.contains(p)) continue;
    out.push_back({(p.a - o.a) / s.u, (p.b - (o.b + o.c * (p.a - o.a))) / (s.u * s.w), (p.c - o.c) / s.w});
  }
  Provenance prov = X.provenance();
  prov.params += (prov.params.empty() ? "" : ";") + std::string("rescaled");
  return Configuration(std::move(out), std::min(1.0, X.delta() / (s.u * s.w)), prov);
}

/// Greedy maximal λ-separated subset (directed distances >= λ both ways). Returns indices into X.
inline std::vector<std::size_t> separated_net(const Configuration& X, const ScaleTriple& scale, double lambda) {
  require_admissible(scale);
  if (!scale.bounded()) throw std::invalid_argument("separated_net needs a bounded scale");
  if (!(lambda >= 1)) throw std::invalid_argument("separated_net needs lambda >= 1");
  const ScaleTriple cell = scale.scaled(lambda);
  const double reach = lambda + lambda * lambda;
  struct KeyHash {
    std::size_t operator()(const TileKey& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.ia) * 0x9e3779b97f4a7c15ULL;
      h ^= static_cast<std::uint64_t>(k.ic) + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
      h ^= static_cast<std::uint64_t>(k.ib) + 0x94d049bb133111ebULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<TileKey, std::vector<std::size_t>, KeyHash> buckets;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto& p = X[i];
    bool clash = false;
    // A clash in either direction forces d(p -> kept) < λ + λ² by approximate symmetry.
    detail::for_each_candidate_range(p, scale, reach, cell, [&](std::int64_t ia, std::int64_t ic, std::int64_t lo, std::int64_t hi) {
      for (auto ib = lo; ib <= hi && !clash; ++ib) {
        auto it = buckets.find({ia, ic, ib});
        if (it == buckets.end()) continue;
        for (auto j : it->second)
          if (detail::distance_unchecked(X[j], p, scale) < lambda || detail::distance_unchecked(p, X[j], scale) < lambda) {
            clash = true;
            break;
          }
      }
    });
    if (!clash) {
      kept.push_back(i);
      buckets[tile_key(p, cell)].push_back(i);
    }
  }
  return kept;
}

}  // namespace inclab
