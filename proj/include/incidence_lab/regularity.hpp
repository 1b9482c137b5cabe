#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "incidence_lab/common.hpp"
#include "incidence_lab/phase_space.hpp"

namespace inclab {

// ---------------------------------------------------------------------------
// Hypergraph regularization.

/// Multiset of tuples (a_1, ..., a_t) with a_i drawn from vertex class A_i.
class Hypergraph {
 public:
  explicit Hypergraph(std::size_t classes) : classes_(classes) {
    if (classes == 0) throw std::invalid_argument("hypergraph needs at least one vertex class");
  }

  void add(std::span<const std::uint32_t> tuple) {
    if (tuple.size() != classes_) throw std::invalid_argument("tuple length does not match the number of classes");
    flat_.insert(flat_.end(), tuple.begin(), tuple.end());
  }
  void add(std::initializer_list<std::uint32_t> tuple) { add(std::span<const std::uint32_t>(tuple.begin(), tuple.size())); }

  std::size_t classes() const { return classes_; }
  std::size_t edges() const { return flat_.size() / classes_; }
  std::uint32_t vertex(std::size_t edge, std::size_t cls) const { return flat_[edge * classes_ + cls]; }

 private:
  std::size_t classes_;
  std::vector<std::uint32_t> flat_;
};

struct DegreeBand {
  std::size_t vertices = 0;    ///< surviving vertices of the class
  double top = 0;              ///< d_i, the dyadic upper end of the chosen degree class
  double threshold = 0;        ///< pruning threshold |H''| / (10 t |A_i''|)
  std::size_t min_degree = 0;  ///< observed on the output
  std::size_t max_degree = 0;
};

struct RegularizationResult {
  std::vector<std::size_t> kept;  ///< surviving edge indices, increasing
  std::vector<DegreeBand> bands;
  std::size_t input_edges = 0;
  std::size_t stage1_edges = 0;  ///< |H''| after dyadic degree bucketing
  double constant_C = 4;
  double log2_K = 0;  ///< log2 of K = (C t log2 N)^t

  /// max_i d_i / min degree over the output.
  double band_ratio() const {
    double r = 1;
    for (const auto& b : bands)
      if (b.min_degree > 0) r = std::max(r, b.top / static_cast<double>(b.min_degree));
    return r;
  }
  bool size_guarantee_holds() const {
    return std::log2(static_cast<double>(input_edges)) - std::log2(static_cast<double>(std::max<std::size_t>(kept.size(), 1))) <= log2_K + 1e-9 &&
           !kept.empty();
  }
  bool bands_hold() const {
    for (const auto& b : bands)
      if (b.vertices > 0 && (static_cast<double>(b.max_degree) > b.top || static_cast<double>(b.min_degree) < b.threshold)) return false;
    return true;
  }
};

/// Dyadic degree bucketing class by class, then pruning of low-degree vertices.
inline RegularizationResult regularize_hypergraph(const Hypergraph& H) {
  const std::size_t t = H.classes();
  const std::size_t E = H.edges();
  if (E == 0) throw std::invalid_argument("regularize_hypergraph needs a nonempty hypergraph");
  RegularizationResult out;
  out.input_edges = E;

  // Dense vertex ids per class.
  std::vector<std::vector<std::uint32_t>> local(t, std::vector<std::uint32_t>(E));
  std::vector<std::size_t> class_size(t, 0);
  for (std::size_t i = 0; i < t; ++i) {
    std::unordered_map<std::uint32_t, std::uint32_t> ids;
    for (std::size_t e = 0; e < E; ++e) {
      auto [it, fresh] = ids.try_emplace(H.vertex(e, i), static_cast<std::uint32_t>(ids.size()));
      local[i][e] = it->second;
    }
    class_size[i] = ids.size();
  }
  std::size_t N = std::max<std::size_t>(2, *std::max_element(class_size.begin(), class_size.end()));
  out.log2_K = static_cast<double>(t) * std::log2(out.constant_C * static_cast<double>(t) * std::log2(static_cast<double>(N)));

  std::vector<char> alive(E, 1);
  std::vector<double> top(t, 0);
  std::vector<std::size_t> deg;
  for (std::size_t i = 0; i < t; ++i) {
    deg.assign(class_size[i], 0);
    for (std::size_t e = 0; e < E; ++e)
      if (alive[e]) ++deg[local[i][e]];
    // bucket k holds degrees in (2^{k-1}, 2^k]
    std::map<int, std::pair<std::size_t, std::size_t>> buckets;  // k -> (edges, vertices)
    std::vector<int> bucket_of(class_size[i], -1);
    for (std::size_t a = 0; a < class_size[i]; ++a) {
      if (deg[a] == 0) continue;
      int k = 0;
      while ((std::size_t{1} << k) < deg[a]) ++k;
      bucket_of[a] = k;
      buckets[k].first += deg[a];
      buckets[k].second += 1;
    }
    int best = -1;
    std::pair<std::size_t, std::size_t> best_val{0, 0};
    for (const auto& [k, val] : buckets)
      if (best < 0 || val > best_val) {  // more edges, then more vertices, then the smaller k
        best = k;
        best_val = val;
      }
    top[i] = std::ldexp(1.0, best);
    for (std::size_t e = 0; e < E; ++e)
      if (alive[e] && bucket_of[local[i][e]] != best) alive[e] = 0;
  }

  std::size_t stage1 = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 1));
  out.stage1_edges = stage1;
  std::vector<double> threshold(t, 0);
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<char> seen(class_size[i], 0);
    std::size_t count = 0;
    for (std::size_t e = 0; e < E; ++e)
      if (alive[e] && !seen[local[i][e]]) {
        seen[local[i][e]] = 1;
        ++count;
      }
    threshold[i] = static_cast<double>(stage1) / (10.0 * static_cast<double>(t) * static_cast<double>(count));
  }

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < t; ++i) {
      deg.assign(class_size[i], 0);
      for (std::size_t e = 0; e < E; ++e)
        if (alive[e]) ++deg[local[i][e]];
      for (std::size_t e = 0; e < E; ++e)
        if (alive[e] && static_cast<double>(deg[local[i][e]]) < threshold[i]) {
          alive[e] = 0;
          changed = true;
        }
    }
  }

  for (std::size_t e = 0; e < E; ++e)
    if (alive[e]) out.kept.push_back(e);
  out.bands.resize(t);
  for (std::size_t i = 0; i < t; ++i) {
    deg.assign(class_size[i], 0);
    for (auto e : out.kept) ++deg[local[i][e]];
    auto& b = out.bands[i];
    b.top = top[i];
    b.threshold = threshold[i];
    b.min_degree = std::numeric_limits<std::size_t>::max();
    for (auto d : deg)
      if (d > 0) {
        ++b.vertices;
        b.min_degree = std::min(b.min_degree, d);
        b.max_degree = std::max(b.max_degree, d);
      }
    if (b.vertices == 0) b.min_degree = 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Uniformity certificates.

struct CertificateEntry {
  ScaleTriple scale;
  std::size_t min_count = 0;      ///< min over ω ∈ X of |X ∩ R(ω)|
  std::size_t concentration = 0;  ///< M_scale(X)
};

struct UniformityCertificate {
  std::vector<CertificateEntry> entries;
  double K = 1;  ///< smallest K with min·K >= M at every scale

  bool holds() const {
    for (const auto& e : entries)
      if (static_cast<double>(e.min_count) * K < static_cast<double>(e.concentration)) return false;
    return true;
  }
};

inline UniformityCertificate certify_uniformity(const Configuration& X, std::span<const ScaleTriple> scales) {
  UniformityCertificate cert;
  for (const auto& s : scales) {
    require_dyadic_admissible(s);
    CertificateEntry e;
    e.scale = s;
    if (!X.empty()) {
      auto counts = rect_counts(X.points(), s);
      e.min_count = *std::min_element(counts.begin(), counts.end());
      e.concentration = concentration_of(X.points(), s).count;
      cert.K = std::max(cert.K, static_cast<double>(e.concentration) / static_cast<double>(e.min_count));
    }
    cert.entries.push_back(e);
  }
  return cert;
}

/// All admissible triples 2^{-iT} x 2^{-kT} x 2^{-jT} with i, j, k in [0, m] and k <= i + j.
inline std::vector<ScaleTriple> admissible_scale_family(int m, int T) {
  if (m < 1 || T < 1) throw std::invalid_argument("scale family needs m >= 1 and T >= 1");
  std::vector<ScaleTriple> out;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j)
      for (int k = 0; k <= std::min(m, i + j); ++k) out.push_back({dyadic(i * T), dyadic(k * T), dyadic(j * T)});
  return out;
}

struct UniformizeResult {
  Configuration output;
  std::vector<std::size_t> kept_indices;
  UniformityCertificate certificate;
  std::vector<ScaleTriple> scales;
  double cube_side = 0;
  double log2_lemma_K = 0;  ///< log2 of (C M log2(1/cube_side))^{M+1}, C = 4
  RegularizationResult regularization;

  /// Certificate K within the lemma's K, and |X'| >= |X| / K_lemma.
  bool passes(std::size_t input_size) const {
    if (input_size == 0) return true;
    if (!certificate.holds()) return false;
    if (std::log2(certificate.K) > log2_lemma_K) return false;
    if (output.empty()) return false;
    return std::log2(static_cast<double>(input_size)) - std::log2(static_cast<double>(output.size())) <= log2_lemma_K;
  }
};

/// Uniform subset extraction over the scale list {2^{-jT}}_{j=0..m}.
inline UniformizeResult uniformize(const Configuration& X, int m, int T) {
  if (m < 1 || T < 1) throw std::invalid_argument("uniformize needs m >= 1 and T >= 1");
  if (m * T > 20) throw std::invalid_argument("uniformize: scale list too fine for the 2^-40 cube separation (need m*T <= 20)");
  if (!X.in_omega()) throw std::invalid_argument("uniformize needs a configuration inside Omega");
  UniformizeResult out;
  out.scales = admissible_scale_family(m, T);
  const std::size_t M = out.scales.size();
  out.cube_side = dyadic(40 + m * T);
  out.log2_lemma_K = static_cast<double>(M + 1) * std::log2(4.0 * static_cast<double>(M) * (40.0 + m * T));
  if (X.empty()) {
    out.output = X;
    out.certificate = certify_uniformity(X, out.scales);
    return out;
  }

  // Dyadic cube pigeonholing: keep the cubes whose occupancy lies in one dyadic class.
  auto cube = [&](const PhasePoint& p) {
    return TileKey{static_cast<std::int64_t>(std::floor((p.a + 1) / out.cube_side)), static_cast<std::int64_t>(std::floor((p.c + 1) / out.cube_side)),
                   static_cast<std::int64_t>(std::floor((p.b + 1) / out.cube_side))};
  };
  std::vector<std::pair<TileKey, std::size_t>> keyed;
  keyed.reserve(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) keyed.emplace_back(cube(X[i]), i);
  std::sort(keyed.begin(), keyed.end());
  struct Cube {
    std::size_t begin, end;
  };
  std::vector<Cube> cubes;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    while (j < keyed.size() && keyed[j].first == keyed[i].first) ++j;
    cubes.push_back({i, j});
    i = j;
  }
  std::map<int, std::size_t> mass;
  auto dyadic_class = [](std::size_t r) {
    int k = 0;
    while ((std::size_t{1} << k) < r) ++k;
    return k;
  };
  for (const auto& q : cubes) mass[dyadic_class(q.end - q.begin)] += q.end - q.begin;
  int chosen = -1;
  std::size_t chosen_mass = 0;
  for (const auto& [k, pts] : mass)
    if (pts > chosen_mass) {
      chosen = k;
      chosen_mass = pts;
    }
  std::vector<Cube> selected;
  for (const auto& q : cubes)
    if (dyadic_class(q.end - q.begin) == chosen) selected.push_back(q);

  // One tuple per cube: the quarter-scale tile of each scale containing the cube's first point.
  Hypergraph H(M);
  std::vector<std::map<TileKey, std::uint32_t>> ids(M);
  std::vector<std::uint32_t> tuple(M);
  for (const auto& q : selected) {
    const auto& rep = X[keyed[q.begin].second];
    for (std::size_t s = 0; s < M; ++s) {
      auto key = tile_key(rep, out.scales[s].scaled(0.25));
      auto [it, fresh] = ids[s].try_emplace(key, static_cast<std::uint32_t>(ids[s].size()));
      tuple[s] = it->second;
    }
    H.add(tuple);
  }
  out.regularization = regularize_hypergraph(H);

  for (auto e : out.regularization.kept)
    for (std::size_t i = selected[e].begin; i < selected[e].end; ++i) out.kept_indices.push_back(keyed[i].second);
  std::sort(out.kept_indices.begin(), out.kept_indices.end());
  out.output = subset(X, out.kept_indices);
  out.certificate = certify_uniformity(out.output, out.scales);
  return out;
}

/// M_scale(X) · |X|_scale / |X| (the constant C of the weak uniformity inequality taken as 1).
inline double weak_uniformity_constant(const Configuration& X, const ScaleTriple& scale) {
  if (X.empty()) return 0;
  return static_cast<double>(concentration(X, scale)) * static_cast<double>(covering_number(X, scale)) / static_cast<double>(X.size());
}

// ---------------------------------------------------------------------------
// Katz-Tao extraction on the line.

struct Frostman1D {
  bool ok = true;
  double worst_ratio = 0;  ///< max |P ∩ I| / (C max(|I|, δ)^s |P|) over intervals I
  double lo = 0, hi = 0;   ///< witness interval
  std::size_t count = 0;
};

/// Exhaustive check of |P ∩ I| <= C w^s |P| over closed intervals I of length w > δ.
inline Frostman1D check_frostman_1d(std::span<const double> P, double delta, double s, double C) {
  std::vector<double> p(P.begin(), P.end());
  std::sort(p.begin(), p.end());
  Frostman1D r;
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i; j < p.size(); ++j) {
      double w = std::max(p[j] - p[i], delta);
      double ratio = static_cast<double>(j - i + 1) / (C * std::pow(w, s) * n);
      if (ratio > r.worst_ratio) {
        r.worst_ratio = ratio;
        r.lo = p[i];
        r.hi = p[j];
        r.count = j - i + 1;
      }
    }
  r.ok = r.worst_ratio <= 1 + 1e-12;
  return r;
}

struct KatzTaoWindows {
  std::size_t violations = 0;  ///< windows (over all lengths) exceeding 4 (w/δ)^s
  std::size_t dyadic_violations = 0;
  double worst_ratio = 0;
  std::vector<std::pair<double, std::size_t>> dyadic_max;  ///< (w, max count in a window of length w)
};

/// Exhaustive window scan of the bound |P ∩ [x, x+w]| <= 4 (w/δ)^s, w ∈ [δ, 1].
inline KatzTaoWindows katz_tao_windows(std::span<const double> P, double delta, double s) {
  std::vector<double> p(P.begin(), P.end());
  std::sort(p.begin(), p.end());
  KatzTaoWindows r;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i; j < p.size() && p[j] - p[i] <= 1; ++j) {
      double w = std::max(p[j] - p[i], delta);
      double ratio = static_cast<double>(j - i + 1) / (4 * std::pow(w / delta, s));
      r.worst_ratio = std::max(r.worst_ratio, ratio);
      if (ratio > 1 + 1e-12) ++r.violations;
    }
  for (double w = delta; w <= 1 + 1e-12; w *= 2) {
    std::size_t best = 0;
    for (std::size_t i = 0, j = 0; i < p.size(); ++i) {
      if (j < i) j = i;
      while (j + 1 < p.size() && p[j + 1] - p[i] <= w) ++j;
      if (!p.empty()) best = std::max(best, j - i + 1);
    }
    r.dyadic_max.emplace_back(w, best);
    if (static_cast<double>(best) > 4 * std::pow(w / delta, s) * (1 + 1e-12)) ++r.dyadic_violations;
  }
  return r;
}

struct KatzTaoResult {
  std::vector<double> points;
  std::size_t steps = 0;     ///< greedy steps actually run
  std::size_t required = 0;  ///< ⌈(1/6) C^{-1} δ^{-s}⌉
  double threshold = 0;      ///< C δ^s |P|
  KatzTaoWindows windows;
};

/// Greedy extraction: repeatedly keep the center of the smallest interval around a remaining point holding
/// at least C δ^s |P| remaining points, and delete that interval.
inline KatzTaoResult katz_tao_extract(std::span<const double> P, double delta, double s, double C) {
  if (!(delta > 0) || !(C > 0) || s < 0) throw std::invalid_argument("katz_tao_extract needs delta > 0, C > 0, s >= 0");
  if (P.empty()) throw std::invalid_argument("katz_tao_extract needs a nonempty set");
  std::vector<double> rem(P.begin(), P.end());
  std::sort(rem.begin(), rem.end());
  for (double x : rem)
    if (std::abs(x) > 1) throw std::invalid_argument("katz_tao_extract: point outside [-1,1]");
  for (std::size_t i = 1; i < rem.size(); ++i)
    if (rem[i] - rem[i - 1] < delta * (1 - 1e-9)) throw std::invalid_argument("katz_tao_extract: input is not delta-separated");
  auto fr = check_frostman_1d(rem, delta, s, C);
  if (!fr.ok)
    throw std::invalid_argument("katz_tao_extract: Frostman condition fails on [" + format_real(fr.lo) + ", " + format_real(fr.hi) + "]");

  KatzTaoResult out;
  out.threshold = C * std::pow(delta, s) * static_cast<double>(rem.size());
  out.required = static_cast<std::size_t>(std::ceil(std::pow(delta, -s) / (6 * C) - 1e-9));
  const auto need = std::min(rem.size(), static_cast<std::size_t>(std::max(1.0, std::ceil(out.threshold - 1e-9))));
  while (out.steps < out.required && rem.size() >= need) {
    std::size_t best_i = 0;
    double best_r = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rem.size(); ++i) {
      std::size_t l = i, r = i, count = 1;
      double radius = 0;
      while (count < need) {
        double left = l > 0 ? rem[i] - rem[l - 1] : std::numeric_limits<double>::infinity();
        double right = r + 1 < rem.size() ? rem[r + 1] - rem[i] : std::numeric_limits<double>::infinity();
        if (left <= right) {
          --l;
          radius = std::max(radius, left);
        } else {
          ++r;
          radius = std::max(radius, right);
        }
        ++count;
      }
      if (radius < best_r) {
        best_r = radius;
        best_i = i;
      }
    }
    double center = rem[best_i];
    out.points.push_back(center);
    std::erase_if(rem, [&](double x) { return std::abs(x - center) <= best_r; });
    ++out.steps;
  }
  std::sort(out.points.begin(), out.points.end());
  out.windows = katz_tao_windows(out.points, delta, s);
  return out;
}

// ---------------------------------------------------------------------------
// Frostman scans in phase space.

struct FrostmanEntry {
  ScaleTriple scale;
  std::size_t concentration = 0;
  double ratio = 0;  ///< M u^{-α} w^{-β} / |X|
};

struct FrostmanReport {
  double alpha = 0;
  double beta = 0;
  double C = 0;
  PhaseRect witness;
  std::vector<FrostmanEntry> entries;
};

/// Scans u x uw x w dyadic scales (uw >= δ) for the max of |X ∩ R| u^{-α} w^{-β} / |X|.
inline FrostmanReport check_frostman(const Configuration& X, double alpha, double beta, std::span<const ScaleTriple> scale_grid = {}) {
  if (!(alpha > 0) || !(beta > 0)) throw std::invalid_argument("check_frostman needs positive exponents");
  FrostmanReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  if (X.empty()) return rep;
  std::vector<ScaleTriple> scales(scale_grid.begin(), scale_grid.end());
  if (scales.empty()) {
    const int L = dyadic_exponent(dyadic_floor(X.delta()));
    for (int i = 0; i <= L; ++i)
      for (int k = 0; i + k <= L; ++k) scales.push_back({dyadic(i), dyadic(i + k), dyadic(k)});
  }
  const double n = static_cast<double>(X.size());
  for (const auto& s : scales) {
    if (s.v != s.u * s.w) throw std::invalid_argument("check_frostman scales must be of the form u x uw x w");
    auto c = concentration_witness(X, s);
    FrostmanEntry e{s, c.count, static_cast<double>(c.count) * std::pow(s.u, -alpha) * std::pow(s.w, -beta) / n};
    if (e.ratio > rep.C) {
      rep.C = e.ratio;
      rep.witness = c.witness;
    }
    rep.entries.push_back(e);
  }
  return rep;
}

inline PhaseRect best_rectangle(const Configuration& X, double alpha, double beta) {
  if (X.empty()) throw std::invalid_argument("best_rectangle of an empty configuration");
  return check_frostman(X, alpha, beta).witness;
}

}  // namespace inclab
