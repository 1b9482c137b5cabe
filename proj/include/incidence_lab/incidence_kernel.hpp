#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "incidence_lab/common.hpp"
#include "incidence_lab/phase_space.hpp"

namespace inclab {

/// Tabulated η = 1_{[-1/2,1/2]} * κ * κ_{1/2} on [-1, 1], κ the unit-mass bump supported in |x| < 1/50.
class SmoothingKernel {
 public:
  explicit SmoothingKernel(double resolution = 1e-4) {
    if (!(resolution > 0) || resolution > 1e-3) throw std::invalid_argument("kernel resolution must lie in (0, 1e-3]");
    build(resolution);
  }

  double resolution() const { return step_; }
  std::span<const double> table() const { return table_; }

  /// η(x), linear interpolation between table nodes.
  double operator()(double x) const {
    x = std::abs(x);
    if (x >= 1) return 0.0;
    double pos = (x + 1) / step_;
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= table_.size()) return table_.back();
    double frac = pos - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

  /// ∫η by the trapezoid rule on the table (exact for the interpolant).
  double integral() const {
    double s = 0;
    for (std::size_t i = 0; i + 1 < table_.size(); ++i) s += 0.5 * (table_[i] + table_[i + 1]);
    return s * step_;
  }

 private:
  static double bump(double x) {
    double y = 50 * x;
    if (std::abs(y) >= 1) return 0.0;
    return std::exp(-1.0 / (1.0 - y * y));
  }

  template <class F>
  static double simpson(F&& f, double lo, double hi, int intervals) {
    if (intervals % 2) ++intervals;
    double h = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3;
  }

  void build(double resolution) {
    const double kappa_mass = simpson(bump, -0.02, 0.02, 20000);
    auto kappa = [&](double x) { return bump(x) / kappa_mass; };
    auto kappa_half = [&](double x) { return 2 * kappa(2 * x); };

    // g = κ * κ_{1/2}, supported in |s| < 0.03; G its distribution function.
    const double g_step = 1e-5;
    const int g_nodes = static_cast<int>(std::lround(0.06 / g_step)) + 1;
    std::vector<double> g(static_cast<std::size_t>(g_nodes));
    for (int i = 0; i < g_nodes; ++i) {
      double s = -0.03 + i * g_step;
      double lo = std::max(-0.02, s - 0.01), hi = std::min(0.02, s + 0.01);
      g[i] = lo < hi ? simpson([&](double r) { return kappa(r) * kappa_half(s - r); }, lo, hi, 400) : 0.0;
    }
    std::vector<double> G(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) G[i] = G[i - 1] + 0.5 * (g[i - 1] + g[i]) * g_step;
    const double total = G.back();
    for (auto& x : G) x /= total;
    auto cdf = [&](double x) {
      if (x <= -0.03) return 0.0;
      if (x >= 0.03) return 1.0;
      double pos = (x + 0.03) / g_step;
      auto i = static_cast<std::size_t>(pos);
      if (i + 1 >= G.size()) return 1.0;
      double frac = pos - static_cast<double>(i);
      return G[i] + frac * (G[i + 1] - G[i]);
    };

    const auto half_nodes = static_cast<std::size_t>(std::ceil(1.0 / resolution));
    step_ = 1.0 / static_cast<double>(half_nodes);
    table_.assign(2 * half_nodes + 1, 0.0);
    for (std::size_t i = 0; i <= half_nodes; ++i) {
      double t = static_cast<double>(i) * step_;
      double v = std::clamp(cdf(t + 0.5) - cdf(t - 0.5), 0.0, 1.0);
      table_[half_nodes + i] = v;
      table_[half_nodes - i] = v;
    }
  }

  double step_ = 1e-4;
  std::vector<double> table_;
};

inline SmoothingKernel build_kernel(double resolution) { return SmoothingKernel(resolution); }

/// Shared default kernel at resolution 1e-4.
inline const SmoothingKernel& default_kernel() {
  static const SmoothingKernel kernel(1e-4);
  return kernel;
}

/// Line of slope c through (a, b).
struct SlopeLine {
  double a = 0;
  double b = 0;
  double c = 0;
  double height(double x) const { return b + c * (x - a); }
};

/// |y - height(x)| / sqrt(1 + c²): the Euclidean distance from p to the line.
inline double point_line_distance(const Point2& p, const SlopeLine& l) {
  return std::abs(p.y - l.height(p.x)) / std::sqrt(1 + l.c * l.c);
}

inline std::vector<SlopeLine> lines_of(const Configuration& X) {
  std::vector<SlopeLine> out;
  out.reserve(X.size());
  for (const auto& p : X.points()) out.push_back({p.a, p.b, p.c});
  return out;
}

/// Visits fn(point index, line index, distance) for every pair at distance <= radius.
/// Points are bucketed into vertical strips sorted by height, so each line only inspects a narrow window per strip.
template <class Fn>
void for_each_near_pair(std::span<const Point2> P, std::span<const SlopeLine> L, double radius, Fn&& fn) {
  if (P.empty() || L.empty()) return;
  double xmin = P[0].x, xmax = P[0].x;
  for (const auto& p : P) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  const double span_x = xmax - xmin;
  std::size_t nstrips = 1;
  if (span_x > 0 && radius > 0) {
    double by_radius = std::ceil(span_x / radius);
    double by_count = std::ceil(std::sqrt(static_cast<double>(P.size())));
    nstrips = static_cast<std::size_t>(std::max(1.0, std::min(by_radius, by_count)));
  }
  const double width = nstrips > 1 ? span_x / static_cast<double>(nstrips) : std::max(span_x, 0.0);
  auto strip_of = [&](double x) {
    if (nstrips == 1) return std::size_t{0};
    auto s = static_cast<std::size_t>(std::max(0.0, std::floor((x - xmin) / width)));
    return std::min(s, nstrips - 1);
  };
  std::vector<std::size_t> start(nstrips + 1, 0);
  for (const auto& p : P) ++start[strip_of(p.x) + 1];
  for (std::size_t s = 0; s < nstrips; ++s) start[s + 1] += start[s];
  std::vector<std::pair<double, std::uint32_t>> sorted(P.size());
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < P.size(); ++i) sorted[fill[strip_of(P[i].x)]++] = {P[i].y, static_cast<std::uint32_t>(i)};
  }
  for (std::size_t s = 0; s < nstrips; ++s)
    std::sort(sorted.begin() + static_cast<std::ptrdiff_t>(start[s]), sorted.begin() + static_cast<std::ptrdiff_t>(start[s + 1]));

  for (std::size_t j = 0; j < L.size(); ++j) {
    const auto& l = L[j];
    const double vt = radius * std::sqrt(1 + l.c * l.c) * (1 + 1e-9) + 1e-12;
    for (std::size_t s = 0; s < nstrips; ++s) {
      if (start[s] == start[s + 1]) continue;
      double x_lo = nstrips == 1 ? xmin : xmin + static_cast<double>(s) * width;
      double x_hi = (nstrips == 1 || s + 1 == nstrips) ? xmax : x_lo + width;
      double h1 = l.height(x_lo), h2 = l.height(x_hi);
      double pad = 1e-12 * (1 + std::abs(l.c));
      double lo = std::min(h1, h2) - vt - pad, hi = std::max(h1, h2) + vt + pad;
      auto first = sorted.begin() + static_cast<std::ptrdiff_t>(start[s]);
      auto last = sorted.begin() + static_cast<std::ptrdiff_t>(start[s + 1]);
      auto it = std::lower_bound(first, last, std::pair<double, std::uint32_t>{lo, 0});
      for (; it != last && it->first <= hi; ++it) {
        double d = point_line_distance(P[it->second], l);
        if (d <= radius) fn(static_cast<std::size_t>(it->second), j, d);
      }
    }
  }
}

/// I(w; P, L) = Σ η(d(p, ℓ)/w).
inline double smoothed_incidences(std::span<const Point2> P, std::span<const SlopeLine> L, double w,
                                  const SmoothingKernel& kernel = default_kernel()) {
  if (!(w > 0) || w > 1) throw std::invalid_argument("smoothed_incidences needs w in (0,1]");
  std::vector<double> per_line(L.size(), 0.0);
  for_each_near_pair(P, L, 0.6 * w, [&](std::size_t, std::size_t j, double d) { per_line[j] += kernel(d / w); });
  return pairwise_sum(per_line);
}

inline double smoothed_incidences(const Configuration& X, double w, const SmoothingKernel& kernel = default_kernel()) {
  auto P = X.P();
  auto L = lines_of(X);
  return smoothed_incidences(P, L, w, kernel);
}

/// The plain double loop, kept as a reference.
inline double smoothed_incidences_naive(std::span<const Point2> P, std::span<const SlopeLine> L, double w,
                                        const SmoothingKernel& kernel = default_kernel()) {
  if (!(w > 0) || w > 1) throw std::invalid_argument("smoothed_incidences needs w in (0,1]");
  std::vector<double> per_line(L.size(), 0.0);
  for (std::size_t j = 0; j < L.size(); ++j)
    for (const auto& p : P) per_line[j] += kernel(point_line_distance(p, L[j]) / w);
  return pairwise_sum(per_line);
}

/// #{(p, ℓ) : d(p, ℓ) <= threshold}.
inline std::uint64_t hard_incidences(std::span<const Point2> P, std::span<const SlopeLine> L, double threshold) {
  if (threshold < 0) throw std::invalid_argument("hard_incidences needs a nonnegative threshold");
  std::uint64_t n = 0;
  for_each_near_pair(P, L, threshold, [&](std::size_t, std::size_t, double) { ++n; });
  return n;
}

inline std::uint64_t hard_incidences_naive(std::span<const Point2> P, std::span<const SlopeLine> L, double threshold) {
  std::uint64_t n = 0;
  for (const auto& l : L)
    for (const auto& p : P) n += point_line_distance(p, l) <= threshold;
  return n;
}

/// I(w), B(w) and the hard counts at 0.4w and 0.6w over a list of scales.
struct IncidenceProfile {
  std::vector<double> scales;
  std::vector<double> smoothed;
  std::vector<double> normalized;
  std::vector<std::uint64_t> hard_lo;
  std::vector<std::uint64_t> hard_hi;
};

inline IncidenceProfile incidence_profile(std::span<const Point2> P, std::span<const SlopeLine> L, std::span<const double> scales,
                                          const SmoothingKernel& kernel = default_kernel()) {
  IncidenceProfile out;
  const double norm = static_cast<double>(P.size()) * static_cast<double>(L.size());
  for (double w : scales) {
    double I = smoothed_incidences(P, L, w, kernel);
    out.scales.push_back(w);
    out.smoothed.push_back(I);
    out.normalized.push_back(norm > 0 ? I / (w * norm) : 0.0);
    out.hard_lo.push_back(hard_incidences(P, L, 0.4 * w));
    out.hard_hi.push_back(hard_incidences(P, L, 0.6 * w));
  }
  return out;
}

struct HighLowRow {
  double w = 0;
  double I = 0;
  double B = 0;
  double B_half = 0;
  std::uint64_t hard_lo = 0;
  std::uint64_t hard_hi = 0;
  std::size_t M_pt = 0;
  std::size_t M_line = 0;
  double lhs = 0;
  double rhs_core = 0;
  double ratio = 0;
};

struct HighLowReport {
  std::size_t n = 0;
  std::vector<HighLowRow> rows;
  double max_ratio = 0;

  std::string to_csv() const {
    std::ostringstream os;
    os << "w,I,B,B_half,hard_lo,hard_hi,M_pt,M_line,lhs,rhs_core,ratio\n";
    for (const auto& r : rows)
      os << format_scale(r.w) << ',' << format_real(r.I) << ',' << format_real(r.B) << ',' << format_real(r.B_half) << ',' << r.hard_lo << ',' << r.hard_hi << ','
         << r.M_pt << ',' << r.M_line << ',' << format_real(r.lhs) << ',' << format_real(r.rhs_core) << ',' << format_real(r.ratio)
         << '\n';
    return os.str();
  }
};

/// Both sides of the high-low inequality at every dyadic w in [w_min, w_max], with P = P[X] and L = L[X].
inline HighLowReport high_low_scan(const Configuration& X, double w_min, double w_max, const SmoothingKernel& kernel = default_kernel(),
                                   unsigned workers = 1) {
  if (X.empty()) throw std::domain_error("high_low_scan: |P||L| = 0");
  if (!is_dyadic(w_min) || !is_dyadic(w_max) || w_min > w_max) throw std::invalid_argument("high_low_scan needs dyadic w_min <= w_max");
  auto P = X.P();
  auto L = lines_of(X);
  const double n = static_cast<double>(X.size());
  std::vector<double> ws;
  for (double w = w_max; w >= w_min; w /= 2) ws.push_back(w);
  HighLowReport report;
  report.n = X.size();
  report.rows.resize(ws.size());
  parallel_for(ws.size(), workers, [&](std::size_t k) {
    HighLowRow r;
    r.w = ws[k];
    r.I = smoothed_incidences(P, L, r.w, kernel);
    r.B = r.I / (r.w * n * n);
    double I_half = smoothed_incidences(P, L, r.w / 2, kernel);
    r.B_half = I_half / (r.w / 2 * n * n);
    r.hard_lo = hard_incidences(P, L, 0.4 * r.w);
    r.hard_hi = hard_incidences(P, L, 0.6 * r.w);
    r.M_pt = concentration_of(X.points(), {r.w, r.w, 1}).count;
    r.M_line = concentration_of(X.points(), {1, r.w, r.w}).count;
    r.lhs = std::abs(r.B - r.B_half);
    r.rhs_core = std::sqrt(static_cast<double>(r.M_pt) / n * static_cast<double>(r.M_line) / n / (r.w * r.w * r.w));
    r.ratio = r.lhs / r.rhs_core;
    report.rows[k] = r;
  });
  for (const auto& r : report.rows) report.max_ratio = std::max(report.max_ratio, r.ratio);
  return report;
}

}  // namespace inclab
