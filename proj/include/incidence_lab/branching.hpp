#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "incidence_lab/common.hpp"
#include "incidence_lab/phase_space.hpp"
#include "json.hpp"

namespace inclab {

/// f(x,y,z) = log_{1/δ} |X|_{δ^x × δ^z × δ^y} on D_m = {(i,j,k)/m : 0 <= i,j <= m, 0 <= k <= min(m, i+j)}.
/// Grid arguments are the integers i = m x, j = m y, k = m z.
class BranchingFunction {
 public:
  BranchingFunction() = default;
  BranchingFunction(int m, int T) : m_(m), T_(T), values_(static_cast<std::size_t>((m + 1) * (m + 1) * (m + 1)), kMissing) {
    if (m < 1 || m > 64 || T < 1 || m * T > 60) throw std::invalid_argument("branching grid needs 1 <= m <= 64, T >= 1, mT <= 60");
  }

  /// Builds f from a closed-form function of (x, y, z) on every point of D_m.
  static BranchingFunction from_function(int m, int T, const std::function<double(double, double, double)>& fn, double tolerance = 0) {
    BranchingFunction f(m, T);
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j)
        for (int k = 0; k <= std::min(m, i + j); ++k) f.set(i, j, k, fn(f.coord(i), f.coord(j), f.coord(k)));
    f.tolerance = tolerance;
    return f;
  }

  int m() const { return m_; }
  int T() const { return T_; }
  double delta() const { return dyadic(m_ * T_); }
  double coord(int i) const { return static_cast<double>(i) / m_; }

  bool in_domain(int i, int j, int k) const { return i >= 0 && j >= 0 && k >= 0 && i <= m_ && j <= m_ && k <= std::min(m_, i + j); }
  bool has(int i, int j, int k) const { return in_domain(i, j, k) && !std::isnan(values_[index(i, j, k)]); }

  double operator()(int i, int j, int k) const {
    if (!has(i, j, k))
      throw std::out_of_range("branching function undefined at (" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")/m");
    return values_[index(i, j, k)];
  }
  void set(int i, int j, int k, double v) {
    if (!in_domain(i, j, k)) throw std::out_of_range("grid point outside D_m");
    values_[index(i, j, k)] = v;
  }

  /// f(x, y) = f(x, y, x + y).
  double sheet(int i, int j) const { return (*this)(i, j, i + j); }

  /// f(x', y', z'; x, y) = f(x + x', y + y', x + y + z') - f(x, y); nullopt outside the domain.
  std::optional<double> relative(int di, int dj, int dk, int i, int j) const {
    if (!has(i, j, i + j) || !has(i + di, j + dj, i + j + dk)) return std::nullopt;
    return (*this)(i + di, j + dj, i + j + dk) - (*this)(i, j, i + j);
  }

  double tolerance = 0;
  double log2_K = 0;
  bool certified = false;

  std::string to_csv() const {
    std::ostringstream os;
    os << "x,y,z,f\n";
    for (int i = 0; i <= m_; ++i)
      for (int j = 0; j <= m_; ++j)
        for (int k = 0; k <= std::min(m_, i + j); ++k)
          if (has(i, j, k))
            os << format_real(coord(i)) << ',' << format_real(coord(j)) << ',' << format_real(coord(k)) << ',' << format_real((*this)(i, j, k)) << '\n';
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json vals = nlohmann::json::array();
    for (int i = 0; i <= m_; ++i)
      for (int j = 0; j <= m_; ++j)
        for (int k = 0; k <= std::min(m_, i + j); ++k)
          if (has(i, j, k)) vals.push_back({i, j, k, (*this)(i, j, k)});
    return {{"m", m_},
            {"T", T_},
            {"delta", format_scale(delta())},
            {"tolerance", tolerance},
            {"log2_K", log2_K},
            {"certified", certified},
            {"values", std::move(vals)}};
  }

 private:
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
  std::size_t index(int i, int j, int k) const { return static_cast<std::size_t>((i * (m_ + 1) + j) * (m_ + 1) + k); }

  int m_ = 1;
  int T_ = 1;
  std::vector<double> values_;
};

/// 6 log2(K)/(mT) + 3/m.
inline double branching_tolerance(int m, int T, double log2_K) { return 6 * log2_K / (m * T) + 3.0 / m; }

struct BranchingOptions {
  std::optional<double> log2_K;  ///< from a uniformity certificate; absent means uncertified
  bool sheet_only = false;       ///< only z = x + y (x + y <= 1)
  unsigned workers = 1;
};

inline BranchingFunction compute_branching(const Configuration& X, int m, int T, const BranchingOptions& opt = {}) {
  BranchingFunction f(m, T);
  if (X.empty()) throw std::invalid_argument("branching function of an empty configuration");
  if (X.delta() > f.delta() * (1 + 1e-12))
    throw std::invalid_argument("configuration delta " + format_scale(X.delta()) + " is coarser than 2^-mT = " + format_scale(f.delta()));
  struct Cell {
    int i, j, k;
  };
  std::vector<Cell> cells;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j)
      for (int k = 0; k <= std::min(m, i + j); ++k)
        if (!opt.sheet_only || (k == i + j)) cells.push_back({i, j, k});
  std::vector<double> vals(cells.size());
  const double log_inv_delta = static_cast<double>(m * T);
  parallel_for(cells.size(), opt.workers, [&](std::size_t n) {
    const auto& c = cells[n];
    ScaleTriple s{dyadic(c.i * T), dyadic(c.k * T), dyadic(c.j * T)};
    vals[n] = std::log2(static_cast<double>(covering_number(X, s))) / log_inv_delta;
  });
  for (std::size_t n = 0; n < cells.size(); ++n) f.set(cells[n].i, cells[n].j, cells[n].k, vals[n]);
  f.certified = opt.log2_K.has_value();
  f.log2_K = opt.log2_K.value_or(0);
  f.tolerance = branching_tolerance(m, T, f.log2_K);
  return f;
}

// ---------------------------------------------------------------------------
// Violation reports.

struct CheckResult {
  std::string name;
  double max_violation = -std::numeric_limits<double>::infinity();  ///< raw amount by which the inequality fails
  std::string where;
  std::size_t checked = 0;
  std::size_t over_tolerance = 0;
};

struct PropertyReport {
  double tolerance = 0;
  std::vector<CheckResult> checks;

  void record(const std::string& name, double amount, const std::string& where) {
    auto it = std::find_if(checks.begin(), checks.end(), [&](const CheckResult& c) { return c.name == name; });
    if (it == checks.end()) {
      checks.push_back({name, -std::numeric_limits<double>::infinity(), "", 0, 0});
      it = checks.end() - 1;
    }
    ++it->checked;
    if (amount > tolerance + 1e-12) ++it->over_tolerance;
    if (amount > it->max_violation) {
      it->max_violation = amount;
      it->where = where;
    }
  }

  /// Largest violation over all checks, floored at 0.
  double max_violation() const {
    double v = 0;
    for (const auto& c : checks) v = std::max(v, c.max_violation);
    return v;
  }
  double max_violation(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return std::max(0.0, c.max_violation);
    return 0;
  }
  bool within_tolerance() const { return max_violation() <= tolerance + 1e-12; }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks)
      arr.push_back({{"check", c.name},
                     {"max_violation", std::isfinite(c.max_violation) ? c.max_violation : 0.0},
                     {"where", c.where},
                     {"checked", c.checked},
                     {"over_tolerance", c.over_tolerance}});
    return {{"tolerance", tolerance}, {"max_violation", max_violation()}, {"within_tolerance", within_tolerance()}, {"checks", arr}};
  }
};

namespace detail {

inline std::string grid_label(std::initializer_list<int> xs) {
  std::string s = "(";
  bool first = true;
  for (int x : xs) {
    if (!first) s += ",";
    s += std::to_string(x);
    first = false;
  }
  return s + ")/m";
}

struct GridPoint {
  int i, j, k;
};

inline std::vector<GridPoint> domain_points(const BranchingFunction& f) {
  std::vector<GridPoint> pts;
  for (int i = 0; i <= f.m(); ++i)
    for (int j = 0; j <= f.m(); ++j)
      for (int k = 0; k <= std::min(f.m(), i + j); ++k)
        if (f.has(i, j, k)) pts.push_back({i, j, k});
  return pts;
}

}  // namespace detail

/// Lipschitz and monotone: 0 <= f(b) - f(a) <= |b - a|_1 for comparable a <= b (all pairs up to 3000 grid points, grid edges beyond).
inline PropertyReport check_lipschitz_monotone(const BranchingFunction& f) {
  PropertyReport rep;
  rep.tolerance = f.tolerance;
  auto pts = detail::domain_points(f);
  auto visit = [&](const detail::GridPoint& a, const detail::GridPoint& b) {
    double df = f(b.i, b.j, b.k) - f(a.i, a.j, a.k);
    double step = static_cast<double>((b.i - a.i) + (b.j - a.j) + (b.k - a.k)) / f.m();
    auto where = detail::grid_label({a.i, a.j, a.k, b.i, b.j, b.k});
    rep.record("monotone", -df, where);
    rep.record("lipschitz", df - step, where);
  };
  if (pts.size() <= 3000) {
    for (const auto& a : pts)
      for (const auto& b : pts)
        if ((a.i != b.i || a.j != b.j || a.k != b.k) && a.i <= b.i && a.j <= b.j && a.k <= b.k) visit(a, b);
  } else {
    for (const auto& a : pts)
      for (auto b : {detail::GridPoint{a.i + 1, a.j, a.k}, detail::GridPoint{a.i, a.j + 1, a.k}, detail::GridPoint{a.i, a.j, a.k + 1}})
        if (f.has(b.i, b.j, b.k)) visit(a, b);
  }
  return rep;
}

/// Submodularity: f(max(a,b)) + f(min(a,b)) <= f(a) + f(b), over all pairs whose meet and join lie in D_m
/// (exhaustive up to 2000 grid points, otherwise 4·10^6 seeded random pairs).
inline PropertyReport check_submodular(const BranchingFunction& f, std::uint64_t seed = 1) {
  PropertyReport rep;
  rep.tolerance = f.tolerance;
  auto pts = detail::domain_points(f);
  auto visit = [&](const detail::GridPoint& a, const detail::GridPoint& b) {
    detail::GridPoint hi{std::max(a.i, b.i), std::max(a.j, b.j), std::max(a.k, b.k)};
    detail::GridPoint lo{std::min(a.i, b.i), std::min(a.j, b.j), std::min(a.k, b.k)};
    if (!f.has(hi.i, hi.j, hi.k) || !f.has(lo.i, lo.j, lo.k)) return;
    double v = f(hi.i, hi.j, hi.k) + f(lo.i, lo.j, lo.k) - f(a.i, a.j, a.k) - f(b.i, b.j, b.k);
    rep.record("submodular", v, detail::grid_label({a.i, a.j, a.k, b.i, b.j, b.k}));
  };
  if (pts.size() <= 2000) {
    for (std::size_t x = 0; x < pts.size(); ++x)
      for (std::size_t y = x + 1; y < pts.size(); ++y) visit(pts[x], pts[y]);
  } else {
    Rng rng(seed);
    for (int n = 0; n < 4'000'000; ++n) visit(pts[rng.below(pts.size())], pts[rng.below(pts.size())]);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Direction numbers.

/// d(t; x, y) = f(0, t, 0; x, y) and d∨(t; x, y) = f(t, 0, 0; x, y), indexed [t][x][y] on the grid.
struct DirectionNumbers {
  int m = 0;
  std::vector<double> d, dv;  ///< NaN where undefined

  std::optional<double> get(const std::vector<double>& g, int t, int i, int j) const {
    if (t < 0 || i < 0 || j < 0 || t > m || i > m || j > m) return std::nullopt;
    double v = g[index(t, i, j)];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
  std::optional<double> dir(int t, int i, int j) const { return get(d, t, i, j); }
  std::optional<double> dual(int t, int i, int j) const { return get(dv, t, i, j); }
  std::size_t index(int t, int i, int j) const { return static_cast<std::size_t>((t * (m + 1) + i) * (m + 1) + j); }
};

inline DirectionNumbers direction_numbers(const BranchingFunction& f) {
  DirectionNumbers dn;
  dn.m = f.m();
  const int m = f.m();
  const auto size = static_cast<std::size_t>((m + 1) * (m + 1) * (m + 1));
  dn.d.assign(size, std::numeric_limits<double>::quiet_NaN());
  dn.dv.assign(size, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t <= m; ++t)
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        if (auto v = f.relative(0, t, 0, i, j)) dn.d[dn.index(t, i, j)] = *v;
        if (auto v = f.relative(t, 0, 0, i, j)) dn.dv[dn.index(t, i, j)] = *v;
      }
  return dn;
}

/// Range, lower-bound, superadditivity and Lipschitz inequalities for d and d∨, each to the branching tolerance.
inline PropertyReport check_direction_inequalities(const DirectionNumbers& dn, const BranchingFunction& f) {
  PropertyReport rep;
  rep.tolerance = f.tolerance;
  const int m = dn.m;
  const double step = 1.0 / m;
  for (int t = 0; t <= m; ++t)
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        auto label = detail::grid_label({t, i, j});
        auto d = dn.dir(t, i, j), dv = dn.dual(t, i, j);
        if (d) {
          rep.record("range_d", std::max(-*d, *d - t * step), label);
          if (auto r = f.relative(0, t, t, i, j)) rep.record("lower_bound_d", *r - t * step - *d, label);
          for (int s = 0; t + s <= m; ++s) {
            auto dts = dn.dir(t + s, i, j), ds = dn.dir(s, i, j + t);
            if (dts && ds) rep.record("superadditive_d", *d + *ds - *dts, detail::grid_label({t, s, i, j}));
          }
          for (int e = 1; e <= m; ++e) {
            if (auto up = dn.dir(t + e, i, j)) rep.record("lipschitz_t_d", std::max(*d - *up, *up - *d - e * step), label);
            if (auto xr = dn.dir(t, i + e, j)) rep.record("lipschitz_x_d", std::max(*xr - *d, *d - *xr - 2 * e * step), label);
            if (auto yr = dn.dir(t, i, j + e)) rep.record("lipschitz_y_d", std::abs(*yr - *d) - 2 * e * step, label);
          }
        }
        if (dv) {
          rep.record("range_dual", std::max(-*dv, *dv - t * step), label);
          if (auto r = f.relative(t, 0, t, i, j)) rep.record("lower_bound_dual", *r - t * step - *dv, label);
          for (int s = 0; t + s <= m; ++s) {
            auto dts = dn.dual(t + s, i, j), ds = dn.dual(s, i + t, j);
            if (dts && ds) rep.record("superadditive_dual", *dv + *ds - *dts, detail::grid_label({t, s, i, j}));
          }
          for (int e = 1; e <= m; ++e) {
            if (auto up = dn.dual(t + e, i, j)) rep.record("lipschitz_t_dual", std::max(*dv - *up, *up - *dv - e * step), label);
            if (auto xr = dn.dual(t, i + e, j)) rep.record("lipschitz_x_dual", std::abs(*xr - *dv) - 2 * e * step, label);
            if (auto yr = dn.dual(t, i, j + e)) rep.record("lipschitz_y_dual", std::max(*yr - *dv, *dv - *yr - 2 * e * step), label);
          }
        }
      }
  return rep;
}

// ---------------------------------------------------------------------------
// Initial estimate and high-low functionals.

/// b(t; x, y) and e(s; x, y), indexed [t][x][y]; NaN where an argument leaves D_m.
struct BEFunctionals {
  int m = 0;
  std::vector<double> b, e;

  std::size_t index(int t, int i, int j) const { return static_cast<std::size_t>((t * (m + 1) + i) * (m + 1) + j); }
  std::optional<double> b_at(int t, int i, int j) const { return at(b, t, i, j); }
  std::optional<double> e_at(int s, int i, int j) const { return at(e, s, i, j); }
  std::size_t undefined_b() const { return static_cast<std::size_t>(std::count_if(b.begin(), b.end(), [](double v) { return std::isnan(v); })); }
  std::size_t undefined_e() const { return static_cast<std::size_t>(std::count_if(e.begin(), e.end(), [](double v) { return std::isnan(v); })); }

 private:
  std::optional<double> at(const std::vector<double>& g, int t, int i, int j) const {
    if (t < 0 || i < 0 || j < 0 || t > m || i > m || j > m) return std::nullopt;
    double v = g[index(t, i, j)];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
};

/// b(t; x, y) = f(t,t,t; x,y) - (f(t,0; x,y) + f(0,t; x,y) - t),  e(s; x, y) = (f(s,0; x,y) + f(0,s; x,y) - 3s) / 2.
inline BEFunctionals be_functionals(const BranchingFunction& f) {
  BEFunctionals be;
  be.m = f.m();
  const int m = f.m();
  const auto size = static_cast<std::size_t>((m + 1) * (m + 1) * (m + 1));
  be.b.assign(size, std::numeric_limits<double>::quiet_NaN());
  be.e.assign(size, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t <= m; ++t)
    for (int i = 0; i <= m; ++i)
      for (int j = 0; j <= m; ++j) {
        const double tt = f.coord(t);
        auto ftt = f.relative(t, t, t, i, j);
        auto ft0 = f.relative(t, 0, t, i, j);
        auto f0t = f.relative(0, t, t, i, j);
        if (ft0 && f0t) {
          be.e[be.index(t, i, j)] = (*ft0 + *f0t - 3 * tt) / 2;
          if (ftt) be.b[be.index(t, i, j)] = *ftt - (*ft0 + *f0t - tt);
        }
      }
  return be;
}

/// b(t; x, y) >= d(t; x+t, y) - d(t; x, y) - tolerance, gridwise.
inline PropertyReport check_b_from_directions(const BEFunctionals& be, const DirectionNumbers& dn, double tolerance) {
  PropertyReport rep;
  rep.tolerance = tolerance;
  for (int t = 0; t <= be.m; ++t)
    for (int i = 0; i <= be.m; ++i)
      for (int j = 0; j <= be.m; ++j) {
        auto b = be.b_at(t, i, j);
        auto d0 = dn.dir(t, i, j), d1 = dn.dir(t, i + t, j);
        if (b && d0 && d1) rep.record("b_from_dir", *d1 - *d0 - *b, detail::grid_label({t, i, j}));
      }
  return rep;
}

struct EffectiveTriple {
  int t = 0, x = 0, y = 0;  ///< grid integers (value / m)
  double c1 = 0, c2 = 0;
  double b_value = 0;
  double min_e_value = 0;
  double margin = 0;  ///< b + min e - c1

  nlohmann::json to_json(int m) const {
    return {{"t", static_cast<double>(t) / m}, {"x", static_cast<double>(x) / m}, {"y", static_cast<double>(y) / m}, {"c1", c1},
            {"c2", c2}, {"b", b_value}, {"min_e", min_e_value}, {"margin", margin}};
  }
};

struct EffectiveSearch {
  std::optional<EffectiveTriple> triple;
  double best_margin = -std::numeric_limits<double>::infinity();  ///< over all candidates, certified or not
  std::size_t candidates = 0;
};

/// Re-checks b(t; x, y) + e(s; x, y) >= c1 for all grid s in [t, 1 - (x + y)].
inline bool certify_effective(const BEFunctionals& be, const EffectiveTriple& tr) {
  auto b = be.b_at(tr.t, tr.x, tr.y);
  if (!b || tr.t < 1 || tr.t > be.m - tr.x - tr.y) return false;
  if (std::max({tr.t, tr.x, tr.y}) > tr.c2 * be.m + 1e-9) return false;
  for (int s = tr.t; s <= be.m - tr.x - tr.y; ++s) {
    auto e = be.e_at(s, tr.x, tr.y);
    if (!e || *b + *e < tr.c1) return false;
  }
  return true;
}

/// Exhaustive scan of grid triples (t; x, y), t >= 1/m, max{t,x,y} <= c2; returns the largest-margin certified triple.
inline EffectiveSearch find_effective_triple(const BEFunctionals& be, double c1, double c2) {
  EffectiveSearch out;
  const int m = be.m;
  for (int t = 1; t <= m; ++t)
    for (int x = 0; x <= m; ++x)
      for (int y = 0; y <= m; ++y) {
        if (std::max({t, x, y}) > c2 * m + 1e-9 || t > m - x - y) continue;
        auto b = be.b_at(t, x, y);
        if (!b) continue;
        double min_e = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int s = t; s <= m - x - y; ++s) {
          auto e = be.e_at(s, x, y);
          if (!e) {
            ok = false;
            break;
          }
          min_e = std::min(min_e, *e);
        }
        if (!ok) continue;
        ++out.candidates;
        double margin = *b + min_e - c1;
        out.best_margin = std::max(out.best_margin, margin);
        if (margin >= 0 && (!out.triple || margin > out.triple->margin)) out.triple = EffectiveTriple{t, x, y, c1, c2, *b, min_e, margin};
      }
  return out;
}

struct StabilityScan {
  int t = 0;
  double rho = 0;
  double slack = 0;                            ///< additive slack, 2 · tolerance
  std::vector<std::pair<int, int>> stable;     ///< grid (x, y) with d(t;x,y) - d(t;x+t,y) <= ρ t + slack
  std::vector<std::pair<int, int>> unstable;
  bool telescoping_applicable = false;         ///< ⌈1/ρ⌉ t <= 1
  bool telescoping_ok = false;                 ///< some x in {0, t, ..., (⌈1/ρ⌉-1) t} stable on the row y = 0
};

/// d(t; x, y) - d(t; x+t, y) <= ρ t (+ 2 · tolerance) over the grid, with the telescoping pigeonhole on the y = 0 row.
inline StabilityScan directional_stability_scan(const DirectionNumbers& dn, int t, double rho, double tolerance) {
  if (t < 1 || t > dn.m) throw std::invalid_argument("stability scan needs 1 <= t <= m (grid units)");
  if (!(rho > 0)) throw std::invalid_argument("stability scan needs rho > 0");
  StabilityScan out;
  out.t = t;
  out.rho = rho;
  out.slack = 2 * tolerance;
  const double tt = static_cast<double>(t) / dn.m;
  auto stable_at = [&](int x, int y) -> std::optional<bool> {
    auto d0 = dn.dir(t, x, y), d1 = dn.dir(t, x + t, y);
    if (!d0 || !d1) return std::nullopt;
    return *d0 - *d1 <= rho * tt + out.slack;
  };
  for (int x = 0; x <= dn.m; ++x)
    for (int y = 0; y <= dn.m; ++y)
      if (auto s = stable_at(x, y)) (*s ? out.stable : out.unstable).emplace_back(x, y);
  const auto k = static_cast<int>(std::ceil(1 / rho - 1e-12));
  out.telescoping_applicable = static_cast<long long>(k) * t <= dn.m;
  if (out.telescoping_applicable)
    for (int j = 0; j < k; ++j)
      if (auto s = stable_at(j * t, 0); s && *s) {
        out.telescoping_ok = true;
        break;
      }
  return out;
}

}  // namespace inclab
