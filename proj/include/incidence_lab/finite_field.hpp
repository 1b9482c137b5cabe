#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "incidence_lab/common.hpp"
#include "json.hpp"

namespace inclab {

/// a0 + a1·x in F_p[x]/(x² - n).
struct Fq {
  std::uint32_t a0 = 0;
  std::uint32_t a1 = 0;
  friend bool operator==(const Fq&, const Fq&) = default;
};

inline bool is_prime(std::uint32_t p) {
  if (p < 2) return false;
  for (std::uint32_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

/// F_q with q = p², built as F_p[x]/(x² - n) for the least quadratic non-residue n.
class FiniteField {
 public:
  explicit FiniteField(std::uint32_t p) : p_(p) {
    if (!is_prime(p)) throw std::invalid_argument(std::to_string(p) + " is not prime");
    if (p < 3 || p > 97) throw std::invalid_argument("field characteristic must lie in [3, 97]");
    for (std::uint32_t c = 2; c < p; ++c) {
      bool square = false;
      for (std::uint32_t y = 1; y < p && !square; ++y) square = (y * y) % p == c;
      if (!square) {
        n_ = c;
        break;
      }
    }
  }

  std::uint32_t p() const { return p_; }
  std::uint32_t q() const { return p_ * p_; }
  /// The quadratic is x² - nonresidue().
  std::uint32_t nonresidue() const { return n_; }
  std::string modulus_string() const { return "x^2 - " + std::to_string(n_); }

  Fq element(std::uint32_t a0, std::uint32_t a1 = 0) const { return {a0 % p_, a1 % p_}; }
  std::uint32_t index(const Fq& a) const { return a.a0 + p_ * a.a1; }
  Fq from_index(std::uint32_t i) const { return {i % p_, i / p_}; }
  bool in_base_field(const Fq& a) const { return a.a1 == 0; }

  Fq add(const Fq& a, const Fq& b) const { return {(a.a0 + b.a0) % p_, (a.a1 + b.a1) % p_}; }
  Fq neg(const Fq& a) const { return {(p_ - a.a0) % p_, (p_ - a.a1) % p_}; }
  Fq sub(const Fq& a, const Fq& b) const { return add(a, neg(b)); }
  Fq mul(const Fq& a, const Fq& b) const {
    std::uint64_t P = p_;
    std::uint64_t c0 = (std::uint64_t{a.a0} * b.a0 + std::uint64_t{n_} * ((std::uint64_t{a.a1} * b.a1) % P)) % P;
    std::uint64_t c1 = (std::uint64_t{a.a0} * b.a1 + std::uint64_t{a.a1} * b.a0) % P;
    return {static_cast<std::uint32_t>(c0), static_cast<std::uint32_t>(c1)};
  }
  Fq pow(Fq a, std::uint64_t e) const {
    Fq r{1, 0};
    while (e) {
      if (e & 1) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }
  /// ā = a^p, which is the conjugation a0 + a1 x ↦ a0 - a1 x.
  Fq frobenius(const Fq& a) const { return {a.a0, (p_ - a.a1) % p_}; }
  /// N(a) = a^{p+1} = a ā ∈ F_p.
  std::uint32_t norm(const Fq& a) const {
    auto c = mul(a, frobenius(a));
    return c.a0;
  }
  Fq inv(const Fq& a) const {
    if (a == Fq{}) throw std::domain_error("inverse of zero");
    std::uint32_t N = norm(a);
    std::uint32_t Ninv = static_cast<std::uint32_t>(pow({N, 0}, p_ - 2).a0);
    return mul(frobenius(a), {Ninv, 0});
  }
  Fq div(const Fq& a, const Fq& b) const { return mul(a, inv(b)); }

 private:
  std::uint32_t p_;
  std::uint32_t n_ = 0;
};

inline FiniteField build_field(std::uint32_t p) { return FiniteField(p); }

// ---------------------------------------------------------------------------
// Lines of F_q²: y = m x + k has id m q + k, x = k has id q² + k (q² + q lines).

struct PlanePoint {
  Fq x, y;
  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

inline std::uint64_t point_id(const FiniteField& F, const PlanePoint& P) { return F.index(P.x) + std::uint64_t{F.q()} * F.index(P.y); }
inline PlanePoint point_from_id(const FiniteField& F, std::uint64_t id) {
  return {F.from_index(static_cast<std::uint32_t>(id % F.q())), F.from_index(static_cast<std::uint32_t>(id / F.q()))};
}
inline std::uint64_t line_count(const FiniteField& F) { return std::uint64_t{F.q()} * F.q() + F.q(); }

/// Id of the line through P with direction (dx, dy) ≠ 0.
inline std::uint64_t line_through(const FiniteField& F, const PlanePoint& P, const Fq& dx, const Fq& dy) {
  const std::uint64_t q = F.q();
  if (dx == Fq{}) {
    if (dy == Fq{}) throw std::invalid_argument("zero direction");
    return q * q + F.index(P.x);
  }
  Fq m = F.div(dy, dx);
  Fq k = F.sub(P.y, F.mul(m, P.x));
  return F.index(m) * q + F.index(k);
}

/// Calls fn(point) for the q points of a line.
template <class Fn>
void for_each_point_on_line(const FiniteField& F, std::uint64_t line, Fn&& fn) {
  const std::uint64_t q = F.q();
  if (line >= q * q) {
    Fq x = F.from_index(static_cast<std::uint32_t>(line - q * q));
    for (std::uint32_t t = 0; t < q; ++t) fn(PlanePoint{x, F.from_index(t)});
    return;
  }
  Fq m = F.from_index(static_cast<std::uint32_t>(line / q)), k = F.from_index(static_cast<std::uint32_t>(line % q));
  for (std::uint32_t t = 0; t < q; ++t) {
    Fq x = F.from_index(t);
    fn(PlanePoint{x, F.add(F.mul(m, x), k)});
  }
}

// ---------------------------------------------------------------------------
// Hermitian unital.

struct UnitalConfig {
  std::uint32_t p = 0;
  std::vector<PlanePoint> points;
  std::vector<std::uint64_t> tangents;  ///< tangent line id per point
};

/// Tangent ℓ_x = {(a + t b̄, b - t ā)} at x = (a, b).
inline std::uint64_t tangent_line(const FiniteField& F, const PlanePoint& x) {
  return line_through(F, x, F.frobenius(x.y), F.neg(F.frobenius(x.x)));
}

/// All (a, b) ∈ F_q² with N(a) + N(b) = 1, ordered by point id.
inline UnitalConfig build_unital(const FiniteField& F) {
  const std::uint32_t q = F.q(), p = F.p();
  std::vector<std::vector<std::uint32_t>> by_norm(p);
  for (std::uint32_t i = 0; i < q; ++i) by_norm[F.norm(F.from_index(i))].push_back(i);
  UnitalConfig cfg;
  cfg.p = p;
  std::vector<std::uint64_t> ids;
  for (std::uint32_t ia = 0; ia < q; ++ia) {
    std::uint32_t need = (1 + p - F.norm(F.from_index(ia))) % p;
    for (auto ib : by_norm[need]) ids.push_back(ia + std::uint64_t{q} * ib);
  }
  std::sort(ids.begin(), ids.end());
  for (auto id : ids) {
    auto P = point_from_id(F, id);
    cfg.points.push_back(P);
    cfg.tangents.push_back(tangent_line(F, P));
  }
  return cfg;
}

inline bool on_unital(const FiniteField& F, const PlanePoint& x) { return (F.norm(x.x) + F.norm(x.y)) % F.p() == 1; }

struct TangencyReport {
  bool pass = true;
  std::size_t checked = 0;
  std::optional<std::size_t> witness;       ///< index of the failing point
  std::optional<PlanePoint> extra;          ///< second point of P on its tangent, if any
  std::string reason;
};

/// ℓ_x ∩ P = {x} for every x, and every x on the unital.
inline TangencyReport verify_tangency(const FiniteField& F, const UnitalConfig& cfg) {
  TangencyReport rep;
  const std::uint64_t q = F.q();
  std::vector<char> in(q * q, 0);
  for (const auto& x : cfg.points) in[point_id(F, x)] = 1;
  for (std::size_t i = 0; i < cfg.points.size(); ++i) {
    const auto& x = cfg.points[i];
    ++rep.checked;
    if (!on_unital(F, x)) {
      rep = {false, rep.checked, i, std::nullopt, "point is not on N(a)+N(b)=1"};
      return rep;
    }
    bool contains_x = false;
    std::optional<PlanePoint> other;
    for_each_point_on_line(F, cfg.tangents[i], [&](const PlanePoint& y) {
      if (y == x) contains_x = true;
      else if (in[point_id(F, y)] && !other) other = y;
    });
    if (!contains_x || other) {
      rep = {false, rep.checked, i, other, contains_x ? "tangent meets P twice" : "tangent misses its point"};
      return rep;
    }
  }
  return rep;
}

struct VinhReport {
  std::uint64_t incidences = 0;
  double expected = 0;  ///< |P||L|/q
  double slack = 0;     ///< |I - |P||L|/q|
  double bound = 0;     ///< q^{1/2} (|P||L|)^{1/2}
  bool pass = true;

  nlohmann::json to_json() const {
    return {{"incidences", incidences}, {"expected", expected}, {"slack", slack}, {"bound", bound}, {"pass", pass}};
  }
};

/// Exact I(P, L) against Vinh's bound; P and L are id lists without duplicates.
inline VinhReport vinh_check(const FiniteField& F, const std::vector<std::uint64_t>& points, const std::vector<std::uint64_t>& lines) {
  const std::uint64_t q = F.q();
  std::vector<char> in(q * q, 0);
  for (auto id : points) {
    if (id >= q * q) throw std::invalid_argument("point id out of range");
    if (in[id]) throw std::invalid_argument("duplicate point id");
    in[id] = 1;
  }
  std::set<std::uint64_t> seen;
  VinhReport r;
  for (auto l : lines) {
    if (l >= line_count(F)) throw std::invalid_argument("line id out of range");
    if (!seen.insert(l).second) throw std::invalid_argument("duplicate line id");
    for_each_point_on_line(F, l, [&](const PlanePoint& y) { r.incidences += in[point_id(F, y)]; });
  }
  const double P = static_cast<double>(points.size()), L = static_cast<double>(lines.size()), Q = static_cast<double>(q);
  r.expected = P * L / Q;
  r.slack = std::abs(static_cast<double>(r.incidences) - r.expected);
  r.bound = std::sqrt(Q * P * L);
  r.pass = r.slack <= r.bound * (1 + 1e-12);
  return r;
}

/// Pairs (j, k), j ≠ k, with point j on tangent k.
inline std::uint64_t nontrivial_incidences(const FiniteField& F, const UnitalConfig& cfg) {
  const std::uint64_t q = F.q();
  std::vector<char> in(q * q, 0);
  for (const auto& x : cfg.points) in[point_id(F, x)] = 1;
  std::uint64_t total = 0;
  for (auto l : cfg.tangents) for_each_point_on_line(F, l, [&](const PlanePoint& y) { total += in[point_id(F, y)]; });
  return total - cfg.points.size();
}

inline std::vector<std::uint64_t> point_ids(const FiniteField& F, const UnitalConfig& cfg) {
  std::vector<std::uint64_t> ids;
  for (const auto& x : cfg.points) ids.push_back(point_id(F, x));
  return ids;
}

/// Random point and line subsets, each element kept with its own random density.
inline std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>> random_incidence_instance(const FiniteField& F, std::uint64_t seed) {
  Rng rng(seed);
  const double dp = rng.uniform01(), dl = rng.uniform01();
  std::vector<std::uint64_t> P, L;
  const std::uint64_t q = F.q();
  for (std::uint64_t i = 0; i < q * q; ++i)
    if (rng.uniform01() < dp) P.push_back(i);
  for (std::uint64_t i = 0; i < line_count(F); ++i)
    if (rng.uniform01() < dl) L.push_back(i);
  return {P, L};
}

}  // namespace inclab
