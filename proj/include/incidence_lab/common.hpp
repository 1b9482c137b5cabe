#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace inclab {

/// Point of the plane.
struct Point2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double distance(const Point2& p, const Point2& q) { return std::hypot(p.x - q.x, p.y - q.y); }

/// 2^{-k}
inline double dyadic(int k) { return std::ldexp(1.0, -k); }

/// True when x = 2^{-k} for some k >= 0.
inline bool is_dyadic(double x) {
  if (!(x > 0) || x > 1 || !std::isfinite(x)) return false;
  int e = 0;
  return std::frexp(x, &e) == 0.5;
}

/// Returns k with x = 2^{-k}; throws when x is not dyadic.
inline int dyadic_exponent(double x) {
  if (!is_dyadic(x)) throw std::invalid_argument("not a dyadic scale in (0,1]: " + std::to_string(x));
  int e = 0;
  std::frexp(x, &e);
  return 1 - e;
}

/// Largest 2^{-k} (k >= 0) not exceeding x.
inline double dyadic_floor(double x) {
  if (!(x > 0)) throw std::invalid_argument("dyadic_floor needs a positive argument");
  if (x >= 1) return 1.0;
  int e = 0;
  std::frexp(x, &e);
  return std::ldexp(1.0, e - 1);
}

/// Parses "2^-k", "2^k", "inf"/"box" or a plain decimal.
inline double parse_scale(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) throw std::invalid_argument("empty scale literal");
  if (s == "inf" || s == "box" || s == "unbounded") return std::numeric_limits<double>::infinity();
  if (s.rfind("2^", 0) == 0) {
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(s.substr(2), &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad scale literal: " + text);
    }
    if (used != s.size() - 2) throw std::invalid_argument("bad scale literal: " + text);
    return std::ldexp(1.0, k);
  }
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad scale literal: " + text);
  }
  if (used != s.size()) throw std::invalid_argument("bad scale literal: " + text);
  return v;
}

/// Formats a real with round-trip precision.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Inverse of parse_scale: powers of two become "2^-k" literals.
inline std::string format_scale(double x) {
  if (std::isinf(x)) return "inf";
  int e = 0;
  if (x > 0 && std::frexp(x, &e) == 0.5) return "2^" + std::to_string(e - 1);
  return format_real(x);
}

/// Seeded generator over std::mt19937_64; reals use the top 53 bits of each draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

/// Independent child seed for (seed, a, b), via std::seed_seq.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// Pairwise summation; the tree depends only on the length so results are reproducible.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0;
    for (double x : xs) s += x;
    return s;
  }
  std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Runs fn(i) for i in [0,n) on up to `workers` threads. Callers write results by index.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += workers) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Least-squares slope of ys against xs.
inline double least_squares_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("least_squares_slope needs >= 2 matched samples");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0) throw std::invalid_argument("least_squares_slope: constant abscissae");
  return sxy / sxx;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty list");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace inclab
