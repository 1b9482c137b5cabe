#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "incidence_lab/branching.hpp"
#include "incidence_lab/common.hpp"
#include "incidence_lab/config_io.hpp"
#include "incidence_lab/constructions.hpp"
#include "incidence_lab/finite_field.hpp"
#include "incidence_lab/heilbronn.hpp"
#include "incidence_lab/incidence_kernel.hpp"
#include "incidence_lab/phase_space.hpp"
#include "incidence_lab/regularity.hpp"
#include "json.hpp"

namespace inclab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSelfcheck = 3;

/// Default output directory when no --out is given.
inline constexpr const char* kOutDirEnv = "INCLAB_OUT_DIR";

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class OptType { String, Int, Real, Scale, Bool, Generator };

struct OptionSpec {
  std::string name;
  OptType type;
  nlohmann::json default_value;
  std::string help;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"gen",       "incidence", "highlow",   "uniformize", "katztao",
                                              "frostman",  "branching", "effective", "heilbronn",  "unital"};
  return names;
}

inline std::vector<OptionSpec> option_specs(const std::string& sub) {
  using T = OptType;
  const OptionSpec selfcheck{"selfcheck", T::Bool, false, "run the module's invariant suite; exit 3 on violation"};
  const std::vector<OptionSpec> source{{"input", T::String, "", "configuration file (text format)"},
                                       {"gen", T::Generator, nullptr, "generator spec, e.g. kind=uniform_random,n=2000,seed=1"}};
  auto with = [&](std::vector<OptionSpec> base, std::initializer_list<OptionSpec> extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    base.push_back(selfcheck);
    return base;
  };
  if (sub == "gen")
    return with({}, {{"kind", T::String, "uniform_random",
                      "uniform_random | grid_slope_field | ad_regular_product | cluster_mix | single_slope | lattice | lines_through_points"},
                     {"n", T::Int, 1000, "number of points (random kinds)"},
                     {"delta", T::Scale, "2^-8", "grid scale (lattice kinds)"},
                     {"seed", T::Int, 0, "random seed"},
                     {"t", T::Real, 2.0, "AD point exponent"},
                     {"s", T::Real, 1.0, "AD slope exponent"},
                     {"slope", T::Real, 0.0, "single_slope slope"},
                     {"n_dust", T::Int, 0, "cluster_mix dust points"},
                     {"points", T::String, "", "lines_through_points: planar point file"},
                     {"slopes", T::String, "", "lines_through_points: comma-separated slopes"},
                     {"format", T::String, "txt", "txt | json"}});
  if (sub == "incidence")
    return with(source, {{"wmin", T::Scale, "2^-10", "smallest w"}, {"wmax", T::Scale, "2^-2", "largest w"}, {"format", T::String, "csv", "csv | json"}});
  if (sub == "highlow")
    return with(source, {{"wmin", T::Scale, "2^-10", "smallest w"}, {"wmax", T::Scale, "2^-2", "largest w"}, {"format", T::String, "csv", "csv | json"}});
  if (sub == "uniformize") return with(source, {{"m", T::Int, 3, "scale count"}, {"T", T::Int, 4, "dyadic depth per step"}});
  if (sub == "katztao")
    return with({}, {{"points", T::String, "", "file of reals in [-1,1]; empty means delta Z ∩ [0,1]"},
                     {"delta", T::Scale, "2^-10", "separation scale"},
                     {"s", T::Real, 1.0, "Frostman exponent"},
                     {"C", T::Real, 2.0, "Frostman constant"}});
  if (sub == "frostman") return with(source, {{"alpha", T::Real, 1.0, "u exponent"}, {"beta", T::Real, 1.0, "w exponent"}});
  if (sub == "branching")
    return with(source, {{"m", T::Int, 3, "grid density"},
                         {"T", T::Int, 2, "dyadic depth"},
                         {"uniformize", T::Bool, false, "uniformize the input first and use its certificate"},
                         {"sheet_only", T::Bool, false, "only compute z = x + y"},
                         {"format", T::String, "csv", "csv | json"}});
  if (sub == "effective")
    return with(source, {{"synthetic", T::String, "", "closed-form f instead of data: linear:a,b,c gives f = a x + b y + c z"},
                         {"m", T::Int, 3, "grid density"},
                         {"T", T::Int, 2, "dyadic depth"},
                         {"uniformize", T::Bool, false, "uniformize the input first"},
                         {"c1", T::String, "tol", "effectiveness threshold, or 'tol' for the tolerance"},
                         {"c2", T::Real, 1.0, "bound on max{t,x,y}"},
                         {"stability_t", T::Int, 1, "grid t for the stability scan"},
                         {"rho", T::Real, 0.25, "stability rate"}});
  if (sub == "heilbronn")
    return with({}, {{"mode", T::String, "pipeline", "pipeline | brute | sweep"},
                     {"n", T::String, "1024", "n, a list a,b,c, or a doubling range a..b"},
                     {"trials", T::Int, 1, "trials per n"},
                     {"seed", T::Int, 0, "random seed"},
                     {"generator", T::String, "uniform_random", "uniform_random | grid"},
                     {"k", T::Int, 3, "polygon size (brute)"},
                     {"brute_max_n", T::Int, 0, "sweep: also run brute force when n <= this"},
                     {"format", T::String, "csv", "csv | json"}});
  if (sub == "unital")
    return with({}, {{"p", T::Int, 3, "odd prime, 3..97"},
                     {"check", T::String, "tangency,vinh", "comma list of tangency, vinh"},
                     {"random_subsets", T::Int, 50, "random (P, L) instances for the Vinh check"},
                     {"seed", T::Int, 0, "random seed"}});
  throw ConfigError("unknown subcommand '" + sub + "'");
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

inline long long parse_int(const std::string& name, const std::string& text) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError("option --" + name + " expects an integer, got '" + text + "'");
  }
  if (pos != text.size()) throw ConfigError("option --" + name + " expects an integer, got '" + text + "'");
  return v;
}

inline double parse_real(const std::string& name, const std::string& text) {
  try {
    return parse_scale(text);
  } catch (const std::exception&) {
    throw ConfigError("option --" + name + " expects a number, got '" + text + "'");
  }
}

inline nlohmann::json generator_from_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& item : split(text, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("generator item '" + item + "' is not key=value");
    j[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return j;
}

/// Canonical generator object: all GeneratorSpec fields, unknown keys rejected.
inline nlohmann::json canonical_generator(const nlohmann::json& given) {
  static const std::vector<std::string> keys{"kind", "n", "delta", "seed", "t", "s", "slope", "n_dust", "input", "slopes"};
  nlohmann::json typed = nlohmann::json::object();
  for (auto it = given.begin(); it != given.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) throw ConfigError("unknown generator key '" + it.key() + "'");
    const auto& v = it.value();
    const std::string& k = it.key();
    if (!v.is_string()) {
      typed[k] = v;
      continue;
    }
    auto s = v.get<std::string>();
    if (k == "kind" || k == "input") typed[k] = s;
    else if (k == "delta") typed[k] = s;
    else if (k == "n" || k == "seed" || k == "n_dust") typed[k] = parse_int("gen." + k, s);
    else if (k == "slopes") {
      std::vector<double> xs;
      for (const auto& x : split(s, ';')) xs.push_back(parse_real("gen.slopes", x));
      typed[k] = xs;
    } else typed[k] = parse_real("gen." + k, s);
  }
  try {
    return GeneratorSpec::from_json(typed).to_json();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad generator spec: ") + e.what());
  }
}

}  // namespace detail

/// Fills defaults, converts CLI strings to typed values and rejects unknown options.
inline nlohmann::json resolve_options(const std::string& sub, const nlohmann::json& given) {
  auto specs = option_specs(sub);
  if (!given.is_object()) throw ConfigError("options must be a JSON object");
  for (auto it = given.begin(); it != given.end(); ++it)
    if (std::none_of(specs.begin(), specs.end(), [&](const OptionSpec& s) { return s.name == it.key(); }))
      throw ConfigError("unknown option '" + it.key() + "' for " + sub);
  nlohmann::json out = nlohmann::json::object();
  for (const auto& spec : specs) {
    nlohmann::json v = given.contains(spec.name) ? given.at(spec.name) : spec.default_value;
    const bool str = v.is_string();
    switch (spec.type) {
      case OptType::String:
        if (!str) throw ConfigError("option --" + spec.name + " expects a string");
        out[spec.name] = v;
        break;
      case OptType::Int:
        if (str) v = detail::parse_int(spec.name, v.get<std::string>());
        if (!v.is_number_integer()) throw ConfigError("option --" + spec.name + " expects an integer");
        out[spec.name] = v.get<long long>();
        break;
      case OptType::Real:
        if (str) v = detail::parse_real(spec.name, v.get<std::string>());
        if (!v.is_number()) throw ConfigError("option --" + spec.name + " expects a number");
        out[spec.name] = v.get<double>();
        break;
      case OptType::Scale: {
        double x = str ? detail::parse_real(spec.name, v.get<std::string>()) : v.is_number() ? v.get<double>() : -1;
        if (!(x > 0) || !std::isfinite(x)) throw ConfigError("option --" + spec.name + " expects a positive scale such as 2^-8");
        out[spec.name] = format_scale(x);
        break;
      }
      case OptType::Bool:
        if (str) {
          auto s = v.get<std::string>();
          if (s == "true" || s == "1") v = true;
          else if (s == "false" || s == "0") v = false;
          else throw ConfigError("option --" + spec.name + " expects true or false");
        }
        if (!v.is_boolean()) throw ConfigError("option --" + spec.name + " expects a boolean");
        out[spec.name] = v;
        break;
      case OptType::Generator:
        if (v.is_null()) out[spec.name] = nullptr;
        else if (str) out[spec.name] = v.get<std::string>().empty() ? nlohmann::json(nullptr) : detail::canonical_generator(detail::generator_from_text(v.get<std::string>()));
        else if (v.is_object()) out[spec.name] = detail::canonical_generator(v);
        else throw ConfigError("option --" + spec.name + " expects key=value pairs");
        break;
    }
  }
  return out;
}

/// The echoed experiment config: rerunning it reproduces every artifact byte for byte.
struct ExperimentConfig {
  std::string subcommand;
  nlohmann::json options;

  nlohmann::json to_json() const { return {{"subcommand", subcommand}, {"options", options}}; }
  static ExperimentConfig from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("subcommand") || !j.at("subcommand").is_string())
      throw ConfigError("config must be an object with a 'subcommand' string");
    ExperimentConfig c{j.at("subcommand").get<std::string>(), j.value("options", nlohmann::json::object())};
    return c;
  }
};

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  try {
    return ExperimentConfig::from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

/// Artifacts keyed by file suffix ("csv", "cert.json", ...), written as <stem>.<suffix>.
using Artifacts = std::map<std::string, std::string>;

struct RunContext {
  const nlohmann::json& opt;
  unsigned workers;
  std::ostream& log;
  Artifacts artifacts;
  std::vector<std::string> violations;

  void check(bool ok, const std::string& what) {
    if (!ok) violations.push_back(what);
  }
  bool selfcheck() const { return opt.at("selfcheck").get<bool>(); }
  std::string str(const char* k) const { return opt.at(k).get<std::string>(); }
  long long integer(const char* k) const { return opt.at(k).get<long long>(); }
  double real(const char* k) const { return opt.at(k).get<double>(); }
  double scale(const char* k) const { return parse_scale(opt.at(k).get<std::string>()); }
  bool flag(const char* k) const { return opt.at(k).get<bool>(); }
};

namespace detail {

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline Configuration load_source(const RunContext& c) {
  const bool has_input = !c.str("input").empty(), has_gen = !c.opt.at("gen").is_null();
  if (has_input == has_gen) throw ConfigError("give exactly one of --input or --gen");
  if (has_input) return load_configuration(c.str("input"));
  return generate(GeneratorSpec::from_json(c.opt.at("gen")));
}

inline void require_format(const RunContext& c, std::initializer_list<const char*> allowed) {
  auto f = c.str("format");
  for (const char* a : allowed)
    if (f == a) return;
  throw ConfigError("unsupported --format '" + f + "'");
}

inline std::size_t nonneg(const RunContext& c, const char* k) {
  auto v = c.integer(k);
  if (v < 0) throw ConfigError(std::string("option --") + k + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    auto lo = parse_int("n", text.substr(0, dots)), hi = parse_int("n", text.substr(dots + 2));
    if (lo < 1 || hi < lo) throw ConfigError("range --n a..b needs 1 <= a <= b");
    for (long long n = lo; n <= hi; n *= 2) out.push_back(static_cast<std::size_t>(n));
    return out;
  }
  for (const auto& item : split(text, ',')) {
    auto v = parse_int("n", item);
    if (v < 1) throw ConfigError("--n values must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError("--n is empty");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.

inline void run_gen(RunContext& c) {
  detail::require_format(c, {"txt", "json"});
  GeneratorSpec g;
  g.kind = c.str("kind");
  g.n = detail::nonneg(c, "n");
  g.delta = c.scale("delta");
  g.seed = static_cast<std::uint64_t>(c.integer("seed"));
  g.t = c.real("t");
  g.s = c.real("s");
  g.slope = c.real("slope");
  g.n_dust = detail::nonneg(c, "n_dust");
  g.input = c.str("points");
  for (const auto& x : detail::split(c.str("slopes"), ',')) g.slopes.push_back(detail::parse_real("slopes", x));
  auto X = generate(g);
  std::ostringstream os;
  if (c.str("format") == "json") os << detail::dump(to_json(X));
  else write_configuration(os, X);
  c.artifacts[c.str("format")] = os.str();
  c.log << "generated " << X.size() << " points, delta=" << format_scale(X.delta()) << '\n';
  if (c.selfcheck()) {
    std::ostringstream again;
    write_configuration(again, generate(g));
    std::ostringstream first;
    write_configuration(first, X);
    c.check(first.str() == again.str(), "generator is not deterministic");
    c.check(X.in_omega(), "configuration leaves Omega");
    if (X.size() >= 2) c.check(min_separation(X.points()) >= X.delta() * (1 - 1e-12), "configuration is not delta-separated");
    if (g.kind == "ad_regular_product") {
      std::vector<Point2> P;
      for (const auto& p : X.points())
        if (P.empty() || !(P.back() == p.point())) P.push_back(p.point());
      std::sort(P.begin(), P.end(), [](const Point2& a, const Point2& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
      P.erase(std::unique(P.begin(), P.end()), P.end());
      c.check(ad_regularity_constant(P, g.t, g.delta) <= 16, "Ahlfors-David constant exceeds 16");
    }
    if (g.kind == "grid_slope_field") {
      auto side = static_cast<std::size_t>(std::lround(2 / g.delta)) + 1;
      c.check(X.size() == side * side, "grid slope field has the wrong point count");
    }
  }
}

inline void run_incidence(RunContext& c) {
  detail::require_format(c, {"csv", "json"});
  auto X = detail::load_source(c);
  double wmin = c.scale("wmin"), wmax = c.scale("wmax");
  if (!is_dyadic(wmin) || !is_dyadic(wmax) || wmin > wmax) throw ConfigError("need dyadic --wmin <= --wmax");
  std::vector<double> ws;
  for (double w = wmax; w >= wmin; w /= 2) ws.push_back(w);
  auto P = X.P();
  auto L = lines_of(X);
  auto prof = incidence_profile(P, L, ws);
  if (c.str("format") == "csv") {
    std::ostringstream os;
    os << "w,I,B,hard_lo,hard_hi\n";
    for (std::size_t i = 0; i < ws.size(); ++i)
      os << format_scale(ws[i]) << ',' << format_real(prof.smoothed[i]) << ',' << format_real(prof.normalized[i]) << ',' << prof.hard_lo[i]
         << ',' << prof.hard_hi[i] << '\n';
    c.artifacts["csv"] = os.str();
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < ws.size(); ++i)
      rows.push_back({{"w", format_scale(ws[i])}, {"I", prof.smoothed[i]}, {"B", prof.normalized[i]}, {"hard_lo", prof.hard_lo[i]}, {"hard_hi", prof.hard_hi[i]}});
    c.artifacts["json"] = detail::dump({{"n", X.size()}, {"rows", rows}});
  }
  c.log << "incidence profile over " << ws.size() << " scales, n=" << X.size() << '\n';
  if (c.selfcheck()) {
    for (std::size_t i = 0; i < ws.size(); ++i) {
      c.check(static_cast<double>(prof.hard_lo[i]) <= prof.smoothed[i] && prof.smoothed[i] <= static_cast<double>(prof.hard_hi[i]),
              "sandwich hard(0.4w) <= I(w) <= hard(0.6w) fails at w=" + format_scale(ws[i]));
      if (X.size() <= 3000) {
        double naive = smoothed_incidences_naive(P, L, ws[i]);
        c.check(std::abs(naive - prof.smoothed[i]) <= 1e-9 * std::max(1.0, naive), "accelerated count differs from the naive sum at w=" + format_scale(ws[i]));
      }
    }
  }
}

inline void run_highlow(RunContext& c) {
  detail::require_format(c, {"csv", "json"});
  auto X = detail::load_source(c);
  auto rep = high_low_scan(X, c.scale("wmin"), c.scale("wmax"), default_kernel(), c.workers);
  if (c.str("format") == "csv") {
    c.artifacts["csv"] = rep.to_csv();
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"w", format_scale(r.w)}, {"I", r.I}, {"B", r.B}, {"B_half", r.B_half}, {"hard_lo", r.hard_lo}, {"hard_hi", r.hard_hi},
                      {"M_pt", r.M_pt}, {"M_line", r.M_line}, {"lhs", r.lhs}, {"rhs_core", r.rhs_core}, {"ratio", r.ratio}});
    c.artifacts["json"] = detail::dump({{"n", rep.n}, {"max_ratio", rep.max_ratio}, {"rows", rows}});
  }
  c.log << "high-low scan: " << rep.rows.size() << " scales, max |B(w)-B(w/2)|/rhs_core = " << format_real(rep.max_ratio) << '\n';
  if (c.selfcheck())
    for (const auto& r : rep.rows) {
      c.check(static_cast<double>(r.hard_lo) <= r.I && r.I <= static_cast<double>(r.hard_hi), "sandwich fails at w=" + format_scale(r.w));
      c.check(std::isfinite(r.ratio), "non-finite ratio at w=" + format_scale(r.w));
    }
}

inline nlohmann::json certificate_json(const UniformizeResult& u, std::size_t input_size) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : u.certificate.entries)
    entries.push_back({{"scale", to_json(e.scale)}, {"min_count", e.min_count}, {"concentration", e.concentration}});
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : u.regularization.bands)
    bands.push_back({{"vertices", b.vertices}, {"top", b.top}, {"threshold", b.threshold}, {"min_degree", b.min_degree}, {"max_degree", b.max_degree}});
  return {{"input_size", input_size},
          {"output_size", u.output.size()},
          {"cube_side", format_scale(u.cube_side)},
          {"K", u.certificate.K},
          {"log2_K_lemma", u.log2_lemma_K},
          {"passes", u.passes(input_size)},
          {"hypergraph", {{"edges", u.regularization.input_edges}, {"stage1_edges", u.regularization.stage1_edges},
                          {"kept_edges", u.regularization.kept.size()}, {"log2_K_band", u.regularization.log2_K}, {"bands", bands}}},
          {"entries", entries}};
}

inline void run_uniformize(RunContext& c) {
  auto X = detail::load_source(c);
  auto m = static_cast<int>(c.integer("m")), T = static_cast<int>(c.integer("T"));
  auto u = uniformize(X, m, T);
  std::ostringstream os;
  write_configuration(os, u.output);
  c.artifacts["txt"] = os.str();
  c.artifacts["cert.json"] = detail::dump(certificate_json(u, X.size()));
  c.log << "uniformize: |X|=" << X.size() << " |X'|=" << u.output.size() << " K=" << format_real(u.certificate.K)
        << " log2 K_lemma=" << format_real(u.log2_lemma_K) << '\n';
  c.log << "scale,min_count,concentration\n";
  for (const auto& e : u.certificate.entries) c.log << e.scale.to_string() << ',' << e.min_count << ',' << e.concentration << '\n';
  if (c.selfcheck()) {
    c.check(u.passes(X.size()), "uniformity certificate fails");
    c.check(u.regularization.bands_hold(), "hypergraph degree bands fail");
  }
}

inline std::vector<double> read_reals(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open point file " + path);
  std::vector<double> xs;
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') {
      std::getline(is, tok);
      continue;
    }
    xs.push_back(detail::parse_real("points", tok));
  }
  return xs;
}

inline void run_katztao(RunContext& c) {
  const double delta = c.scale("delta"), s = c.real("s"), C = c.real("C");
  std::vector<double> P;
  if (c.str("points").empty()) {
    if (!is_dyadic(delta)) throw ConfigError("--delta must be dyadic when no point file is given");
    for (std::int64_t i = 0; static_cast<double>(i) * delta <= 1; ++i) P.push_back(static_cast<double>(i) * delta);
  } else {
    P = read_reals(c.str("points"));
  }
  auto r = katz_tao_extract(P, delta, s, C);
  nlohmann::json dy = nlohmann::json::array();
  for (auto [w, n] : r.windows.dyadic_max) dy.push_back({{"w", format_scale(w)}, {"max_count", n}, {"bound", 4 * std::pow(w / delta, s)}});
  c.artifacts["json"] = detail::dump({{"input_size", P.size()},
                                      {"threshold", r.threshold},
                                      {"required", r.required},
                                      {"steps", r.steps},
                                      {"output_size", r.points.size()},
                                      {"window_violations", r.windows.violations},
                                      {"worst_window_ratio", r.windows.worst_ratio},
                                      {"dyadic_windows", dy},
                                      {"points", r.points}});
  c.log << "katz-tao: " << r.points.size() << " points kept (required " << r.required << "), window violations " << r.windows.violations << '\n';
  if (c.selfcheck()) {
    c.check(r.steps == r.required, "greedy stopped before the required number of steps");
    c.check(r.windows.violations == 0 && r.windows.dyadic_violations == 0, "window bound 4(w/delta)^s violated");
  }
}

inline void run_frostman(RunContext& c) {
  auto X = detail::load_source(c);
  auto rep = check_frostman(X, c.real("alpha"), c.real("beta"));
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : rep.entries) entries.push_back({{"scale", to_json(e.scale)}, {"concentration", e.concentration}, {"ratio", e.ratio}});
  c.artifacts["json"] = detail::dump({{"alpha", rep.alpha}, {"beta", rep.beta}, {"C", rep.C}, {"witness", to_json(rep.witness)}, {"entries", entries}});
  c.log << "frostman: C=" << format_real(rep.C) << " witness " << rep.witness.scale.to_string() << '\n';
  if (c.selfcheck() && !X.empty()) {
    std::size_t direct = 0;
    for (const auto& p : X.points()) direct += rect_contains(rep.witness, p) ? 1 : 0;
    double ratio = static_cast<double>(direct) * std::pow(rep.witness.scale.u, -rep.alpha) * std::pow(rep.witness.scale.w, -rep.beta) /
                   static_cast<double>(X.size());
    c.check(std::abs(ratio - rep.C) <= 1e-9 * std::max(1.0, rep.C), "witness rectangle does not realize C");
  }
}

namespace detail {

struct BranchingRun {
  BranchingFunction f;
  std::optional<UniformizeResult> uniform;
};

inline BranchingRun branching_from_source(RunContext& c, bool sheet_only) {
  auto X = load_source(c);
  auto m = static_cast<int>(c.integer("m")), T = static_cast<int>(c.integer("T"));
  BranchingRun run;
  BranchingOptions opt;
  opt.sheet_only = sheet_only;
  opt.workers = c.workers;
  if (c.flag("uniformize")) {
    run.uniform = uniformize(X, m, T);
    opt.log2_K = std::log2(run.uniform->certificate.K);
    run.f = compute_branching(run.uniform->output, m, T, opt);
  } else {
    run.f = compute_branching(X, m, T, opt);
  }
  return run;
}

}  // namespace detail

inline void run_branching(RunContext& c) {
  detail::require_format(c, {"csv", "json"});
  const bool sheet = c.flag("sheet_only");
  auto run = detail::branching_from_source(c, sheet);
  const auto& f = run.f;
  c.artifacts[c.str("format")] = c.str("format") == "csv" ? f.to_csv() : detail::dump(f.to_json());
  nlohmann::json report = {{"m", f.m()}, {"T", f.T()}, {"tolerance", f.tolerance}, {"log2_K", f.log2_K}, {"certified", f.certified}};
  if (!f.certified) report["warning"] = "input carries no uniformity certificate; property checks may fail";
  std::vector<PropertyReport> reps;
  if (!sheet) {
    reps.push_back(check_lipschitz_monotone(f));
    reps.push_back(check_submodular(f));
    auto dn = direction_numbers(f);
    reps.push_back(check_direction_inequalities(dn, f));
    report["lipschitz_monotone"] = reps[0].to_json();
    report["submodular"] = reps[1].to_json();
    report["directions"] = reps[2].to_json();
  }
  c.artifacts["report.json"] = detail::dump(report);
  c.log << "branching: m=" << f.m() << " T=" << f.T() << " tolerance=" << format_real(f.tolerance) << (f.certified ? "" : " (uncertified)") << '\n';
  for (const auto& r : reps)
    for (const auto& ch : r.checks) c.log << "  " << ch.name << ": max violation " << format_real(std::max(0.0, ch.max_violation)) << '\n';
  if (c.selfcheck()) {
    if (f.has(0, 0, 0)) c.check(f(0, 0, 0) == 0, "f(0,0,0) != 0");
    for (const auto& r : reps)
      for (const auto& ch : r.checks)
        c.check(ch.max_violation <= f.tolerance + 1e-12, ch.name + " violation " + format_real(ch.max_violation) + " exceeds tolerance at " + ch.where);
  }
}

inline BranchingFunction synthetic_branching(const std::string& text, int m, int T) {
  if (text.rfind("linear:", 0) != 0) throw ConfigError("--synthetic expects linear:a,b,c");
  auto parts = detail::split(text.substr(7), ',');
  if (parts.size() != 3) throw ConfigError("--synthetic expects linear:a,b,c");
  double a = detail::parse_real("synthetic", parts[0]), b = detail::parse_real("synthetic", parts[1]), g = detail::parse_real("synthetic", parts[2]);
  auto f = BranchingFunction::from_function(m, T, [&](double x, double y, double z) { return a * x + b * y + g * z; });
  f.tolerance = branching_tolerance(m, T, 0);
  return f;
}

inline void run_effective(RunContext& c) {
  const bool synthetic = !c.str("synthetic").empty();
  auto m = static_cast<int>(c.integer("m")), T = static_cast<int>(c.integer("T"));
  BranchingFunction f;
  if (synthetic) {
    if (!c.str("input").empty() || !c.opt.at("gen").is_null()) throw ConfigError("--synthetic excludes --input and --gen");
    f = synthetic_branching(c.str("synthetic"), m, T);
  } else {
    f = detail::branching_from_source(c, false).f;
  }
  const double c1 = c.str("c1") == "tol" ? f.tolerance * (1 + 1e-9) : detail::parse_real("c1", c.str("c1"));
  const double c2 = c.real("c2");
  auto be = be_functionals(f);
  auto search = find_effective_triple(be, c1, c2);
  auto dn = direction_numbers(f);
  auto st_t = static_cast<int>(c.integer("stability_t"));
  auto scan = directional_stability_scan(dn, st_t, c.real("rho"), f.tolerance);
  nlohmann::json stable = nlohmann::json::array();
  for (auto [x, y] : scan.stable) stable.push_back({x, y});
  nlohmann::json out = {{"m", m},
                        {"T", T},
                        {"tolerance", f.tolerance},
                        {"c1", c1},
                        {"c2", c2},
                        {"candidates", search.candidates},
                        {"best_margin", std::isfinite(search.best_margin) ? nlohmann::json(search.best_margin) : nlohmann::json(nullptr)},
                        {"triple", search.triple ? search.triple->to_json(m) : nlohmann::json(nullptr)},
                        {"stability", {{"t", st_t}, {"rho", scan.rho}, {"slack", scan.slack}, {"stable", stable}, {"unstable_count", scan.unstable.size()},
                                       {"telescoping_applicable", scan.telescoping_applicable}, {"telescoping_ok", scan.telescoping_ok}}}};
  c.artifacts["json"] = detail::dump(out);
  c.log << "effective: " << (search.triple ? "certified triple found" : "no triple") << " (c1=" << format_real(c1)
        << ", best margin " << format_real(search.best_margin) << ")\n";
  if (c.selfcheck()) {
    if (search.triple) c.check(certify_effective(be, *search.triple), "returned triple fails re-verification");
    if (scan.telescoping_applicable) c.check(scan.telescoping_ok, "telescoping pigeonhole found no stable point");
  }
}

inline void run_heilbronn(RunContext& c) {
  detail::require_format(c, {"csv", "json"});
  const auto mode = c.str("mode");
  auto ns = detail::parse_n_list(c.str("n"));
  const auto trials = detail::nonneg(c, "trials");
  const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
  const auto gen = c.str("generator");
  const bool csv = c.str("format") == "csv";
  if (trials == 0) throw ConfigError("--trials must be positive");
  if (mode == "sweep") {
    auto r = exponent_sweep(gen, ns, trials, seed, detail::nonneg(c, "brute_max_n"), c.workers);
    if (csv) {
      c.artifacts["csv"] = r.to_csv();
    } else {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& x : r.rows) rows.push_back({{"n", x.n}, {"trial", x.trial}, {"method", x.method}, {"area", x.area}, {"dist", x.dist}});
      auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
      c.artifacts["json"] = detail::dump({{"rows", rows}, {"slope", num(r.slope)}, {"brute_slope", num(r.brute_slope)}, {"degenerate", r.degenerate},
                                          {"max_pair_ratio", r.max_pair_ratio}});
    }
    c.log << "sweep: slope=" << format_real(r.slope) << (r.degenerate ? " (degenerate)" : "") << " max pair ratio=" << format_real(r.max_pair_ratio) << '\n';
    if (c.selfcheck()) {
      c.check(r.max_pair_ratio <= 1, "pair distance exceeds 10/sqrt(n)");
      c.check(r.pipeline_above_brute, "pipeline area below the brute-force minimum");
    }
    return;
  }
  if (mode != "pipeline" && mode != "brute") throw ConfigError("--mode must be pipeline, brute or sweep");
  if (ns.size() != 1) throw ConfigError("--mode " + mode + " takes a single n");
  const auto n = ns[0];
  const auto k = detail::nonneg(c, "k");
  std::ostringstream os;
  nlohmann::json rows = nlohmann::json::array();
  if (csv) os << "n,trial,method,area,dist,i,j,l\n";
  for (std::size_t t = 0; t < trials; ++t) {
    auto P = heilbronn_points(gen, n, derive_seed(seed, n, t));
    TriangleResult r = mode == "pipeline" ? small_triangle_pipeline(P) : brute_force_min_triangle(P, k, c.workers);
    if (csv) {
      os << n << ',' << t << ',' << r.method << ',' << format_real(r.area) << ',' << format_real(r.dist);
      for (std::size_t x = 0; x < 3; ++x) os << ',' << (x < r.indices.size() ? std::to_string(r.indices[x]) : "");
      os << '\n';
    } else {
      rows.push_back({{"n", n}, {"trial", t}, {"method", r.method}, {"area", r.area}, {"dist", r.dist}, {"indices", r.indices}});
    }
    if (c.selfcheck()) {
      c.check(std::abs(r.recompute(P) - r.area) <= 1e-15, "stored area differs from the recomputed area");
      if (mode == "pipeline") {
        auto pairing = greedy_pairing(P);
        c.check(pairing.max_distance <= pairing.bound(), "pair distance exceeds 10/sqrt(n)");
        c.check(std::abs(r.area - 0.5 * r.base * r.dist) <= 1e-12, "area differs from base * dist / 2");
        if (n <= 256) c.check(r.area >= brute_force_min_triangle(P, 3).area, "pipeline area below the brute-force minimum");
      }
    }
  }
  c.artifacts[csv ? "csv" : "json"] = csv ? os.str() : detail::dump({{"rows", rows}});
  c.log << mode << ": " << trials << " trial(s) at n=" << n << '\n';
}

inline void run_unital(RunContext& c) {
  const auto p = c.integer("p");
  if (p < 3 || p > 97 || !is_prime(static_cast<std::uint32_t>(p))) throw ConfigError("--p must be an odd prime in [3, 97]");
  FiniteField F(static_cast<std::uint32_t>(p));
  auto cfg = build_unital(F);
  const std::uint64_t expected = static_cast<std::uint64_t>(p * p * p - p);
  nlohmann::json out = {{"p", p}, {"q", F.q()}, {"modulus", F.modulus_string()}, {"points", cfg.points.size()}, {"expected_points", expected}};
  auto checks = detail::split(c.str("check"), ',');
  bool all_ok = cfg.points.size() == expected;
  for (const auto& ch : checks) {
    if (ch == "tangency") {
      auto t = verify_tangency(F, cfg);
      out["tangency"] = {{"pass", t.pass}, {"checked", t.checked}, {"witness", t.witness ? nlohmann::json(*t.witness) : nlohmann::json(nullptr)}, {"reason", t.reason}};
      all_ok = all_ok && t.pass;
    } else if (ch == "vinh") {
      auto uni = vinh_check(F, point_ids(F, cfg), cfg.tangents);
      out["vinh_unital"] = uni.to_json();
      std::size_t passed = 0;
      double worst = 0;
      const auto count = detail::nonneg(c, "random_subsets");
      for (std::size_t i = 0; i < count; ++i) {
        auto [P, L] = random_incidence_instance(F, derive_seed(static_cast<std::uint64_t>(c.integer("seed")), static_cast<std::uint64_t>(p), i));
        auto r = vinh_check(F, P, L);
        passed += r.pass ? 1 : 0;
        if (r.bound > 0) worst = std::max(worst, r.slack / r.bound);
      }
      out["vinh_random"] = {{"instances", count}, {"passed", passed}, {"worst_slack_over_bound", worst}};
      all_ok = all_ok && uni.pass && passed == count;
      auto nontrivial = nontrivial_incidences(F, cfg);
      out["sharpness"] = {{"nontrivial_incidences", nontrivial}, {"threshold", std::pow(static_cast<double>(F.q()), 1.5) + F.q()}};
    } else {
      throw ConfigError("unknown --check item '" + ch + "' (expected tangency, vinh)");
    }
  }
  c.artifacts["json"] = detail::dump(out);
  c.log << "unital p=" << p << ": |P|=" << cfg.points.size() << (all_ok ? " all checks pass" : " CHECK FAILED") << '\n';
  if (c.selfcheck()) c.check(all_ok, "unital checks failed");
}

inline const std::map<std::string, std::function<void(RunContext&)>>& handlers() {
  static const std::map<std::string, std::function<void(RunContext&)>> h{
      {"gen", run_gen},           {"incidence", run_incidence}, {"highlow", run_highlow},     {"uniformize", run_uniformize},
      {"katztao", run_katztao},   {"frostman", run_frostman},   {"branching", run_branching}, {"effective", run_effective},
      {"heilbronn", run_heilbronn}, {"unital", run_unital}};
  return h;
}

/// Output stem: an absolute --out as given; otherwise <$INCLAB_OUT_DIR or .>/<--out or subcommand>.
inline std::string output_stem(const std::string& sub, const std::string& explicit_out) {
  std::filesystem::path out = explicit_out.empty() ? std::filesystem::path(sub) : std::filesystem::path(explicit_out);
  if (out.is_absolute()) return out.string();
  const char* dir = std::getenv(kOutDirEnv);
  if (!(dir && *dir)) return explicit_out.empty() ? (std::filesystem::path(".") / out).string() : out.string();
  return (std::filesystem::path(dir) / out).string();
}

/// Writes every artifact to <stem>.<suffix>; on any failure nothing is left behind.
inline std::vector<std::string> write_artifacts(const std::string& stem, const Artifacts& artifacts) {
  std::vector<std::string> staged, final_paths;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& p : staged) std::filesystem::remove(p, ec);
    for (const auto& p : final_paths) std::filesystem::remove(p, ec);
  };
  try {
    auto parent = std::filesystem::path(stem).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    for (const auto& [suffix, content] : artifacts) {
      std::string path = stem + "." + suffix + ".partial";
      staged.push_back(path);
      std::ofstream os(path, std::ios::binary);
      os << content;
      os.close();
      if (!os) throw std::runtime_error("cannot write " + path);
    }
    for (std::size_t i = 0; i < staged.size(); ++i) {
      std::string target = staged[i].substr(0, staged[i].size() - 8);
      std::filesystem::rename(staged[i], target);
      final_paths.push_back(target);
    }
    staged.clear();
  } catch (...) {
    cleanup();
    throw;
  }
  return final_paths;
}

/// Resolves options, runs the subcommand, writes artifacts plus <stem>.config.json, and returns the exit code.
inline int execute(const std::string& sub, const nlohmann::json& given, const std::string& out, unsigned workers, std::ostream& log,
                   std::ostream& err) {
  try {
    if (!handlers().count(sub)) throw ConfigError("unknown subcommand '" + sub + "'");
    auto opt = resolve_options(sub, given);
    RunContext ctx{opt, std::max(1u, workers), log, {}, {}};
    try {
      handlers().at(sub)(ctx);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    } catch (const std::domain_error& e) {
      throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(e.what());
    }
    if (!ctx.violations.empty()) {
      for (const auto& v : ctx.violations) err << "selfcheck violation: " << v << '\n';
      return kExitSelfcheck;
    }
    ctx.artifacts["config.json"] = detail::dump(ExperimentConfig{sub, opt}.to_json());
    auto paths = write_artifacts(output_stem(sub, out), ctx.artifacts);
    for (const auto& p : paths) log << "wrote " << p << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace inclab::cli
