#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "incidence_lab/common.hpp"
#include "incidence_lab/phase_space.hpp"
#include "json.hpp"

namespace inclab {

/// Text format: "# delta=<value>" header, optional "# generator=", "# seed=", "# params=" lines, then "a b c" per line.
inline void write_configuration(std::ostream& os, const Configuration& X) {
  os << "# delta=" << format_scale(X.delta()) << '\n';
  const auto& prov = X.provenance();
  if (!prov.generator.empty()) os << "# generator=" << prov.generator << '\n';
  if (!prov.generator.empty() || prov.seed != 0) os << "# seed=" << prov.seed << '\n';
  if (!prov.params.empty()) os << "# params=" << prov.params << '\n';
  std::string line;
  for (const auto& p : X.points()) {
    line = format_real(p.a);
    line += ' ';
    line += format_real(p.b);
    line += ' ';
    line += format_real(p.c);
    line += '\n';
    os << line;
  }
}

inline Configuration read_configuration(std::istream& is) {
  std::string line;
  double delta = -1;
  Provenance prov;
  std::vector<PhasePoint> pts;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(" \t"));
      key.erase(key.find_last_not_of(" \t") + 1);
      std::string value = line.substr(eq + 1);
      if (key == "delta") delta = parse_scale(value);
      else if (key == "generator") prov.generator = value;
      else if (key == "seed") prov.seed = std::stoull(value);
      else if (key == "params") prov.params = value;
      continue;
    }
    std::istringstream ls(line);
    PhasePoint p;
    std::string extra;
    if (!(ls >> p.a >> p.b >> p.c) || (ls >> extra))
      throw std::invalid_argument("configuration line " + std::to_string(lineno) + " is not 'a b c'");
    pts.push_back(p);
  }
  if (delta < 0) throw std::invalid_argument("configuration is missing its '# delta=' header");
  return Configuration(std::move(pts), delta, prov);
}

inline void save_configuration(const std::string& path, const Configuration& X) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_configuration(os, X);
  if (!os) throw std::runtime_error("error while writing " + path);
}

inline Configuration load_configuration(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open configuration " + path);
  return read_configuration(is);
}

inline nlohmann::json to_json(const ScaleTriple& s) {
  return {{"u", format_scale(s.u)}, {"v", format_scale(s.v)}, {"w", format_scale(s.w)}};
}

inline nlohmann::json to_json(const PhasePoint& p) { return nlohmann::json::array({p.a, p.b, p.c}); }

inline nlohmann::json to_json(const PhaseRect& r) {
  return {{"center", to_json(r.center)}, {"scale", to_json(r.scale)}, {"dyadic", r.dyadic}};
}

inline nlohmann::json to_json(const Configuration& X) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : X.points()) pts.push_back(to_json(p));
  return {{"delta", format_scale(X.delta())},
          {"metadata", {{"generator", X.provenance().generator}, {"seed", X.provenance().seed}, {"params", X.provenance().params}}},
          {"points", std::move(pts)}};
}

inline Configuration configuration_from_json(const nlohmann::json& j) {
  double delta = j.at("delta").is_string() ? parse_scale(j.at("delta").get<std::string>()) : j.at("delta").get<double>();
  Provenance prov;
  if (j.contains("metadata")) {
    const auto& m = j.at("metadata");
    prov.generator = m.value("generator", "");
    prov.seed = m.value("seed", std::uint64_t{0});
    prov.params = m.value("params", "");
  }
  std::vector<PhasePoint> pts;
  for (const auto& p : j.at("points")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  return Configuration(std::move(pts), delta, prov);
}

}  // namespace inclab
