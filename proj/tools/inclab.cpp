#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "incidence_lab/cli_runner.hpp"

namespace {

const std::map<std::string, std::string> kDescriptions{
    {"gen", "generate a phase-space configuration"},
    {"incidence", "smoothed and hard incidence counts across scales"},
    {"highlow", "high-low inequality ratios across scales"},
    {"uniformize", "extract a uniform subset with a certificate"},
    {"katztao", "Katz-Tao extraction from a Frostman set of reals"},
    {"frostman", "maximizing rectangle and Frostman constant"},
    {"branching", "branching function and structure-lemma checks"},
    {"effective", "effective-triple and directional-stability search"},
    {"heilbronn", "small-triangle pipeline, brute force, and sweeps"},
    {"unital", "Hermitian unital tangency and Vinh bound checks"},
};

struct SubcommandState {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  std::string config;
  std::string out;
  unsigned workers = 1;
};

}  // namespace

int main(int argc, char** argv) {
  using namespace inclab::cli;
  CLI::App app{"Discretized incidence geometry laboratory"};
  app.require_subcommand(1);
  app.footer(std::string("Default output directory: $") + kOutDirEnv + " (else the working directory).\n"
             "Exit codes: 0 ok, 2 config error, 3 selfcheck violation.");
  std::map<std::string, SubcommandState> states;
  for (const auto& name : subcommands()) states[name];
  for (const auto& name : subcommands()) {
    auto& st = states[name];
    auto* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("--config", st.config, "rerun an echoed <stem>.config.json; explicit flags override it");
    sub->add_option("--out", st.out, "output path stem; artifacts are <stem>.<suffix>");
    sub->add_option("--workers", st.workers, "worker threads (outputs do not depend on this)")->check(CLI::Range(1u, 256u));
    for (const auto& spec : option_specs(name)) {
      auto help = spec.help + " [default: " + (spec.default_value.is_string() ? spec.default_value.get<std::string>() : spec.default_value.dump()) + "]";
      if (spec.type == OptType::Bool) {
        st.flags[spec.name] = false;
        st.options[spec.name] = sub->add_flag("--" + spec.name, st.flags[spec.name], help);
      } else {
        st.values[spec.name];
        st.options[spec.name] = sub->add_option("--" + spec.name, st.values[spec.name], help);
      }
    }
    if (name == "heilbronn") sub->add_option("mode_positional", st.values["mode"], "pipeline | brute | sweep");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (const auto& name : subcommands()) {
    auto* sub = app.get_subcommand(name);
    if (!sub->parsed()) continue;
    auto& st = states[name];
    nlohmann::json given = nlohmann::json::object();
    try {
      if (!st.config.empty()) {
        auto cfg = load_config(st.config);
        if (cfg.subcommand != name) throw ConfigError("config is for '" + cfg.subcommand + "', not '" + name + "'");
        given = cfg.options;
      }
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
    for (const auto& [key, opt] : st.options)
      if (opt->count() > 0) {
        if (st.flags.count(key)) given[key] = st.flags[key];
        else given[key] = st.values[key];
      }
    if (name == "heilbronn" && sub->get_option("mode_positional")->count() > 0) given["mode"] = st.values["mode"];
    return execute(name, given, st.out, st.workers, std::cout, std::cerr);
  }
  return kExitConfig;
}
