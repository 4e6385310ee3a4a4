// wvsim: batch driver for the weak-value measurement scenarios.
//
// One subcommand per scenario kind builds a config from flags; `scenario run`
// loads a JSON file or a built-in by name. Every path funnels through the
// same parse/validate/run pipeline, so file-driven and flag-driven runs are
// byte-identical for equal parameters.
//
// Exit codes: 0 success, 2 validation/parse error, 3 runtime/model error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "wv/scenario.hpp"

namespace {

struct KindFlags {
  std::string pre, post, observable, system, out;
  double delta = 0, total_time = 0, lambda = 0, theta = 0, epsilon = 0, grid_l = 0;
  int n = 0, level = 0, doublings = 0, grid_m = 0, threads = 1;
  std::uint64_t seed = 0, samples = 0;
};

// Preset names pass through as JSON strings; anything starting with '[' is
// parsed as an inline JSON matrix/state literal.
nlohmann::json state_or_json(const std::string& text) {
  if (!text.empty() && text.front() == '[') {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw wv::ParseError(std::string("inline JSON: ") + e.what());
    }
  }
  return nlohmann::json(text);
}

void add_common_flags(CLI::App* cmd, KindFlags& f) {
  cmd->add_option("--seed", f.seed, "random seed (64-bit)");
  cmd->add_option("--out", f.out, "output CSV path (default: stdout)");
  cmd->add_option("--samples", f.samples, "number of single-shot samples");
  cmd->add_option("--delta", f.delta, "pointer width");
  cmd->add_option("--T", f.total_time, "total interaction time");
  cmd->add_option("--N", f.n, "ancilla spin / spin-j dimension parameter");
  cmd->add_option("--lambda", f.lambda, "protection coupling strength");
  cmd->add_option("--theta", f.theta, "theta-family pre/post selection angle");
  cmd->add_option("--grid-m", f.grid_m, "grid points (power of two >= 64)");
  cmd->add_option("--grid-l", f.grid_l, "grid extent");
  cmd->add_option("--threads", f.threads, "worker threads (results are identical)");
}

bool given(const CLI::App* cmd, const std::string& name) {
  const CLI::Option* opt = cmd->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

nlohmann::json flags_to_json(const CLI::App* cmd, const KindFlags& f,
                             const std::string& kind) {
  nlohmann::json j;
  j["kind"] = kind;
  if (given(cmd, "--pre")) j["pre_state"] = state_or_json(f.pre);
  if (given(cmd, "--post")) j["post_state"] = state_or_json(f.post);
  if (given(cmd, "--observable")) j["observable"] = state_or_json(f.observable);
  if (given(cmd, "--system")) j["system"] = state_or_json(f.system);
  if (given(cmd, "--delta")) j["delta"] = f.delta;
  if (given(cmd, "--T")) j["T"] = f.total_time;
  if (given(cmd, "--lambda")) j["lambda"] = f.lambda;
  if (given(cmd, "--theta")) j["theta"] = f.theta;
  if (given(cmd, "--epsilon")) j["epsilon"] = f.epsilon;
  if (given(cmd, "--N")) j["N"] = f.n;
  if (given(cmd, "--level")) j["level"] = f.level;
  if (given(cmd, "--doublings")) j["doublings"] = f.doublings;
  if (given(cmd, "--samples")) j["samples"] = f.samples;
  if (given(cmd, "--seed")) j["seed"] = f.seed;
  if (given(cmd, "--grid-m") || given(cmd, "--grid-l")) {
    nlohmann::json g = nlohmann::json::object();
    if (given(cmd, "--grid-m")) g["m"] = f.grid_m;
    if (given(cmd, "--grid-l")) g["l"] = f.grid_l;
    j["grid"] = g;
  }
  return j;
}

int execute(const wv::ScenarioConfig& cfg, const std::string& out_override,
            int threads) {
  wv::ScenarioConfig run_cfg = cfg;
  if (!out_override.empty()) run_cfg.output = out_override;
  std::ostringstream body;
  wv::run_scenario(run_cfg, body, wv::RunOptions{threads});
  if (run_cfg.output.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream file(run_cfg.output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file " + run_cfg.output);
    file << body.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-value measurement simulator"};
  app.require_subcommand(1);

  static const std::vector<std::string> kinds{
      "weakvalue",  "impulsive",    "weak-ensemble", "postselect",
      "protective", "nonhermitian", "protect2sv",    "kaon-toy"};

  std::map<std::string, KindFlags> flags;
  std::map<std::string, CLI::App*> kind_cmds;
  for (const std::string& kind : kinds) {
    CLI::App* cmd = app.add_subcommand(kind, "run a " + kind + " scenario");
    KindFlags& f = flags[kind];
    cmd->add_option("--pre", f.pre, "pre-selected state (preset or JSON)");
    cmd->add_option("--post", f.post, "post-selected state (preset or JSON)");
    cmd->add_option("--observable", f.observable, "measured observable (preset or JSON)");
    cmd->add_option("--system", f.system, "system Hamiltonian (preset or JSON)");
    cmd->add_option("--epsilon", f.epsilon, "eigen-ket overlap for kaon-toy");
    cmd->add_option("--level", f.level, "protected energy level index");
    cmd->add_option("--doublings", f.doublings, "number of T doublings to scan");
    add_common_flags(cmd, f);
    kind_cmds[kind] = cmd;
  }

  CLI::App* scen = app.add_subcommand("scenario", "work with scenario files");
  scen->require_subcommand(1);
  CLI::App* scen_list = scen->add_subcommand("list", "list built-in scenarios");
  CLI::App* scen_show = scen->add_subcommand("show", "print a built-in as JSON");
  std::string show_name;
  scen_show->add_option("name", show_name, "built-in scenario name")->required();
  CLI::App* scen_run = scen->add_subcommand("run", "run a scenario file or built-in");
  std::string run_target;
  scen_run->add_option("target", run_target, "path to a JSON file, or a built-in name")
      ->required();
  KindFlags run_flags;
  add_common_flags(scen_run, run_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (scen_list->parsed()) {
      std::cout << wv::list_builtin();
      return 0;
    }
    if (scen_show->parsed()) {
      const wv::BuiltinScenario* b = wv::find_builtin(show_name);
      if (!b) throw wv::ValidationError("unknown built-in scenario '" + show_name + "'");
      std::cout << wv::serialize_scenario(b->config) << "\n";
      return 0;
    }
    if (scen_run->parsed()) {
      nlohmann::json doc;
      if (const wv::BuiltinScenario* b = wv::find_builtin(run_target)) {
        doc = nlohmann::json::parse(wv::serialize_scenario(b->config));
      } else if (std::filesystem::exists(run_target)) {
        std::ifstream file(run_target);
        std::stringstream buf;
        buf << file.rdbuf();
        doc = nlohmann::json::parse(wv::serialize_scenario(wv::parse_scenario(buf.str())));
      } else {
        throw wv::ValidationError("no scenario file or built-in named '" + run_target +
                                  "'");
      }
      // flag overrides
      nlohmann::json patch = flags_to_json(scen_run, run_flags, doc["kind"]);
      for (const auto& [key, value] : patch.items()) doc[key] = value;
      wv::ScenarioConfig cfg = wv::parse_scenario(doc.dump());
      return execute(cfg, run_flags.out, run_flags.threads);
    }
    for (const std::string& kind : kinds) {
      if (kind_cmds[kind]->parsed()) {
        KindFlags& f = flags[kind];
        wv::ScenarioConfig cfg =
            wv::parse_scenario(flags_to_json(kind_cmds[kind], f, kind).dump());
        return execute(cfg, f.out, f.threads);
      }
    }
    throw wv::ValidationError("no subcommand selected");
  } catch (const wv::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const wv::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const wv::Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
