#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "wv/adiabatic.hpp"

namespace wv {

using nlohmann::json;

// Scenario configuration. State/operator fields keep their JSON spelling
// (preset name or explicit matrix) and are resolved when the scenario runs,
// so serialize/parse round-trips are exact.
struct ScenarioConfig {
  std::string kind;
  json system;       // preset ("pauli", "spin-j", "heff") or explicit matrix
  json pre_state;    // preset ("up_x", ...) or explicit amplitude list
  json post_state;
  json observable;   // preset ("sigma_x", "S_z", ...) or explicit matrix
  std::optional<double> delta;
  std::optional<double> total_time;  // "T"
  std::optional<double> lambda;
  std::optional<double> theta;
  std::optional<double> epsilon;
  std::optional<int> ancilla_n;  // "N"
  std::optional<int> level;
  std::optional<int> doublings;
  std::optional<int> grid_m;
  std::optional<double> grid_l;
  std::optional<std::uint64_t> samples;
  std::uint64_t seed = 12345;
  std::string output;  // empty: write to stdout

  bool operator==(const ScenarioConfig&) const = default;
};

struct RunOptions {
  int threads = 1;
};

namespace scenario_detail {

inline const std::set<std::string>& known_kinds() {
  static const std::set<std::string> kinds{"weakvalue",  "impulsive",  "weak-ensemble",
                                           "postselect", "protective", "nonhermitian",
                                           "protect2sv", "kaon-toy"};
  return kinds;
}

inline const std::map<std::string, std::string>& kind_refs() {
  static const std::map<std::string, std::string> refs{
      {"weakvalue", "Eq. (1)"},        {"impulsive", "Eqs. (5)-(7)"},
      {"weak-ensemble", "Eq. (8)"},    {"postselect", "Eqs. (10)-(12)"},
      {"protective", "Eq. (9)"},       {"nonhermitian", "Eq. (19)"},
      {"protect2sv", "Eqs. (13)-(15)"}, {"kaon-toy", "Eq. (16)"}};
  return refs;
}

inline bool is_complex_pair(const json& j) {
  return j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number();
}

inline Complex to_complex(const json& j) {
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline VectorXcd parse_state_array(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty())
    throw ValidationError(field + ": expected a nonempty list of [re, im] pairs");
  VectorXcd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!is_complex_pair(j[i]))
      throw ValidationError(field + ": entry " + std::to_string(i) +
                            " is not a [re, im] pair");
    v[i] = to_complex(j[i]);
  }
  return v;
}

inline MatrixXcd parse_matrix_array(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty())
    throw ValidationError(field + ": expected a list of matrix rows");
  std::size_t n = j.size();
  MatrixXcd m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != n)
      throw ValidationError(field + ": matrix must be square");
    for (std::size_t c = 0; c < n; ++c) {
      if (!is_complex_pair(j[r][c]))
        throw ValidationError(field + ": entry (" + std::to_string(r) + "," +
                              std::to_string(c) + ") is not a [re, im] pair");
      m(r, c) = to_complex(j[r][c]);
    }
  }
  return m;
}

inline void validate_state_or_preset(const json& j, const std::string& field) {
  static const std::set<std::string> names{"up_x", "down_x", "up_y",
                                           "down_y", "up_z", "down_z"};
  if (j.is_string()) {
    if (!names.count(j.get<std::string>()))
      throw ValidationError(field + ": unknown state preset '" +
                            j.get<std::string>() + "'");
    return;
  }
  parse_state_array(j, field);
}

inline void validate_operator_or_preset(const json& j, const std::string& field,
                                        bool have_n) {
  static const std::set<std::string> pauli{"sigma_x", "sigma_y", "sigma_z", "identity"};
  static const std::set<std::string> spin{"S_x", "S_y", "S_z"};
  if (j.is_string()) {
    std::string name = j.get<std::string>();
    if (pauli.count(name)) return;
    if (spin.count(name)) {
      if (!have_n)
        throw ValidationError(field + ": spin preset '" + name + "' needs N");
      return;
    }
    throw ValidationError(field + ": unknown operator preset '" + name + "'");
  }
  parse_matrix_array(j, field);
}

inline StateVector resolve_state(const json& j, const std::string& field) {
  if (j.is_string()) {
    std::string name = j.get<std::string>();
    double half = 0.5;
    if (name == "up_x") return axis_top_state(Vector3d::UnitX(), half);
    if (name == "down_x") return axis_top_state(-Vector3d::UnitX(), half);
    if (name == "up_y") return axis_top_state(Vector3d::UnitY(), half);
    if (name == "down_y") return axis_top_state(-Vector3d::UnitY(), half);
    if (name == "up_z") return StateVector::basis(2, 0);
    if (name == "down_z") return StateVector::basis(2, 1);
    throw ValidationError(field + ": unknown state preset '" + name + "'");
  }
  return StateVector(parse_state_array(j, field));
}

inline Operator resolve_operator(const json& j, const std::string& field,
                                 std::optional<int> n) {
  if (j.is_string()) {
    std::string name = j.get<std::string>();
    if (name == "sigma_x") return pauli_x();
    if (name == "sigma_y") return pauli_y();
    if (name == "sigma_z") return pauli_z();
    if (name == "identity") return identity(2);
    if (name == "S_x" || name == "S_y" || name == "S_z") {
      if (!n) throw ValidationError(field + ": spin preset '" + name + "' needs N");
      SpinOperators s = spin_operators(static_cast<double>(*n));
      if (name == "S_x") return s.x;
      if (name == "S_y") return s.y;
      return s.z;
    }
    throw ValidationError(field + ": unknown operator preset '" + name + "'");
  }
  return Operator(parse_matrix_array(j, field));
}

inline TwoStateVector resolve_tsv(const ScenarioConfig& cfg) {
  if (cfg.theta) {
    double t = *cfg.theta;
    VectorXcd k(2), b(2);
    k << std::cos(t), std::sin(t);
    b << std::cos(t), -std::sin(t);
    return TwoStateVector(StateVector(k), StateVector(b));
  }
  return TwoStateVector(resolve_state(cfg.pre_state, "pre_state"),
                        resolve_state(cfg.post_state, "post_state"));
}

inline Grid resolve_grid(const ScenarioConfig& cfg, double delta, double max_center) {
  if (cfg.grid_m && cfg.grid_l) return Grid(*cfg.grid_m, *cfg.grid_l);
  Grid def = Grid::suggest(delta, max_center);
  if (cfg.grid_m) return Grid(*cfg.grid_m, def.extent);
  if (cfg.grid_l) return Grid(def.points, *cfg.grid_l);
  return def;
}

template <typename T>
void require_field(const std::optional<T>& field, const char* name,
                   const std::string& kind) {
  if (!field)
    throw ValidationError(std::string(name) + ": required for kind=" + kind);
}

inline void require_json(const json& j, const char* name, const std::string& kind) {
  if (j.is_null())
    throw ValidationError(std::string(name) + ": required for kind=" + kind);
}

}  // namespace scenario_detail

// Parses and validates a scenario document. Unknown keys are rejected;
// malformed JSON raises ParseError with the byte position.
inline ScenarioConfig parse_scenario(const std::string& text) {
  namespace sd = scenario_detail;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("scenario: top level must be an object");

  static const std::set<std::string> allowed{
      "kind",    "system", "pre_state", "post_state", "observable", "delta",
      "T",       "lambda", "theta",     "epsilon",    "N",          "level",
      "doublings", "grid", "samples",   "seed",       "output"};
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "'");

  ScenarioConfig cfg;
  if (!j.contains("kind") || !j["kind"].is_string())
    throw ValidationError("kind: required string field");
  cfg.kind = j["kind"].get<std::string>();
  if (!sd::known_kinds().count(cfg.kind))
    throw ValidationError("kind: unknown scenario kind '" + cfg.kind + "'");

  auto get_num = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number()) throw ValidationError(std::string(key) + ": must be a number");
    return j[key].get<double>();
  };
  auto get_int = [&](const char* key) -> std::optional<int> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number_integer())
      throw ValidationError(std::string(key) + ": must be an integer");
    return j[key].get<int>();
  };

  cfg.delta = get_num("delta");
  cfg.total_time = get_num("T");
  cfg.lambda = get_num("lambda");
  cfg.theta = get_num("theta");
  cfg.epsilon = get_num("epsilon");
  cfg.ancilla_n = get_int("N");
  cfg.level = get_int("level");
  cfg.doublings = get_int("doublings");
  if (j.contains("samples")) {
    if (!j["samples"].is_number_integer() || j["samples"].get<long long>() < 1)
      throw ValidationError("samples: must be a positive integer");
    cfg.samples = j["samples"].get<std::uint64_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ValidationError("seed: must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ValidationError("output: must be a string");
    cfg.output = j["output"].get<std::string>();
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_object()) throw ValidationError("grid: must be an object {m, l}");
    for (const auto& [key, value] : g.items())
      if (key != "m" && key != "l") throw ValidationError("grid: unknown key '" + key + "'");
    if (g.contains("m")) {
      if (!g["m"].is_number_integer()) throw ValidationError("grid.m: must be an integer");
      cfg.grid_m = g["m"].get<int>();
    }
    if (g.contains("l")) {
      if (!g["l"].is_number()) throw ValidationError("grid.l: must be a number");
      cfg.grid_l = g["l"].get<double>();
    }
  }
  if (j.contains("system")) cfg.system = j["system"];
  if (j.contains("pre_state")) cfg.pre_state = j["pre_state"];
  if (j.contains("post_state")) cfg.post_state = j["post_state"];
  if (j.contains("observable")) cfg.observable = j["observable"];

  // numeric sanity
  if (cfg.delta && !(*cfg.delta > 0.0))
    throw ValidationError("delta: must be positive");
  if (cfg.total_time && !(*cfg.total_time > 0.0))
    throw ValidationError("T: must be positive");
  if (cfg.epsilon && !(*cfg.epsilon > 0.0 && *cfg.epsilon < 1.0))
    throw ValidationError("epsilon: must lie in (0, 1)");
  if (cfg.ancilla_n && *cfg.ancilla_n < 1)
    throw ValidationError("N: must be a positive integer");
  if (cfg.level && *cfg.level < 0) throw ValidationError("level: must be nonnegative");
  if (cfg.doublings && *cfg.doublings < 0)
    throw ValidationError("doublings: must be nonnegative");

  // structural validation of state/operator payloads
  namespace sdn = scenario_detail;
  bool have_n = cfg.ancilla_n.has_value();
  if (!cfg.pre_state.is_null()) sdn::validate_state_or_preset(cfg.pre_state, "pre_state");
  if (!cfg.post_state.is_null())
    sdn::validate_state_or_preset(cfg.post_state, "post_state");
  if (!cfg.observable.is_null())
    sdn::validate_operator_or_preset(cfg.observable, "observable", have_n);
  if (!cfg.system.is_null() && !cfg.system.is_string())
    sdn::parse_matrix_array(cfg.system, "system");
  if (cfg.system.is_string()) {
    std::string name = cfg.system.get<std::string>();
    if (name != "pauli" && name != "spin-j" && name != "heff")
      throw ValidationError("system: unknown preset '" + name + "'");
  }

  // kind-specific required fields
  const std::string& k = cfg.kind;
  if (k == "weakvalue" || k == "postselect") {
    sdn::require_json(cfg.observable, "observable", k);
    if (!cfg.theta) {
      sdn::require_json(cfg.pre_state, "pre_state", k);
      sdn::require_json(cfg.post_state, "post_state", k);
    }
    if (k == "postselect") sdn::require_field(cfg.delta, "delta", k);
  } else if (k == "impulsive" || k == "weak-ensemble") {
    sdn::require_json(cfg.pre_state, "pre_state", k);
    sdn::require_json(cfg.observable, "observable", k);
    sdn::require_field(cfg.delta, "delta", k);
    sdn::require_field(cfg.samples, "samples", k);
  } else if (k == "protective") {
    sdn::require_json(cfg.system, "system", k);
    sdn::require_json(cfg.observable, "observable", k);
    sdn::require_field(cfg.delta, "delta", k);
    sdn::require_field(cfg.total_time, "T", k);
    if (!cfg.level && cfg.pre_state.is_null())
      throw ValidationError("level: protective needs either level or pre_state");
  } else if (k == "nonhermitian") {
    sdn::require_json(cfg.system, "system", k);
    sdn::require_json(cfg.pre_state, "pre_state", k);
    sdn::require_json(cfg.observable, "observable", k);
    sdn::require_field(cfg.delta, "delta", k);
    sdn::require_field(cfg.total_time, "T", k);
  } else if (k == "protect2sv") {
    sdn::require_field(cfg.ancilla_n, "N", k);
    sdn::require_field(cfg.lambda, "lambda", k);
    sdn::require_json(cfg.observable, "observable", k);
    sdn::require_field(cfg.delta, "delta", k);
    sdn::require_field(cfg.total_time, "T", k);
  } else if (k == "kaon-toy") {
    sdn::require_field(cfg.epsilon, "epsilon", k);
  }
  return cfg;
}

inline std::string serialize_scenario(const ScenarioConfig& cfg) {
  json j;
  j["kind"] = cfg.kind;
  if (!cfg.system.is_null()) j["system"] = cfg.system;
  if (!cfg.pre_state.is_null()) j["pre_state"] = cfg.pre_state;
  if (!cfg.post_state.is_null()) j["post_state"] = cfg.post_state;
  if (!cfg.observable.is_null()) j["observable"] = cfg.observable;
  if (cfg.delta) j["delta"] = *cfg.delta;
  if (cfg.total_time) j["T"] = *cfg.total_time;
  if (cfg.lambda) j["lambda"] = *cfg.lambda;
  if (cfg.theta) j["theta"] = *cfg.theta;
  if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
  if (cfg.ancilla_n) j["N"] = *cfg.ancilla_n;
  if (cfg.level) j["level"] = *cfg.level;
  if (cfg.doublings) j["doublings"] = *cfg.doublings;
  if (cfg.grid_m || cfg.grid_l) {
    json g = json::object();
    if (cfg.grid_m) g["m"] = *cfg.grid_m;
    if (cfg.grid_l) g["l"] = *cfg.grid_l;
    j["grid"] = g;
  }
  if (cfg.samples) j["samples"] = *cfg.samples;
  j["seed"] = cfg.seed;
  if (!cfg.output.empty()) j["output"] = cfg.output;
  return j.dump(2);
}

namespace scenario_detail {

inline void write_metadata(const ScenarioConfig& cfg, std::ostream& os,
                           const std::vector<std::pair<std::string, std::string>>& extra) {
  csv::comment(os, "kind", cfg.kind);
  csv::comment(os, "ref", kind_refs().at(cfg.kind));
  csv::comment(os, "seed", std::to_string(cfg.seed));
  if (!cfg.system.is_null()) csv::comment(os, "system", cfg.system.dump());
  if (!cfg.pre_state.is_null()) csv::comment(os, "pre_state", cfg.pre_state.dump());
  if (!cfg.post_state.is_null()) csv::comment(os, "post_state", cfg.post_state.dump());
  if (!cfg.observable.is_null()) csv::comment(os, "observable", cfg.observable.dump());
  if (cfg.delta) csv::comment(os, "delta", csv::num(*cfg.delta));
  if (cfg.total_time) csv::comment(os, "T", csv::num(*cfg.total_time));
  if (cfg.lambda) csv::comment(os, "lambda", csv::num(*cfg.lambda));
  if (cfg.theta) csv::comment(os, "theta", csv::num(*cfg.theta));
  if (cfg.epsilon) csv::comment(os, "epsilon", csv::num(*cfg.epsilon));
  if (cfg.ancilla_n) csv::comment(os, "N", std::to_string(*cfg.ancilla_n));
  if (cfg.level) csv::comment(os, "level", std::to_string(*cfg.level));
  if (cfg.doublings) csv::comment(os, "doublings", std::to_string(*cfg.doublings));
  if (cfg.samples) csv::comment(os, "samples", std::to_string(*cfg.samples));
  for (const auto& [key, value] : extra) csv::comment(os, key, value);
}

inline void run_weakvalue(const ScenarioConfig& cfg, std::ostream& os) {
  TwoStateVector tsv = resolve_tsv(cfg);
  Operator a = resolve_operator(cfg.observable, "observable", cfg.ancilla_n);
  if (a.dim() != tsv.ket().dim())
    throw ValidationError("observable: dimension does not match the selected states");
  Complex w = weak_value(a, tsv);
  write_metadata(cfg, os, {});
  csv::row(os, {"re", "im"});
  csv::row(os, {csv::num(w.real()), csv::num(w.imag())});
}

inline void run_kaon_toy(const ScenarioConfig& cfg, std::ostream& os) {
  double eps = *cfg.epsilon;
  MatrixXcd v(2, 2);
  v << 1.0, eps, 0.0, std::sqrt(1.0 - eps * eps);
  MatrixXcd lam = MatrixXcd::Zero(2, 2);
  lam(0, 0) = Complex(0.5, -0.1);   // long-lived branch
  lam(1, 1) = Complex(-0.5, -0.3);  // short-lived branch
  Operator h((v * lam * v.inverse()).eval());
  BiorthogonalSystem sys = eig_biorthogonal(h);
  double fid0 = backward_forward_fidelity(sys, 0);
  double fid1 = backward_forward_fidelity(sys, 1);
  double overlap = std::abs(inner(sys.kets[0], sys.kets[1]));
  write_metadata(cfg, os, {});
  csv::row(os, {"epsilon", "fidelity", "ket_overlap"});
  csv::row(os, {csv::num(eps), csv::num(std::max(fid0, fid1)), csv::num(overlap)});
}

inline void run_impulsive(const ScenarioConfig& cfg, std::ostream& os,
                          const RunOptions& opts) {
  StateVector psi = resolve_state(cfg.pre_state, "pre_state");
  Operator a = resolve_operator(cfg.observable, "observable", cfg.ancilla_n);
  if (a.dim() != psi.dim())
    throw ValidationError("observable: dimension does not match pre_state");
  double delta = *cfg.delta;
  Grid grid = resolve_grid(cfg, delta, detail::spectral_radius(a));
  JointState js = entangle(psi, a, gaussian_pointer(grid, delta));
  detail::MarginalSampler sampler(pointer_distribution(js), grid);

  std::uint64_t n = *cfg.samples;
  auto [rep, readings] = run_ensemble_readings(
      [&](RngStream& rng) { return sampler.sample(rng); }, n, cfg.seed, 32,
      opts.threads);
  write_metadata(cfg, os,
                 {{"grid_m", std::to_string(grid.points)},
                  {"grid_l", csv::num(grid.extent)},
                  {"mean", csv::num(rep.mean)},
                  {"std_error", csv::num(rep.std_error)}});
  write_readings_csv(readings, {}, os, &rep);
}

inline void run_weak_ensemble(const ScenarioConfig& cfg, std::ostream& os,
                              const RunOptions& opts) {
  StateVector psi = resolve_state(cfg.pre_state, "pre_state");
  Operator a = resolve_operator(cfg.observable, "observable", cfg.ancilla_n);
  if (a.dim() != psi.dim())
    throw ValidationError("observable: dimension does not match pre_state");
  double delta = *cfg.delta;
  SpectralDecomposition dec = eig_hermitian(a);
  double span = std::max(std::abs(dec.eigenvalues[0]),
                         std::abs(dec.eigenvalues[a.dim() - 1]));
  if (!(delta >= 5.0 * span))
    throw WeaknessViolated("weak regime requires delta >= 5 max|a_i|");
  Grid grid = resolve_grid(cfg, delta, span);
  JointState js = entangle(psi, a, gaussian_pointer(grid, delta));
  detail::MarginalSampler sampler(pointer_distribution(js), grid);

  std::uint64_t n = *cfg.samples;
  auto [rep, readings] = run_ensemble_readings(
      [&](RngStream& rng) { return sampler.sample(rng); }, n, cfg.seed, 32,
      opts.threads);
  write_metadata(cfg, os,
                 {{"grid_m", std::to_string(grid.points)},
                  {"grid_l", csv::num(grid.extent)},
                  {"expectation", csv::num(expectation(a, psi))},
                  {"estimate", csv::num(rep.mean)},
                  {"std_error", csv::num(rep.std_error)}});
  write_readings_csv(readings, {}, os, &rep);
}

inline void run_postselect(const ScenarioConfig& cfg, std::ostream& os,
                           const RunOptions& opts) {
  TwoStateVector tsv = resolve_tsv(cfg);
  Operator a = resolve_operator(cfg.observable, "observable", cfg.ancilla_n);
  if (a.dim() != tsv.ket().dim())
    throw ValidationError("observable: dimension does not match the selected states");
  double delta = *cfg.delta;
  WeakLimitReport report = weak_limit_report(tsv, a, delta);
  Grid grid = resolve_grid(
      cfg, delta, detail::spectral_radius(a) + std::abs(report.weak_prediction));

  JointState js = entangle(tsv.ket(), a, gaussian_pointer(grid, delta));
  auto [wave, prob] = post_select(js, tsv.bra());

  std::vector<std::pair<std::string, std::string>> extra{
      {"grid_m", std::to_string(grid.points)},
      {"grid_l", csv::num(grid.extent)},
      {"success_prob", csv::num(prob)},
      {"exact_mean", csv::num(report.exact_mean)},
      {"weak_re", csv::num(report.weak_val.real())},
      {"weak_im", csv::num(report.weak_val.imag())}};
  for (std::size_t i = 0; i < report.residual_moments.size(); ++i) {
    extra.emplace_back("residual_moment_" + std::to_string(i + 2),
                       csv::num(report.residual_moments[i].real()) + "+" +
                           csv::num(report.residual_moments[i].imag()) + "i");
  }

  if (cfg.samples) {
    PostSelectedExperiment exp(tsv, a, delta, grid);
    std::uint64_t n = *cfg.samples;
    std::vector<double> readings(n);
    std::vector<bool> flags(n);
    parallel_for(n, opts.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        RngStream stream(cfg.seed, i);
        PostSelectedShot s = exp.shot(stream);
        readings[i] = s.reading;
        flags[i] = s.accepted;
      }
    });
    std::vector<double> accepted;
    for (std::size_t i = 0; i < n; ++i)
      if (flags[i]) accepted.push_back(readings[i]);
    extra.emplace_back("accepted", std::to_string(accepted.size()));
    write_metadata(cfg, os, extra);
    if (accepted.empty()) {
      write_readings_csv(readings, flags, os, nullptr);
    } else {
      EnsembleReport rep = summarize(accepted);
      write_readings_csv(readings, flags, os, &rep);
    }
    return;
  }
  write_metadata(cfg, os, extra);
  write_wave_csv(wave, os);
}

inline void run_protective(const ScenarioConfig& cfg, std::ostream& os,
                           const RunOptions& opts) {
  Operator h0 = cfg.system.is_string()
                    ? resolve_operator(cfg.system, "system", cfg.ancilla_n)
                    : Operator(parse_matrix_array(cfg.system, "system"));
  Operator a = resolve_operator(cfg.observable, "observable", cfg.ancilla_n);
  if (a.dim() != h0.dim())
    throw ValidationError("observable: dimension does not match system");

  if (cfg.level) {
    SpectralDecomposition dec = eig_hermitian(h0);
    if (*cfg.level >= h0.dim())
      throw ValidationError("level: out of range for the system dimension");
    double target = expectation(a, dec.eigenvectors[*cfg.level]);
    int doublings = cfg.doublings.value_or(0);
    std::vector<ScanRow> rows;
    double t = *cfg.total_time;
    for (int k = 0; k <= doublings; ++k, t *= 2.0) {
      double mean = protective_shift(h0, *cfg.level, a, *cfg.delta, t, opts.threads);
      rows.push_back({t, mean, std::abs(mean - target), std::nullopt, std::nullopt});
    }
    write_metadata(cfg, os, {{"target", csv::num(target)}});
    write_scan_csv(rows, os);
    return;
  }

  StateVector psi0 = resolve_state(cfg.pre_state, "pre_state");
  if (psi0.dim() != h0.dim())
    throw ValidationError("pre_state: dimension does not match system");
  std::vector<AdiabaticOutcome> outs = protective_outcomes(h0, psi0, a);
  write_metadata(cfg, os, {});
  csv::row(os, {"outcome_index", "shift", "probability"});
  for (const AdiabaticOutcome& o : outs)
    csv::row(os, {std::to_string(o.label), csv::num(o.shift), csv::num(o.probability)});
}

inline void run_nonhermitian(const ScenarioConfig& cfg, std::ostream& os,
                             const RunOptions& opts) {
  Operator h = cfg.system.is_string()
                   ? resolve_operator(cfg.system, "system", cfg.ancilla_n)
                   : Operator(parse_matrix_array(cfg.system, "system"));
  Operator a = resolve_operator(cfg.observable, "observable", cfg.ancilla_n);
  StateVector psi0 = resolve_state(cfg.pre_state, "pre_state");
  if (a.dim() != h.dim() || psi0.dim() != h.dim())
    throw ValidationError("nonhermitian: dimensions of system, state, observable differ");

  auto [outs, js] =
      adiabatic_nonhermitian_measure(h, a, psi0, *cfg.delta, *cfg.total_time);

  std::vector<std::size_t> hits(outs.size(), 0);
  if (cfg.samples) {
    std::uint64_t n = *cfg.samples;
    std::vector<std::size_t> picks(n);
    parallel_for(n, opts.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        RngStream stream(cfg.seed, i);
        picks[i] = sample_outcome(outs, stream);
      }
    });
    for (std::size_t p : picks) ++hits[p];
  }

  write_metadata(cfg, os, {{"mean_q_analytic", csv::num(joint_mean_q(js))}});
  csv::row(os, {"outcome_index", "shift", "weak_re", "weak_im", "probability",
                "empirical_freq"});
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const AdiabaticOutcome& o = outs[i];
    std::string freq =
        cfg.samples ? csv::num(hits[i] / static_cast<double>(*cfg.samples)) : "";
    csv::row(os, {std::to_string(o.label), csv::num(o.shift),
                  csv::num(o.weak_or_expectation.real()),
                  csv::num(o.weak_or_expectation.imag()), csv::num(o.probability),
                  freq});
  }
}

inline void run_protect2sv(const ScenarioConfig& cfg, std::ostream& os,
                           const RunOptions& opts) {
  Operator a = resolve_operator(cfg.observable, "observable", std::nullopt);
  if (a.dim() != 2)
    throw ValidationError("observable: protect2sv measures the spin-1/2 factor");
  int n = *cfg.ancilla_n;
  ProtectionSetup setup = *cfg.lambda == 0.0 ? ProtectionSetup::unprotected(n)
                                             : build_spin_protection(n, *cfg.lambda);
  std::optional<Grid> grid;
  if (cfg.grid_m && cfg.grid_l) grid = Grid(*cfg.grid_m, *cfg.grid_l);

  Protected2svResult res = simulate_protected_2sv(setup, a, *cfg.delta,
                                                  *cfg.total_time, grid, opts.threads);
  TwoStateVector protected_pair(axis_top_state(Vector3d::UnitX(), 0.5),
                                axis_top_state(Vector3d::UnitY(), 0.5));
  Complex target = weak_value(a, protected_pair);

  write_metadata(cfg, os,
                 {{"target_re", csv::num(target.real())},
                  {"target_im", csv::num(target.imag())}});
  write_scan_csv({{*cfg.total_time, res.pointer_mean,
                   std::abs(res.pointer_mean - target.real()), res.disturbance,
                   res.post_select_prob}},
                 os);
}

}  // namespace scenario_detail

// Dispatches a validated configuration and writes the CSV artifact.
// Deterministic for a fixed config and seed, independent of thread count.
inline void run_scenario(const ScenarioConfig& cfg, std::ostream& os,
                         const RunOptions& opts = {}) {
  namespace sd = scenario_detail;
  if (cfg.kind == "weakvalue") return sd::run_weakvalue(cfg, os);
  if (cfg.kind == "kaon-toy") return sd::run_kaon_toy(cfg, os);
  if (cfg.kind == "impulsive") return sd::run_impulsive(cfg, os, opts);
  if (cfg.kind == "weak-ensemble") return sd::run_weak_ensemble(cfg, os, opts);
  if (cfg.kind == "postselect") return sd::run_postselect(cfg, os, opts);
  if (cfg.kind == "protective") return sd::run_protective(cfg, os, opts);
  if (cfg.kind == "nonhermitian") return sd::run_nonhermitian(cfg, os, opts);
  if (cfg.kind == "protect2sv") return sd::run_protect2sv(cfg, os, opts);
  throw ValidationError("kind: unknown scenario kind '" + cfg.kind + "'");
}

struct BuiltinScenario {
  std::string name;
  std::string section;
  std::string description;
  ScenarioConfig config;
};

inline const std::vector<BuiltinScenario>& builtin_scenarios() {
  static const std::vector<BuiltinScenario> catalog = [] {
    std::vector<BuiltinScenario> v;

    {
      ScenarioConfig c;
      c.kind = "weakvalue";
      c.pre_state = "up_x";
      c.post_state = "up_y";
      c.observable = "sigma_z";
      v.push_back({"aav-sigma", "sec. 4",
                   "weak value of sigma_z between up_x and up_y (A_w = i)", c});
    }
    {
      ScenarioConfig c;
      c.kind = "postselect";
      c.theta = 0.75;
      c.observable = "sigma_z";
      c.delta = 100.0;
      v.push_back({"anomalous-theta", "sec. 4",
                   "post-selected pointer mean far outside the eigenvalue range "
                   "(A_w = 1/cos(2 theta) ~ 14.1)",
                   c});
    }
    {
      ScenarioConfig c;
      c.kind = "impulsive";
      c.pre_state = "up_x";
      c.observable = "sigma_z";
      c.delta = 0.05;
      c.samples = 2000;
      c.seed = 2001;
      v.push_back({"ideal-vs-weak", "sec. 2",
                   "ideal-regime readings cluster at the eigenvalues +-1; rerun "
                   "with --delta 10 for the weak regime",
                   c});
    }
    {
      ScenarioConfig c;
      c.kind = "protective";
      c.system = json::parse("[[[1,0],[1,0]],[[1,0],[-1,0]]]");  // sigma_x + sigma_z
      c.level = 1;
      c.observable = "sigma_z";
      c.delta = 1.0;
      c.total_time = 25.0;
      c.doublings = 3;
      v.push_back({"protective-two-level", "sec. 3",
                   "adiabatic shift converging to <sigma_z> = 1/sqrt(2) in the "
                   "excited state under T doubling",
                   c});
    }
    {
      ScenarioConfig c;
      c.kind = "protect2sv";
      c.ancilla_n = 10;
      c.lambda = 3.0;
      c.observable = "sigma_x";
      c.delta = 10.0;
      c.total_time = 8.0;
      c.grid_m = 512;
      c.grid_l = 100.0;
      v.push_back({"spin-protection", "sec. 5",
                   "large-spin protected two-state vector: pointer reads the weak "
                   "value of sigma_x",
                   c});
    }
    {
      ScenarioConfig c;
      c.kind = "nonhermitian";
      c.system = json::parse("[[[0,0],[0,0]],[[0,0],[0,-0.1]]]");  // diag(0, -0.1i)
      c.pre_state = json::parse("[[0.6,0],[0.8,0]]");
      c.observable = "sigma_z";
      c.delta = 1.0;
      c.total_time = 5.0;
      c.samples = 10000;
      v.push_back({"decay-postselect", "sec. 6",
                   "adiabatic measurement on a decaying system conditioned on "
                   "survival: outcome weights |alpha_i exp(-i w_i T)|^2",
                   c});
    }
    {
      ScenarioConfig c;
      c.kind = "kaon-toy";
      c.epsilon = 0.1;
      v.push_back({"kaon-toy", "sec. 6",
                   "backward/forward eigenstate fidelity 1/sqrt(1-eps^2) of a "
                   "weakly mixed decaying doublet",
                   c});
    }
    return v;
  }();
  return catalog;
}

// Catalog text, one line per scenario.
inline std::string list_builtin() {
  std::ostringstream os;
  os << "built-in scenarios (" << builtin_scenarios().size() << "):\n";
  for (const BuiltinScenario& b : builtin_scenarios()) {
    os << "  " << b.name;
    for (std::size_t i = b.name.size(); i < 22; ++i) os << ' ';
    os << "[" << b.section << "]  " << b.description << "\n";
  }
  return os.str();
}

inline const BuiltinScenario* find_builtin(const std::string& name) {
  for (const BuiltinScenario& b : builtin_scenarios())
    if (b.name == name) return &b;
  return nullptr;
}

}  // namespace wv
