#pragma once

// Experiment specs, parameter sweeps and result files.
//
// Spec documents are JSON. The canonical encoding is the document produced
// by to_json(spec).dump(2) followed by a newline: keys sorted, two-space
// indent, shortest round-trip number formatting. Result files print every
// floating-point value with 9 significant digits.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "uavsec/orchestrator.hpp"

namespace uavsec {

/// Malformed or invalid experiment spec (CLI exit status 2).
class SpecError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Scenario as configured: powers in dBm and the reference gain in dB.
struct ScenarioSpec {
  std::vector<Vec2> gn_positions;
  std::vector<Vec2> eve_positions;
  Vec2 q_start;
  Vec2 q_end;
  double h_start = 0.0;
  double h_end = 0.0;
  double h_min = 0.0;
  double h_max = 0.0;
  double v_horiz = 0.0;
  double v_up = 0.0;
  double v_down = 0.0;
  double slot_duration = 0.0;
  std::optional<int> num_slots;           // exactly one of num_slots and
  std::optional<double> mission_duration; // mission_duration is set
  double path_loss_exp = 2.0;
  double ref_gain_over_noise_db = 0.0;
  double p_ave_dbm = 0.0;
  double p_peak_dbm = 0.0;

  friend bool operator==(const ScenarioSpec &, const ScenarioSpec &) = default;
};

struct SweepSpec {
  std::string parameter; // "T", "alpha" or "p_ave_dbm"
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;

  std::vector<double> values() const {
    std::vector<double> v;
    const double eps = 1e-9 * std::max(1.0, std::abs(step));
    for (int i = 0;; ++i) {
      const double x = start + i * step;
      if (x > stop + eps) break;
      v.push_back(x);
    }
    return v;
  }
  friend bool operator==(const SweepSpec &, const SweepSpec &) = default;
};

struct OutputSpec {
  std::string directory = "out";
  bool per_slot_csv = true;
  bool summary = true;
  bool trace = true;
  friend bool operator==(const OutputSpec &, const OutputSpec &) = default;
};

struct ExperimentSpec {
  ScenarioSpec scenario;
  std::vector<Scheme> schemes;
  std::optional<SweepSpec> sweep;
  OutputSpec output;
  friend bool operator==(const ExperimentSpec &, const ExperimentSpec &) = default;
};

inline const std::set<std::string> &sweep_parameters() {
  static const std::set<std::string> p{"T", "alpha", "p_ave_dbm"};
  return p;
}

/// The reference deployment in spec form.
inline ExperimentSpec reference_spec() {
  ExperimentSpec e;
  ScenarioSpec &s = e.scenario;
  s.gn_positions = {{-100.0, 300.0}, {0.0, 300.0}, {100.0, 300.0}};
  s.eve_positions = {{-100.0, 100.0}, {100.0, 100.0}};
  s.q_start = {-500.0, 0.0};
  s.q_end = {500.0, 0.0};
  s.h_start = s.h_end = 200.0;
  s.h_min = 150.0;
  s.h_max = 250.0;
  s.v_horiz = 25.0;
  s.v_up = 4.0;
  s.v_down = 6.0;
  s.slot_duration = 0.5;
  s.mission_duration = 60.0;
  s.path_loss_exp = 2.0;
  s.ref_gain_over_noise_db = 50.0;
  s.p_ave_dbm = 30.0;
  s.p_peak_dbm = 30.0 + 10.0 * std::log10(4.0);
  e.schemes = {std::begin(kAllSchemes), std::end(kAllSchemes)};
  return e;
}

inline void validate(const ExperimentSpec &e) {
  if (e.schemes.empty()) throw SpecError("spec: schemes must not be empty");
  if (e.scenario.num_slots.has_value() == e.scenario.mission_duration.has_value())
    throw SpecError("spec: scenario needs exactly one of num_slots and mission_duration");
  if (e.sweep) {
    const SweepSpec &sw = *e.sweep;
    if (!sweep_parameters().count(sw.parameter))
      throw SpecError("spec: unknown sweep parameter '" + sw.parameter + "'");
    if (!(sw.step > 0.0)) throw SpecError("spec: sweep.step must be > 0");
    if (!(sw.start <= sw.stop)) throw SpecError("spec: sweep range is empty (start > stop)");
  }
  if (e.output.directory.empty()) throw SpecError("spec: output.directory must not be empty");
}

/// Builds the solver scenario, optionally overriding one sweep parameter.
inline Scenario build_scenario(const ScenarioSpec &in, const std::string &param = {},
                               double value = 0.0) {
  Scenario s;
  s.gn_positions = in.gn_positions;
  s.eve_positions = in.eve_positions;
  s.q_start = in.q_start;
  s.q_end = in.q_end;
  s.h_start = in.h_start;
  s.h_end = in.h_end;
  s.h_min = in.h_min;
  s.h_max = in.h_max;
  s.v_horiz = in.v_horiz;
  s.v_up = in.v_up;
  s.v_down = in.v_down;
  s.slot_duration = in.slot_duration;
  s.path_loss_exp = in.path_loss_exp;
  s.ref_gain_over_noise = db_to_linear(in.ref_gain_over_noise_db);
  double p_ave_dbm = in.p_ave_dbm;
  double p_peak_dbm = in.p_peak_dbm;
  if (in.num_slots) s.num_slots = *in.num_slots;
  else if (in.mission_duration && in.slot_duration > 0.0)
    s.num_slots = slots_for_duration(*in.mission_duration, in.slot_duration);

  if (param == "T") {
    if (!(in.slot_duration > 0.0)) throw ValidationError("scenario: slot_duration must be > 0");
    s.num_slots = slots_for_duration(value, in.slot_duration);
  } else if (param == "alpha") {
    s.path_loss_exp = value;
  } else if (param == "p_ave_dbm") {
    // Keeps the configured peak-to-average ratio.
    p_peak_dbm += value - p_ave_dbm;
    p_ave_dbm = value;
  } else if (!param.empty()) {
    throw SpecError("unknown sweep parameter '" + param + "'");
  }
  s.p_ave = dbm_to_watt(p_ave_dbm);
  s.p_peak = dbm_to_watt(p_peak_dbm);
  if (s.p_peak < s.p_ave && p_peak_dbm >= p_ave_dbm) s.p_peak = s.p_ave; // rounding only
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// JSON encoding.

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json &obj, const std::string &where,
                           std::initializer_list<const char *> allowed) {
  if (!obj.is_object()) throw SpecError(where + ": expected an object");
  for (const auto &[key, _] : obj.items()) {
    bool known = false;
    for (const char *a : allowed) known = known || key == a;
    if (!known) throw SpecError(where + "." + key + ": unknown key");
  }
}

inline const json &field(const json &obj, const std::string &where, const char *key) {
  if (!obj.contains(key)) throw SpecError(where + "." + key + ": missing required key");
  return obj.at(key);
}

inline double number(const json &obj, const std::string &where, const char *key) {
  const json &v = field(obj, where, key);
  if (!v.is_number()) throw SpecError(where + "." + key + ": expected a number");
  return v.get<double>();
}

inline bool boolean(const json &obj, const std::string &where, const char *key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json &v = obj.at(key);
  if (!v.is_boolean()) throw SpecError(where + "." + key + ": expected true or false");
  return v.get<bool>();
}

inline Vec2 point(const json &v, const std::string &where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw SpecError(where + ": expected [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline std::vector<Vec2> points(const json &obj, const std::string &where, const char *key) {
  const json &v = field(obj, where, key);
  if (!v.is_array()) throw SpecError(where + "." + key + ": expected a list of [x, y]");
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(point(v[i], where + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

inline json to_json(const Vec2 &p) { return json::array({p.x, p.y}); }

inline std::string line_col(const std::string &text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') { ++line; col = 1; }
    else ++col;
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace detail

inline nlohmann::json to_json(const ExperimentSpec &e) {
  using detail::json;
  const ScenarioSpec &s = e.scenario;
  json sc = {
      {"gn_positions", json::array()}, {"eve_positions", json::array()},
      {"q_start", detail::to_json(s.q_start)}, {"q_end", detail::to_json(s.q_end)},
      {"h_start", s.h_start}, {"h_end", s.h_end}, {"h_min", s.h_min}, {"h_max", s.h_max},
      {"v_horiz", s.v_horiz}, {"v_up", s.v_up}, {"v_down", s.v_down},
      {"slot_duration", s.slot_duration}, {"path_loss_exp", s.path_loss_exp},
      {"ref_gain_over_noise_db", s.ref_gain_over_noise_db}, {"p_ave_dbm", s.p_ave_dbm},
      {"p_peak_dbm", s.p_peak_dbm}};
  for (const Vec2 &w : s.gn_positions) sc["gn_positions"].push_back(detail::to_json(w));
  for (const Vec2 &w : s.eve_positions) sc["eve_positions"].push_back(detail::to_json(w));
  if (s.num_slots) sc["num_slots"] = *s.num_slots;
  if (s.mission_duration) sc["mission_duration"] = *s.mission_duration;

  json doc = {{"scenario", sc}, {"schemes", json::array()}};
  for (Scheme sch : e.schemes) doc["schemes"].push_back(std::string(to_string(sch)));
  if (e.sweep)
    doc["sweep"] = {{"parameter", e.sweep->parameter}, {"start", e.sweep->start},
                    {"stop", e.sweep->stop}, {"step", e.sweep->step}};
  doc["output"] = {{"directory", e.output.directory}, {"per_slot_csv", e.output.per_slot_csv},
                   {"summary", e.output.summary}, {"trace", e.output.trace}};
  return doc;
}

inline std::string canonical_text(const ExperimentSpec &e) { return to_json(e).dump(2) + "\n"; }

inline ExperimentSpec parse_spec(const nlohmann::json &doc) {
  using namespace detail;
  reject_unknown(doc, "spec", {"scenario", "schemes", "sweep", "output"});
  ExperimentSpec e;

  const json &sc = field(doc, "spec", "scenario");
  const std::string w = "spec.scenario";
  reject_unknown(sc, w,
                 {"gn_positions", "eve_positions", "q_start", "q_end", "h_start", "h_end", "h_min",
                  "h_max", "v_horiz", "v_up", "v_down", "slot_duration", "num_slots",
                  "mission_duration", "path_loss_exp", "ref_gain_over_noise_db", "p_ave_dbm",
                  "p_peak_dbm"});
  ScenarioSpec &s = e.scenario;
  s.gn_positions = points(sc, w, "gn_positions");
  s.eve_positions = points(sc, w, "eve_positions");
  s.q_start = point(field(sc, w, "q_start"), w + ".q_start");
  s.q_end = point(field(sc, w, "q_end"), w + ".q_end");
  s.h_start = number(sc, w, "h_start");
  s.h_end = number(sc, w, "h_end");
  s.h_min = number(sc, w, "h_min");
  s.h_max = number(sc, w, "h_max");
  s.v_horiz = number(sc, w, "v_horiz");
  s.v_up = number(sc, w, "v_up");
  s.v_down = number(sc, w, "v_down");
  s.slot_duration = number(sc, w, "slot_duration");
  if (sc.contains("num_slots")) {
    const json &v = sc.at("num_slots");
    if (!v.is_number_integer()) throw SpecError(w + ".num_slots: expected an integer");
    s.num_slots = v.get<int>();
  }
  if (sc.contains("mission_duration")) s.mission_duration = number(sc, w, "mission_duration");
  s.path_loss_exp = number(sc, w, "path_loss_exp");
  s.ref_gain_over_noise_db = number(sc, w, "ref_gain_over_noise_db");
  s.p_ave_dbm = number(sc, w, "p_ave_dbm");
  s.p_peak_dbm = number(sc, w, "p_peak_dbm");

  const json &schemes = field(doc, "spec", "schemes");
  if (!schemes.is_array()) throw SpecError("spec.schemes: expected a list of scheme names");
  for (const json &v : schemes) {
    const auto parsed = v.is_string() ? parse_scheme(v.get<std::string>()) : std::nullopt;
    if (!parsed) throw SpecError("spec.schemes: unknown scheme " + v.dump());
    e.schemes.push_back(*parsed);
  }

  if (doc.contains("sweep")) {
    const json &sw = doc.at("sweep");
    reject_unknown(sw, "spec.sweep", {"parameter", "start", "stop", "step"});
    const json &p = field(sw, "spec.sweep", "parameter");
    if (!p.is_string()) throw SpecError("spec.sweep.parameter: expected a string");
    e.sweep = SweepSpec{p.get<std::string>(), number(sw, "spec.sweep", "start"),
                        number(sw, "spec.sweep", "stop"), number(sw, "spec.sweep", "step")};
  }
  if (doc.contains("output")) {
    const json &o = doc.at("output");
    reject_unknown(o, "spec.output", {"directory", "per_slot_csv", "summary", "trace"});
    if (o.contains("directory")) {
      if (!o.at("directory").is_string())
        throw SpecError("spec.output.directory: expected a string");
      e.output.directory = o.at("directory").get<std::string>();
    }
    e.output.per_slot_csv = boolean(o, "spec.output", "per_slot_csv", true);
    e.output.summary = boolean(o, "spec.output", "summary", true);
    e.output.trace = boolean(o, "spec.output", "trace", true);
  }

  validate(e);
  // Fail early on an invalid base scenario.
  try {
    (void)build_scenario(e.scenario);
  } catch (const ValidationError &err) {
    throw SpecError(std::string("spec.") + err.what());
  }
  return e;
}

inline ExperimentSpec parse_spec_text(const std::string &text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &err) {
    throw SpecError("spec parse error at " + detail::line_col(text, err.byte) + ": " + err.what());
  }
  return parse_spec(doc);
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentSpec load_spec(const std::filesystem::path &path) {
  return parse_spec_text(read_file(path));
}

inline SolverConfig parse_solver_config(const nlohmann::json &doc) {
  using namespace detail;
  const std::string w = "solver_config";
  reject_unknown(doc, w,
                 {"outer_rel_tol", "outer_max_iters", "sca_rel_tol", "sca_max_iters",
                  "subproblem_gap_tol", "subproblem_max_newton", "centering_tol", "eta_floor",
                  "interior_blend", "max_blend_halvings", "joint2d_altitude", "rng_seed"});
  SolverConfig c;
  auto num = [&](const char *key, double &out) {
    if (doc.contains(key)) out = number(doc, w, key);
  };
  auto integer = [&](const char *key, auto &out) {
    if (!doc.contains(key)) return;
    if (!doc.at(key).is_number_integer()) throw SpecError(w + "." + key + ": expected an integer");
    out = doc.at(key).get<std::remove_reference_t<decltype(out)>>();
  };
  num("outer_rel_tol", c.outer_rel_tol);
  integer("outer_max_iters", c.outer_max_iters);
  num("sca_rel_tol", c.sca_rel_tol);
  integer("sca_max_iters", c.sca_max_iters);
  num("subproblem_gap_tol", c.subproblem_gap_tol);
  integer("subproblem_max_newton", c.subproblem_max_newton);
  num("centering_tol", c.centering_tol);
  num("eta_floor", c.eta_floor);
  num("interior_blend", c.interior_blend);
  integer("max_blend_halvings", c.max_blend_halvings);
  num("joint2d_altitude", c.joint2d_altitude);
  integer("rng_seed", c.rng_seed);
  try {
    validate(c);
  } catch (const ValidationError &err) {
    throw SpecError(err.what());
  }
  return c;
}

inline SolverConfig load_solver_config(const std::filesystem::path &path) {
  const std::string text = read_file(path);
  try {
    return parse_solver_config(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error &err) {
    throw SpecError("solver config parse error at " + detail::line_col(text, err.byte) + ": " +
                    err.what());
  }
}

/// Parses "T=40:80:5".
inline SweepSpec parse_sweep_arg(const std::string &arg) {
  const auto eq = arg.find('=');
  const auto c1 = arg.find(':', eq == std::string::npos ? 0 : eq);
  const auto c2 = c1 == std::string::npos ? c1 : arg.find(':', c1 + 1);
  if (eq == std::string::npos || c1 == std::string::npos || c2 == std::string::npos)
    throw SpecError("--sweep expects <param>=<start>:<stop>:<step>, got '" + arg + "'");
  SweepSpec sw;
  sw.parameter = arg.substr(0, eq);
  try {
    sw.start = std::stod(arg.substr(eq + 1, c1 - eq - 1));
    sw.stop = std::stod(arg.substr(c1 + 1, c2 - c1 - 1));
    sw.step = std::stod(arg.substr(c2 + 1));
  } catch (const std::exception &) {
    throw SpecError("--sweep: invalid number in '" + arg + "'");
  }
  return sw;
}

// ---------------------------------------------------------------------------
// Result files.

/// %.9g formatting used for every emitted floating-point value.
inline std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr const char *kPerSlotHeader =
    "slot,time_s,x_m,y_m,h_m,p_w,a_per_w,b_per_w,rate_bpshz";
inline constexpr const char *kSummaryHeader =
    "scheme,sweep_parameter,sweep_value,avg_secrecy_rate_bpshz,outer_iters,converged,wall_time_s,"
    "status";
inline constexpr const char *kTraceHeader = "iteration,avg_secrecy_rate_bpshz";

inline std::string per_slot_csv(const SolveReport &r) {
  std::ostringstream os;
  os << kPerSlotHeader << "\n";
  const double ts = r.scenario.slot_duration;
  for (std::size_t i = 0; i < r.per_slot.p.size(); ++i) {
    const std::size_t n = i + 1;
    os << n << "," << fmt9(static_cast<double>(n) * ts) << "," << fmt9(r.final_traj.q[n].x) << ","
       << fmt9(r.final_traj.q[n].y) << "," << fmt9(r.final_traj.h[n]) << ","
       << fmt9(r.per_slot.p[i]) << "," << fmt9(r.per_slot.a[i]) << "," << fmt9(r.per_slot.b[i])
       << "," << fmt9(r.per_slot.rate[i]) << "\n";
  }
  return os.str();
}

inline std::string trace_csv(const SolveReport &r) {
  std::ostringstream os;
  os << kTraceHeader << "\n";
  for (std::size_t i = 0; i < r.objective_trace.size(); ++i)
    os << i << "," << fmt9(r.objective_trace[i]) << "\n";
  return os.str();
}

/// Returns the first violated invariant of an emitted trajectory/power pair.
inline std::optional<std::string> audit(const SolveReport &r, double tol = kFeasibilityTol) {
  if (auto v = trajectory_violation(r.final_traj, r.scenario, tol)) return "trajectory: " + *v;
  if (auto v = power_violation(r.final_power, r.scenario, tol)) return "power: " + *v;
  return std::nullopt;
}

struct CellResult {
  Scheme scheme = Scheme::joint3d;
  std::string sweep_parameter; // empty without a sweep
  double sweep_value = 0.0;
  std::string id;              // file stem
  std::optional<SolveReport> report;
  std::string error;           // empty on success
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  int exit_code = 0; // 0 all cells ok, 1 partial failure
};

inline std::string cell_id(Scheme scheme, const std::string &param, double value) {
  std::string id(to_string(scheme));
  if (!param.empty()) id += "_" + param + "_" + fmt9(value);
  return id;
}

inline void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline std::string summary_csv(const std::vector<CellResult> &cells) {
  std::ostringstream os;
  os << kSummaryHeader << "\n";
  for (const CellResult &c : cells) {
    os << to_string(c.scheme) << "," << c.sweep_parameter << ","
       << (c.sweep_parameter.empty() ? "" : fmt9(c.sweep_value)) << ",";
    if (c.report) {
      os << fmt9(c.report->objective) << "," << c.report->outer_iters << ","
         << (c.report->converged ? "true" : "false") << "," << fmt9(c.report->wall_time);
    } else {
      os << ",,,";
    }
    std::string status = c.error.empty() ? "ok" : c.error;
    for (char &ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    os << "," << status << "\n";
  }
  return os.str();
}

/// Runs every (scheme, sweep value) cell, writes the requested files into
/// spec.output.directory and returns per-cell results. A failing cell is
/// recorded and the remaining cells still run.
inline ExperimentResult run_experiment(const ExperimentSpec &spec, const SolverConfig &cfg,
                                       std::ostream *log = nullptr) {
  validate(spec);
  namespace fs = std::filesystem;
  const fs::path dir(spec.output.directory);
  fs::create_directories(dir);

  std::vector<std::pair<std::string, double>> points;
  if (spec.sweep) {
    for (double v : spec.sweep->values()) points.emplace_back(spec.sweep->parameter, v);
  } else {
    points.emplace_back(std::string{}, 0.0);
  }

  ExperimentResult res;
  for (Scheme scheme : spec.schemes) {
    for (const auto &[param, value] : points) {
      CellResult cell;
      cell.scheme = scheme;
      cell.sweep_parameter = param;
      cell.sweep_value = value;
      cell.id = cell_id(scheme, param, value);
      try {
        const Scenario s = build_scenario(spec.scenario, param, value);
        SolveReport rep = solve_joint(s, cfg, scheme);
        if (auto bad = audit(rep)) cell.error = "feasibility audit failed: " + *bad;
        if (spec.output.per_slot_csv) write_text(dir / (cell.id + ".csv"), per_slot_csv(rep));
        if (spec.output.trace) write_text(dir / (cell.id + "_trace.csv"), trace_csv(rep));
        cell.report = std::move(rep);
      } catch (const std::exception &err) {
        cell.error = err.what();
      }
      if (log) {
        *log << cell.id << ": ";
        if (cell.report) *log << "avg_secrecy_rate=" << fmt9(cell.report->objective)
                              << " outer_iters=" << cell.report->outer_iters;
        if (!cell.error.empty()) *log << (cell.report ? " " : "") << "ERROR " << cell.error;
        *log << "\n";
      }
      if (!cell.error.empty()) res.exit_code = 1;
      res.cells.push_back(std::move(cell));
    }
  }
  if (spec.output.summary) write_text(dir / "summary.csv", summary_csv(res.cells));
  return res;
}

} // namespace uavsec
