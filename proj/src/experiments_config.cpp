#include "sgf/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sgf {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kInvE = 0.36787944117144233;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

double as_double(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) bad(path, "expected a number");
  return j.get<double>();
}

int as_int(const ordered_json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) bad(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const ordered_json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    bad(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::string as_string(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) bad(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_double_vec(const ordered_json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

std::vector<int> as_int_vec(const ordered_json& j, const std::string& path) {
  if (!j.is_array()) bad(path, "expected an array of integers");
  std::vector<int> v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v.push_back(as_int(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

// Object walker that records which keys were consumed so leftovers can be
// reported by full path.
struct Section {
  const ordered_json& obj;
  std::string prefix;
  std::set<std::string> used;

  Section(const ordered_json& o, std::string p) : obj(o), prefix(std::move(p)) {
    if (!obj.is_object()) bad(prefix.empty() ? "config" : prefix, "expected an object");
  }

  const ordered_json* find(const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    used.insert(key);
    return &*it;
  }

  std::string path(const std::string& key) const {
    return prefix.empty() ? key : prefix + "." + key;
  }

  void finish() const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!used.count(it.key())) bad(path(it.key()), "unknown key");
    }
  }
};

}  // namespace

const char* command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::covariance: return "covariance";
    case Command::variogram: return "variogram";
    case Command::slnd: return "slnd";
    case Command::localtime: return "localtime";
    case Command::levelset: return "levelset";
    case Command::dimension: return "dimension";
    case Command::capacity: return "capacity";
    case Command::hitting: return "hitting";
    case Command::oscillation_tail: return "oscillation-tail";
    case Command::smooth_event: return "smooth-event";
    case Command::verify_theory: return "verify-theory";
    case Command::report: return "report";
  }
  return "?";
}

bool theory_command(Command cmd) {
  switch (cmd) {
    case Command::simulate:
    case Command::covariance:
    case Command::report:
      return false;
    default:
      return true;
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["spectrum"] = {{"kind", c.kind}, {"alpha", c.alpha}, {"k0", c.k0}, {"l_max", c.l_max}};
  j["d"] = c.d;
  j["levels"] = c.levels;
  j["grid"] = {{"n_rows", c.n_rows}, {"n_lon", c.n_lon}};
  j["band"] = {{"b", c.band_b},
               {"beta", c.band_beta},
               {"r", c.band_r},
               {"b_sweep", c.band_b_sweep}};
  j["radii"] = {{"r0", c.radius0}, {"count", c.radius_count}, {"ratio", c.radius_ratio}};
  j["eps"] = {{"eps0", c.eps0}, {"count", c.eps_count}, {"ratio", c.eps_ratio}};
  j["cap"] = {{"colat", c.cap_colat}, {"lon", c.cap_lon}, {"radius", c.cap_radius}};
  j["smooth"] = {{"r0", c.smooth_r0}, {"c_grid", c.c_grid}};
  j["theory"] = {{"alphas", c.theory_alphas}, {"ds", c.theory_ds}};
  j["tilts"] = c.tilts;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  return j.dump(2);
}

ExperimentConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }

  ExperimentConfig c;
  Section root(j, "");

  if (const auto* s = root.find("spectrum")) {
    Section sec(*s, "spectrum");
    if (const auto* v = sec.find("kind")) c.kind = as_string(*v, sec.path("kind"));
    if (const auto* v = sec.find("alpha")) c.alpha = as_double(*v, sec.path("alpha"));
    if (const auto* v = sec.find("k0")) c.k0 = as_double(*v, sec.path("k0"));
    if (const auto* v = sec.find("l_max")) c.l_max = as_int(*v, sec.path("l_max"));
    sec.finish();
  }
  if (const auto* v = root.find("d")) c.d = as_int(*v, "d");
  if (const auto* v = root.find("levels")) c.levels = as_double_vec(*v, "levels");
  if (const auto* s = root.find("grid")) {
    Section sec(*s, "grid");
    if (const auto* v = sec.find("n_rows")) c.n_rows = as_int(*v, sec.path("n_rows"));
    if (const auto* v = sec.find("n_lon")) c.n_lon = as_int(*v, sec.path("n_lon"));
    sec.finish();
  }
  if (const auto* s = root.find("band")) {
    Section sec(*s, "band");
    if (const auto* v = sec.find("b")) c.band_b = as_double(*v, sec.path("b"));
    if (const auto* v = sec.find("beta")) c.band_beta = as_double(*v, sec.path("beta"));
    if (const auto* v = sec.find("r")) c.band_r = as_double(*v, sec.path("r"));
    if (const auto* v = sec.find("b_sweep"))
      c.band_b_sweep = as_double_vec(*v, sec.path("b_sweep"));
    sec.finish();
  }
  if (const auto* s = root.find("radii")) {
    Section sec(*s, "radii");
    if (const auto* v = sec.find("r0")) c.radius0 = as_double(*v, sec.path("r0"));
    if (const auto* v = sec.find("count")) c.radius_count = as_int(*v, sec.path("count"));
    if (const auto* v = sec.find("ratio")) c.radius_ratio = as_double(*v, sec.path("ratio"));
    sec.finish();
  }
  if (const auto* s = root.find("eps")) {
    Section sec(*s, "eps");
    if (const auto* v = sec.find("eps0")) c.eps0 = as_double(*v, sec.path("eps0"));
    if (const auto* v = sec.find("count")) c.eps_count = as_int(*v, sec.path("count"));
    if (const auto* v = sec.find("ratio")) c.eps_ratio = as_double(*v, sec.path("ratio"));
    sec.finish();
  }
  if (const auto* s = root.find("cap")) {
    Section sec(*s, "cap");
    if (const auto* v = sec.find("colat")) c.cap_colat = as_double(*v, sec.path("colat"));
    if (const auto* v = sec.find("lon")) c.cap_lon = as_double(*v, sec.path("lon"));
    if (const auto* v = sec.find("radius")) c.cap_radius = as_double(*v, sec.path("radius"));
    sec.finish();
  }
  if (const auto* s = root.find("smooth")) {
    Section sec(*s, "smooth");
    if (const auto* v = sec.find("r0")) c.smooth_r0 = as_double(*v, sec.path("r0"));
    if (const auto* v = sec.find("c_grid")) c.c_grid = as_double_vec(*v, sec.path("c_grid"));
    sec.finish();
  }
  if (const auto* s = root.find("theory")) {
    Section sec(*s, "theory");
    if (const auto* v = sec.find("alphas"))
      c.theory_alphas = as_double_vec(*v, sec.path("alphas"));
    if (const auto* v = sec.find("ds")) c.theory_ds = as_int_vec(*v, sec.path("ds"));
    sec.finish();
  }
  if (const auto* v = root.find("tilts")) c.tilts = as_double_vec(*v, "tilts");
  if (const auto* v = root.find("replicates")) c.replicates = as_int(*v, "replicates");
  if (const auto* v = root.find("seed")) c.seed = as_u64(*v, "seed");
  if (const auto* v = root.find("threads")) c.threads = as_int(*v, "threads");
  if (const auto* v = root.find("out")) c.out = as_string(*v, "out");
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config(const ExperimentConfig& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << config_to_json(c) << '\n';
  if (!out) throw IoError("write failed on " + path);
}

std::vector<std::string> validate_config(const ExperimentConfig& c, Command cmd) {
  std::vector<std::string> warnings;
  const std::string cmd_name = command_name(cmd);

  if (c.kind != "power_law" && c.kind != "linear")
    bad("spectrum.kind", "expected \"power_law\" or \"linear\", got \"" + c.kind + "\"");
  if (c.kind == "linear" && theory_command(cmd))
    bad("spectrum.kind",
        "theory commands need a power-law spectrum; the linear-covariance spectrum "
        "declares index alpha = 1, outside (2, 4)");
  if (c.kind == "power_law") {
    if (!(c.alpha > 2.0))
      bad("spectrum.alpha", "power-law spectra need alpha > 2; got " + std::to_string(c.alpha));
    if (theory_command(cmd) && !(c.alpha < 4.0))
      bad("spectrum.alpha", cmd_name + " needs 2 < alpha < 4: the hitting criterion "
          "4 - (alpha - 2) d > 0 holds for no d once alpha reaches 4; got " +
          std::to_string(c.alpha));
    if (cmd == Command::simulate && !(c.alpha < 4.0))
      warnings.push_back("spectrum.alpha = " + std::to_string(c.alpha) +
                         " lies outside (2, 4); the level-set diagnostics do not apply, "
                         "simulation proceeds");
    if (!(c.k0 >= 1.0)) bad("spectrum.k0", "regularity bound must be >= 1");
  }
  if (c.l_max < 1) bad("spectrum.l_max", "must be >= 1");
  if (c.d < 1) bad("d", "component count must be >= 1");
  if (!c.levels.empty() && static_cast<int>(c.levels.size()) != c.d)
    bad("levels", "expected 0 or exactly d = " + std::to_string(c.d) + " entries, got " +
                      std::to_string(c.levels.size()));

  if (c.n_rows < 2) bad("grid.n_rows", "must be >= 2");
  if (c.n_lon < 4) bad("grid.n_lon", "must be >= 4");
  const bool grid_synthesis = cmd == Command::simulate || cmd == Command::localtime ||
                              cmd == Command::levelset || cmd == Command::dimension ||
                              cmd == Command::hitting || cmd == Command::smooth_event;
  if (grid_synthesis && c.n_lon < 2 * c.l_max + 1)
    bad("grid.n_lon", "synthesis at l_max = " + std::to_string(c.l_max) + " needs n_lon >= " +
                          std::to_string(2 * c.l_max + 1) + ", got " + std::to_string(c.n_lon));
  if (cmd == Command::dimension && c.n_rows < 104)
    bad("grid.n_rows", "dimension fits need at least 3 hierarchy levels (>= 104 rows), got " +
                           std::to_string(c.n_rows));

  if (!(c.band_b > 1.0)) bad("band.b", "the band construction requires B > 1");
  const double beta_cap = c.alpha / 2.0 - 1.0;
  if (c.band_beta != 0.0 && !(c.band_beta > 0.0 && c.band_beta <= beta_cap))
    bad("band.beta", "must lie in (0, alpha/2 - 1] = (0, " + std::to_string(beta_cap) +
                         "], or 0 for the default (alpha - 2) / 4");
  if (!(c.band_r > 0.0 && c.band_r < 1.0)) bad("band.r", "band scale must lie in (0, 1)");
  if (c.band_b_sweep.empty()) bad("band.b_sweep", "must not be empty");
  for (std::size_t i = 0; i < c.band_b_sweep.size(); ++i) {
    if (!(c.band_b_sweep[i] > 1.0))
      bad("band.b_sweep[" + std::to_string(i) + "]", "requires B > 1");
    if (i > 0 && !(c.band_b_sweep[i] > c.band_b_sweep[i - 1]))
      bad("band.b_sweep", "values must be strictly ascending");
  }

  if (!(c.radius0 > 0.0)) bad("radii.r0", "must be positive");
  if (c.radius_count < 1) bad("radii.count", "must be >= 1");
  if (!(c.radius_ratio > 0.0 && c.radius_ratio < 1.0)) bad("radii.ratio", "must lie in (0, 1)");
  if (!(c.eps0 > 0.0)) bad("eps.eps0", "must be positive");
  if (c.eps_count < 1) bad("eps.count", "must be >= 1");
  if (!(c.eps_ratio > 0.0 && c.eps_ratio < 1.0)) bad("eps.ratio", "must lie in (0, 1)");

  if (!(c.cap_colat >= 0.0 && c.cap_colat <= 3.1415926535897932))
    bad("cap.colat", "must lie in [0, pi]");
  if (!std::isfinite(c.cap_lon)) bad("cap.lon", "must be finite");
  if (!(c.cap_radius > 0.0 && c.cap_radius <= 3.1415926535897932))
    bad("cap.radius", "must lie in (0, pi]");

  if (!(c.smooth_r0 > 0.0 && c.smooth_r0 < kInvE))
    bad("smooth.r0", "must lie in (0, 1/e): the scale gauge w needs log|log r| > 0");
  if (c.c_grid.empty()) bad("smooth.c_grid", "must not be empty");
  for (std::size_t i = 0; i < c.c_grid.size(); ++i) {
    if (!(c.c_grid[i] > 0.0)) bad("smooth.c_grid[" + std::to_string(i) + "]", "must be positive");
    if (i > 0 && !(c.c_grid[i] > c.c_grid[i - 1]))
      bad("smooth.c_grid", "values must be strictly ascending");
  }

  const bool uses_theory_grid =
      cmd == Command::capacity || cmd == Command::hitting || cmd == Command::verify_theory;
  if (uses_theory_grid) {
    for (std::size_t i = 0; i < c.theory_alphas.size(); ++i) {
      const double a = c.theory_alphas[i];
      if (!(a > 2.0 && a < 4.0))
        bad("theory.alphas[" + std::to_string(i) + "]",
            "must satisfy 2 < alpha < 4 (the hitting criterion 4 - (alpha - 2) d > 0 "
            "degenerates outside); got " + std::to_string(a));
    }
    for (std::size_t i = 0; i < c.theory_ds.size(); ++i) {
      if (c.theory_ds[i] < 1) bad("theory.ds[" + std::to_string(i) + "]", "must be >= 1");
    }
  }
  if (cmd == Command::hitting && !c.theory_ds.empty() && !c.levels.empty())
    bad("levels", "a fixed level vector cannot combine with a theory.ds sweep; "
                  "leave levels empty (origin) when sweeping d");

  if (c.tilts.empty()) bad("tilts", "must not be empty");
  for (std::size_t i = 0; i < c.tilts.size(); ++i)
    if (!(c.tilts[i] >= 0.0)) bad("tilts[" + std::to_string(i) + "]", "must be >= 0");

  if (c.replicates < 1) bad("replicates", "must be >= 1");
  if (cmd == Command::oscillation_tail && c.replicates < 500)
    bad("replicates", "oscillation-tail needs >= 500 replicates for stable tail fits, got " +
                          std::to_string(c.replicates));
  if (cmd == Command::smooth_event && c.replicates < 200)
    bad("replicates", "smooth-event needs >= 200 replicates, got " +
                          std::to_string(c.replicates));
  if (cmd == Command::hitting && c.replicates < 100)
    bad("replicates", "hitting needs >= 100 replicates, got " + std::to_string(c.replicates));

  if (c.threads < 1) bad("threads", "must be >= 1");
  if (c.out.empty()) bad("out", "output directory must not be empty");
  return warnings;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // The hash names the experiment, so execution parameters that cannot
  // change any number (worker count, output directory) stay out of it.
  ordered_json j = ordered_json::parse(config_to_json(c));
  j.erase("threads");
  j.erase("out");
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(config_hash(c)));
  return buf;
}

std::string RunRecord::output_path(const std::string& name) const {
  for (const auto& o : outputs)
    if (o.name == name) return o.path;
  throw std::out_of_range("run record has no output named " + name);
}

void save_run_record_json(const RunRecord& r, const std::string& path) {
  ordered_json j;
  j["command"] = r.command;
  j["version"] = r.version;
  j["config_hash"] = r.hash;
  j["seed"] = r.seed;
  j["passed"] = r.passed;
  j["outputs"] = ordered_json::array();
  for (const auto& o : r.outputs) j["outputs"].push_back({{"name", o.name}, {"path", o.path}});
  j["timings"] = ordered_json::array();
  for (const auto& t : r.timings)
    j["timings"].push_back({{"name", t.name}, {"seconds", t.seconds}});
  j["warnings"] = r.warnings;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed on " + path);
}

TailCurve tail_curve(const std::vector<double>& samples, const std::vector<double>& u) {
  if (samples.empty()) throw std::invalid_argument("tail_curve: no samples");
  if (u.empty()) throw std::invalid_argument("tail_curve: empty threshold grid");
  TailCurve curve;
  curve.u = u;
  curve.n = static_cast<int>(samples.size());
  curve.prob.reserve(u.size());
  for (double threshold : u) {
    std::ptrdiff_t hits = std::count_if(samples.begin(), samples.end(),
                                        [threshold](double s) { return s >= threshold; });
    curve.prob.push_back(static_cast<double>(hits) / static_cast<double>(samples.size()));
  }
  return curve;
}

std::vector<double> quantile_grid(std::vector<double> samples, int count, double q_lo,
                                  double q_hi) {
  if (samples.empty()) throw std::invalid_argument("quantile_grid: no samples");
  if (count < 2) throw std::invalid_argument("quantile_grid: need at least 2 thresholds");
  if (!(q_lo >= 0.0 && q_lo < q_hi && q_hi <= 1.0))
    throw std::invalid_argument("quantile_grid: need 0 <= q_lo < q_hi <= 1");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double q = q_lo + (q_hi - q_lo) * static_cast<double>(i) / (count - 1);
    auto idx = static_cast<std::size_t>(std::min(n - 1.0, std::floor(q * n)));
    const double value = samples[idx];
    if (grid.empty() || value > grid.back()) grid.push_back(value);
  }
  return grid;
}

LogTailFit fit_log_tail(const TailCurve& curve) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < curve.u.size(); ++i) {
    if (curve.prob[i] > 0.0) {
      xs.push_back(curve.u[i] * curve.u[i]);
      ys.push_back(std::log(curve.prob[i]));
    }
  }
  if (xs.size() < 3)
    throw std::invalid_argument("fit_log_tail: need at least 3 thresholds with positive mass");
  const auto n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  if (!(vx > 0.0)) throw std::invalid_argument("fit_log_tail: degenerate threshold grid");
  LogTailFit fit;
  fit.slope = cxy / vx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r2 = vy > 0.0 ? (cxy * cxy) / (vx * vy) : 1.0;
  fit.points = static_cast<int>(xs.size());
  return fit;
}

const char kTheoryReportSchema[] = R"({
  "type": "object",
  "required": ["version", "config_hash", "seed", "header", "cells", "passed", "warnings"],
  "properties": {
    "version": {"type": "string"},
    "config_hash": {"type": "string"},
    "seed": {"type": "integer"},
    "passed": {"type": "boolean"},
    "warnings": {"type": "array", "items": {"type": "string"}},
    "header": {
      "type": "object",
      "required": ["predictions"],
      "properties": {
        "predictions": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["alpha", "d", "dimension", "hitting_possible"],
            "properties": {
              "alpha": {"type": "number"},
              "d": {"type": "integer"},
              "dimension": {"type": "number"},
              "hitting_possible": {"type": "boolean"}
            }
          }
        }
      }
    },
    "cells": {
      "type": "array",
      "items": {
        "type": "object",
        "required": ["alpha", "d", "hitting_margin", "dimension_prediction",
                     "hitting_possible", "checks"],
        "properties": {
          "alpha": {"type": "number"},
          "d": {"type": "integer"},
          "hitting_margin": {"type": "number"},
          "dimension_prediction": {"type": "number"},
          "hitting_possible": {"type": "boolean"},
          "checks": {
            "type": "array",
            "items": {
              "type": "object",
              "required": ["name", "expected", "measured", "tolerance", "passed", "hard"],
              "properties": {
                "name": {"type": "string"},
                "expected": {"type": "number"},
                "measured": {"type": "number"},
                "tolerance": {"type": "number"},
                "passed": {"type": "boolean"},
                "hard": {"type": "boolean"},
                "note": {"type": "string"}
              }
            }
          }
        }
      }
    }
  }
})";

namespace {

bool type_matches(const ordered_json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (t == "number") return v.is_number();
  return false;
}

void check_schema(const ordered_json& v, const ordered_json& schema, const std::string& path,
                  std::vector<std::string>& errors) {
  if (auto it = schema.find("type"); it != schema.end()) {
    if (!type_matches(v, it->get<std::string>())) {
      errors.push_back(path + ": expected " + it->get<std::string>());
      return;
    }
  }
  if (v.is_object()) {
    if (auto req = schema.find("required"); req != schema.end()) {
      for (const auto& key : *req) {
        if (!v.contains(key.get<std::string>()))
          errors.push_back(path + ": missing required key " + key.get<std::string>());
      }
    }
    if (auto props = schema.find("properties"); props != schema.end()) {
      for (auto it = props->begin(); it != props->end(); ++it) {
        if (v.contains(it.key()))
          check_schema(v.at(it.key()), it.value(), path + "." + it.key(), errors);
      }
    }
  }
  if (v.is_array()) {
    if (auto items = schema.find("items"); items != schema.end()) {
      for (std::size_t i = 0; i < v.size(); ++i)
        check_schema(v[i], *items, path + "[" + std::to_string(i) + "]", errors);
    }
  }
}

}  // namespace

std::vector<std::string> validate_json_schema(const std::string& document,
                                              const std::string& schema) {
  std::vector<std::string> errors;
  ordered_json doc, sch;
  try {
    doc = ordered_json::parse(document);
  } catch (const std::exception& e) {
    errors.push_back(std::string("document parse: ") + e.what());
    return errors;
  }
  try {
    sch = ordered_json::parse(schema);
  } catch (const std::exception& e) {
    errors.push_back(std::string("schema parse: ") + e.what());
    return errors;
  }
  check_schema(doc, sch, "$", errors);
  return errors;
}

std::string theory_report_to_json(const TheoryReport& r) {
  ordered_json j;
  j["version"] = r.version;
  j["config_hash"] = r.hash_hex;
  j["seed"] = r.seed;
  ordered_json preds = ordered_json::array();
  for (const auto& cell : r.cells) {
    preds.push_back({{"alpha", cell.alpha},
                     {"d", cell.d},
                     {"dimension", cell.dimension_prediction},
                     {"hitting_possible", cell.hitting_possible}});
  }
  j["header"] = {{"predictions", preds}};
  j["cells"] = ordered_json::array();
  for (const auto& cell : r.cells) {
    ordered_json checks = ordered_json::array();
    for (const auto& chk : cell.checks) {
      ordered_json one = {{"name", chk.name},         {"expected", chk.expected},
                          {"measured", chk.measured}, {"tolerance", chk.tolerance},
                          {"passed", chk.passed},     {"hard", chk.hard}};
      if (!chk.note.empty()) one["note"] = chk.note;
      checks.push_back(std::move(one));
    }
    j["cells"].push_back({{"alpha", cell.alpha},
                          {"d", cell.d},
                          {"hitting_margin", cell.hitting_margin},
                          {"dimension_prediction", cell.dimension_prediction},
                          {"hitting_possible", cell.hitting_possible},
                          {"checks", std::move(checks)}});
  }
  j["passed"] = r.passed;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace sgf
