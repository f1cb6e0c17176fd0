#pragma once
// Experiment configuration, run records, the study drivers behind the
// command-line tool, and report aggregation.
//
// Every driver reads one ExperimentConfig, writes its outputs under
// config.out, and returns a RunRecord listing what it wrote. Numeric output
// is a pure function of the config: replicate k draws from counter streams
// keyed by (seed + k), so worker count and scheduling order never show up in
// the files. Wall-clock timings live only in the run record.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgf {

inline constexpr char kToolkitVersion[] = "0.3.0";

// Exit-code mapping in run_cli: ConfigError -> 2, IoError -> 3, anything
// else -> 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One flat configuration shared by all subcommands; unused sections keep
// their defaults. JSON layout mirrors the grouping comments below. Parsing
// rejects unknown keys and reports the offending key path, and
// config_from_json(config_to_json(c)) == c holds exactly (doubles included).
struct ExperimentConfig {
  // spectrum
  std::string kind = "power_law";  // "power_law" or "linear"
  double alpha = 2.5;
  double k0 = 1.0;
  int l_max = 64;
  // field
  int d = 1;
  std::vector<double> levels;  // level vector t; empty means the origin
  // grid
  int n_rows = 48;
  int n_lon = 130;
  // band parameters: degrees [floor(b^-beta / r), floor(b^(1-beta) / r)];
  // beta = 0 selects the default (alpha - 2) / 4
  double band_b = 8.0;
  double band_beta = 0.0;
  double band_r = 0.1;
  std::vector<double> band_b_sweep = {4.0, 8.0, 16.0};
  // radius schedule r0 * ratio^k (slnd reads it as the list of scales)
  double radius0 = 0.1;
  int radius_count = 3;
  double radius_ratio = 0.1;
  // level-tolerance schedule for hitting
  double eps0 = 0.4;
  int eps_count = 4;
  double eps_ratio = 0.5;
  // target cap
  double cap_colat = 1.5707963267948966;
  double cap_lon = 0.0;
  double cap_radius = 1.5707963267948966;
  // smooth-event sweep
  double smooth_r0 = 0.05;
  std::vector<double> c_grid = {0.5, 1.0, 2.0, 4.0, 8.0};
  // verify-theory grid; empty falls back to {alpha} x {d}
  std::vector<double> theory_alphas;
  std::vector<int> theory_ds;
  // capacity tilt family
  std::vector<double> tilts = {0.0, 1.0, 2.0, 4.0};
  // run control
  int replicates = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

enum class Command {
  simulate,
  covariance,
  variogram,
  slnd,
  localtime,
  levelset,
  dimension,
  capacity,
  hitting,
  oscillation_tail,
  smooth_event,
  verify_theory,
  report,
};

const char* command_name(Command c);

// Serialization. config_to_json emits every field; parse_config fills
// defaults for missing keys, rejects unknown ones, and reports type errors
// by key path. load_config throws IoError when the file cannot be read and
// ConfigError (with the parser's byte position) when it is not JSON.
std::string config_to_json(const ExperimentConfig& c);
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& c, const std::string& path);

// Structural validation plus the command's own floor (oscillation-tail
// needs replicates >= 500, smooth-event >= 200, grid synthesis needs
// n_lon >= 2 l_max + 1, ...). Theory commands reject alpha outside (2, 4),
// where the hitting criterion 4 - (alpha - 2) d > 0 degenerates; simulate
// only warns. Returns the warnings.
std::vector<std::string> validate_config(const ExperimentConfig& c, Command cmd);
bool theory_command(Command cmd);

// FNV-1a over the canonical serialization; hex form is what output files
// embed.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string config_hash_hex(const ExperimentConfig& c);

struct RunOutput {
  std::string name;
  std::string path;
};

struct RunTiming {
  std::string name;
  double seconds = 0.0;
};

struct RunRecord {
  std::string command;
  std::string version = kToolkitVersion;
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  bool passed = true;  // hard checks only; statistical misses become warnings
  std::vector<RunOutput> outputs;
  std::vector<RunTiming> timings;
  std::vector<std::string> warnings;

  std::string output_path(const std::string& name) const;  // throws if absent
};

void save_run_record_json(const RunRecord& r, const std::string& path);

// Empirical tail of a sample set on an explicit threshold grid:
// prob[j] = #{samples >= u[j]} / n. The grid must be nonempty, the samples
// too; a threshold below every sample gives probability exactly 1.
struct TailCurve {
  std::vector<double> u;
  std::vector<double> prob;
  int n = 0;
};

TailCurve tail_curve(const std::vector<double>& samples, const std::vector<double>& u);

// Thresholds at evenly spaced sample quantiles of q in [q_lo, q_hi]
// (deduplicated, ascending). Default window covers the upper half without
// the last few order statistics.
std::vector<double> quantile_grid(std::vector<double> samples, int count,
                                  double q_lo = 0.50, double q_hi = 0.95);

// Least squares of log prob against u^2 over rows with prob > 0. Gaussian
// concentration makes this linear; slope < 0. Requires >= 3 usable rows.
struct LogTailFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

LogTailFit fit_log_tail(const TailCurve& curve);

// Oscillation tails of the full field and of the band residual
// T - T^{l,u} over one cap, replicated. Band residuals reuse the full
// field's coefficient draws, so the comparison across b is paired.
struct BandTail {
  double b = 0.0;
  int l = 0;
  int u = 0;
  TailCurve curve;                  // pooled over all replicates
  LogTailFit pooled;
  std::vector<LogTailFit> batches;  // contiguous replicate batches
  double median_slope = 0.0;        // over batch fits
};

struct OscillationTailResult {
  TailCurve full_curve;
  LogTailFit full_fit;
  double full_min = 0.0;  // smallest observed oscillation
  std::vector<BandTail> bands;
  bool slope_monotone = false;  // |median slope| increasing across bands
};

struct SmoothEventRow {
  double c = 0.0;
  int successes = 0;
  int replicates = 0;
  double frequency = 0.0;
};

struct SmoothEventResult {
  double r0 = 0.0;
  double guarantee = 0.0;           // 1 - 1 / log^2 r0
  std::vector<double> radii;        // usable schedule inside (r0^2, r0)
  std::vector<SmoothEventRow> rows; // one per c, ascending
  double best_c = 0.0;              // smallest c reaching the guarantee,
  double best_frequency = 0.0;      // else the argmax
};

/// One theory check: hard ones gate the run, statistical ones warn unless
// the miss exceeds twice the tolerance.
struct TheoryCheck {
  std::string name;
  double expected = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool hard = true;
  std::string note;
};

struct TheoryCell {
  double alpha = 0.0;
  int d = 0;
  double hitting_margin = 0.0;        // 4 - (alpha - 2) d
  double dimension_prediction = 0.0;  // 2 - (alpha - 2) d / 2
  bool hitting_possible = false;
  std::vector<TheoryCheck> checks;
};

struct TheoryReport {
  std::string version;
  std::string hash_hex;
  std::uint64_t seed = 0;
  std::vector<TheoryCell> cells;
  bool passed = true;
  std::vector<std::string> warnings;
};

std::string theory_report_to_json(const TheoryReport& r);

/// Schema for the verify-theory report (JSON, subset of JSON Schema:
// type/required/properties/items). validate_json_schema returns the list of
// violations, empty when the document conforms; emitted next to each report
// so consumers can check what they read.
extern const char kTheoryReportSchema[];
std::vector<std::string> validate_json_schema(const std::string& document,
                                              const std::string& schema);

// Drivers. Each validates the config for its command, creates config.out,
// writes the outputs named in the returned record, and leaves a
// run_record_<command>.json next to them. Statistical misses are recorded
// as warnings; hard failures clear record.passed (verify_theory) or throw.
RunRecord run_simulate(const ExperimentConfig& c);
RunRecord run_covariance(const ExperimentConfig& c);
RunRecord run_variogram(const ExperimentConfig& c);
RunRecord run_slnd(const ExperimentConfig& c);
RunRecord run_localtime(const ExperimentConfig& c);
RunRecord run_levelset(const ExperimentConfig& c);
RunRecord run_dimension(const ExperimentConfig& c);
RunRecord run_capacity(const ExperimentConfig& c);
RunRecord run_hitting(const ExperimentConfig& c);
RunRecord run_oscillation_tail(const ExperimentConfig& c,
                               OscillationTailResult* result = nullptr);
RunRecord run_smooth_event(const ExperimentConfig& c,
                           SmoothEventResult* result = nullptr);
RunRecord run_verify_theory(const ExperimentConfig& c, TheoryReport* report = nullptr);
RunRecord run_report(const ExperimentConfig& c);

/// Full command dispatch behind the sgf binary: parses argv (subcommand,
// --config PATH, --seed U64, --threads N, --out DIR), runs the driver, and
// maps outcomes to exit codes 0 (ok), 1 (hard failure), 2 (invalid config
// or usage), 3 (I/O).
int run_cli(const std::vector<std::string>& args);

}  // namespace sgf
