#include "sgf/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "sgf/capacity.hpp"
#include "sgf/covariance.hpp"
#include "sgf/level_set.hpp"
#include "sgf/local_time.hpp"
#include "sgf/rng.hpp"
#include "sgf/spectrum.hpp"
#include "sgf/sphere_geom.hpp"
#include "sgf/synthesis.hpp"

namespace sgf {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Module-level savers signal failures as runtime_error; at the CLI boundary
// those are I/O outcomes, not bugs.
template <typename F>
void guard_io(F&& f) {
  try {
    f();
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

fs::path ensure_out_dir(const ExperimentConfig& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + c.out + ": " + ec.message());
  return dir;
}

RunRecord begin_record(const ExperimentConfig& c, Command cmd) {
  RunRecord r;
  r.command = command_name(cmd);
  r.hash = config_hash(c);
  r.seed = c.seed;
  r.warnings = validate_config(c, cmd);
  ensure_out_dir(c);
  return r;
}

void finish_record(RunRecord& r, const ExperimentConfig& c) {
  const fs::path path = fs::path(c.out) / ("run_record_" + r.command + ".json");
  save_run_record_json(r, path.string());
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

std::string stamp_line(const ExperimentConfig& c) {
  return "# config=" + config_hash_hex(c) + " seed=" + std::to_string(c.seed) +
         " toolkit=" + kToolkitVersion + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << text;
  if (!out) throw IoError("write failed on " + path);
}

// Prepend the audit stamp to a CSV a module writer produced.
void stamp_csv(const std::string& path, const ExperimentConfig& c) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot reread " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  in.close();
  write_text(path, stamp_line(c) + buf.str());
}

void write_json(const std::string& path, ordered_json j, const ExperimentConfig& c) {
  j["config_hash"] = config_hash_hex(c);
  j["seed"] = c.seed;
  j["toolkit"] = kToolkitVersion;
  write_text(path, j.dump(2) + "\n");
}

PowerSpectrum spectrum_for(const ExperimentConfig& c) {
  if (c.kind == "linear") return normalize(linear_covariance_spectrum(c.l_max));
  return normalize(power_law_spectrum(c.alpha, c.k0, [](int) { return 1.0; }, c.l_max));
}

PowerSpectrum spectrum_at(double alpha, int l_max) {
  return normalize(power_law_spectrum(alpha, l_max));
}

Eigen::VectorXd level_vector(const ExperimentConfig& c, int d) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(d);
  if (!c.levels.empty() && static_cast<int>(c.levels.size()) == d)
    for (int k = 0; k < d; ++k) t[k] = c.levels[static_cast<std::size_t>(k)];
  return t;
}

Cap config_cap(const ExperimentConfig& c) {
  return make_cap(make_point(c.cap_colat, c.cap_lon), c.cap_radius);
}

// Replicate pool: worker threads pull indices; every result lands in its
// own slot, so the merged output is independent of scheduling.
template <typename F>
void for_each_replicate(int n, int threads, F&& body) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Destination at geodesic distance s and bearing psi from the center,
// through an orthonormal tangent frame (pole-safe).
SpherePoint offset_point(const SpherePoint& center, double s, double psi) {
  const Eigen::Vector3d u = center.unit();
  Eigen::Vector3d a = Eigen::Vector3d::UnitZ().cross(u);
  if (a.norm() < 1e-12) a = Eigen::Vector3d::UnitX().cross(u);
  a.normalize();
  const Eigen::Vector3d b = u.cross(a);
  const Eigen::Vector3d x =
      std::cos(s) * u + std::sin(s) * (std::cos(psi) * a + std::sin(psi) * b);
  return point_from_unit(x);
}

// Deterministic sunflower design: the center plus n-1 spiral points strictly
// inside the cap.
std::vector<SpherePoint> cap_points(const SpherePoint& center, double r, int n) {
  constexpr double kGolden = 2.3999632297286533;
  std::vector<SpherePoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  pts.push_back(center);
  for (int i = 1; i < n; ++i) {
    const double s = 0.999 * r * std::sqrt(static_cast<double>(i) / (n - 1));
    pts.push_back(offset_point(center, s, kGolden * i));
  }
  return pts;
}

SpherePoint uniform_point(const Key2& key, std::uint64_t c0, std::uint64_t c1,
                          std::uint64_t c2) {
  const auto u = uniform4({c0, c1, c2, 0}, key);
  const double z = std::clamp(2.0 * u[0] - 1.0, -1.0, 1.0);
  return make_point(std::acos(z), 2.0 * kPi * u[1]);
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  f.slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

const char* trend_name(HittingTrend t) {
  switch (t) {
    case HittingTrend::stable: return "stable";
    case HittingTrend::collapsing: return "collapsing";
    case HittingTrend::mixed: return "mixed";
  }
  return "?";
}

const char* status_name(EnergyStatus s) {
  switch (s) {
    case EnergyStatus::finite: return "finite";
    case EnergyStatus::divergent: return "divergent";
    case EnergyStatus::indeterminate: return "indeterminate";
  }
  return "?";
}

}  // namespace

RunRecord run_simulate(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::simulate);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const IsoLatGrid grid = make_grid(c.n_rows, c.n_lon);
  const FieldSample f = vector_field(s, c.d, 0, c.l_max, grid, c.seed, c.threads);
  rec.timings.push_back({"synthesis", clock.lap()});

  const std::string bin_path = (dir / "field.bin").string();
  guard_io([&] { save_field_binary(f, bin_path); });
  rec.outputs.push_back({"field", bin_path});

  ordered_json summary = ordered_json::array();
  for (int k = 0; k < c.d; ++k) {
    double mean = 0.0, second = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double w = grid.ring_weight(static_cast<int>(i / grid.n_lon));
      mean += w * f.values(i, k);
      second += w * f.values(i, k) * f.values(i, k);
    }
    mean /= 4.0 * kPi;
    second /= 4.0 * kPi;
    const double variance = second - mean * mean;
    summary.push_back({{"component", k}, {"mean", mean}, {"variance", variance}});
    std::printf("component %d: mean % .6f, variance %.6f\n", k, mean, variance);
  }

  ordered_json meta;
  meta["file"] = "field.bin";
  meta["components"] = c.d;
  meta["l_max"] = c.l_max;
  meta["grid"] = {{"n_rows", c.n_rows}, {"n_lon", c.n_lon}};
  meta["summary"] = std::move(summary);
  const std::string meta_path = (dir / "field_meta.json").string();
  write_json(meta_path, std::move(meta), c);
  rec.outputs.push_back({"metadata", meta_path});
  rec.timings.push_back({"write", clock.lap()});

  finish_record(rec, c);
  return rec;
}

RunRecord run_covariance(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::covariance);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const CovarianceModel m = make_covariance_model(s);
  const int n = 241;
  Eigen::VectorXd thetas(n);
  const double lo = std::log(1e-3), hi = std::log(kPi);
  for (int i = 0; i < n; ++i)
    thetas[i] = std::min(kPi, std::exp(lo + (hi - lo) * i / (n - 1.0)));

  const std::string cov_path = (dir / "covariance.csv").string();
  guard_io([&] { save_covariance_csv(m, thetas, cov_path); });
  stamp_csv(cov_path, c);
  rec.outputs.push_back({"covariance", cov_path});

  const std::string spec_path = (dir / "spectrum.csv").string();
  guard_io([&] { save_spectrum_csv(s, spec_path); });
  stamp_csv(spec_path, c);
  rec.outputs.push_back({"spectrum", spec_path});

  ordered_json j;
  j["variance"] = m.var0;
  j["tail_bound"] = covariance_tail_bound(m);
  const std::string sum_path = (dir / "covariance_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});
  rec.timings.push_back({"total", clock.lap()});

  finish_record(rec, c);
  return rec;
}

RunRecord run_variogram(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::variogram);
  const fs::path dir(c.out);
  Stopwatch clock;

  const double theta_min = 1e-3, theta_max = 1e-1;
  if (c.l_max < static_cast<int>(10.0 / theta_min))
    rec.warnings.push_back("truncation flattens the variogram below about " +
                           std::to_string(10.0 / c.l_max) +
                           "; the slope fit window extends below resolved scales");

  const CovarianceModel m = make_covariance_model(spectrum_for(c));
  const int n = 101;
  std::vector<double> lt, lv;
  std::ostringstream csv;
  csv << stamp_line(c) << "theta,variogram\n";
  csv.precision(17);
  for (int i = 0; i < n; ++i) {
    const double theta =
        std::exp(std::log(theta_min) +
                 (std::log(theta_max) - std::log(theta_min)) * i / (n - 1.0));
    const double v = variogram(m, theta);
    csv << theta << ',' << v << '\n';
    if (v > 0.0) {
      lt.push_back(std::log(theta));
      lv.push_back(std::log(v));
    }
  }
  const std::string csv_path = (dir / "variogram.csv").string();
  write_text(csv_path, csv.str());
  rec.outputs.push_back({"variogram", csv_path});

  const LineFit fit = fit_line(lt, lv);
  ordered_json j;
  j["slope"] = fit.slope;
  j["declared_exponent"] = c.kind == "power_law" ? c.alpha - 2.0 : 1.0;
  j["theta_min"] = theta_min;
  j["theta_max"] = theta_max;
  const std::string fit_path = (dir / "variogram_fit.json").string();
  write_json(fit_path, std::move(j), c);
  rec.outputs.push_back({"fit", fit_path});
  rec.timings.push_back({"total", clock.lap()});

  finish_record(rec, c);
  return rec;
}

RunRecord run_slnd(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::slnd);
  const fs::path dir(c.out);
  Stopwatch clock;

  const std::vector<double> scales = radius_schedule(c.radius0, c.radius_count, c.radius_ratio);
  const double finest = *std::min_element(scales.begin(), scales.end());
  if (finest < 10.0 / c.l_max)
    rec.warnings.push_back("scale " + std::to_string(finest) +
                           " lies below the spectrum's resolved range ~" +
                           std::to_string(10.0 / c.l_max) + "; raise spectrum.l_max");

  const CovarianceModel m = make_covariance_model(spectrum_for(c));
  const Key2 key = stream_key(c.seed, StreamTag::scratch);
  const int reps = c.replicates;
  const auto n_scales = static_cast<int>(scales.size());

  struct Row {
    double ratio = 0.0;
    bool regularized = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(n_scales) * reps);
  for_each_replicate(n_scales * reps, c.threads, [&](int idx) {
    const int si = idx / reps, rep = idx % reps;
    const double scale = scales[static_cast<std::size_t>(si)];
    const SpherePoint x = uniform_point(key, 0, static_cast<std::uint64_t>(si),
                                        static_cast<std::uint64_t>(rep));
    std::vector<SpherePoint> conds;
    conds.reserve(5);
    for (std::uint64_t k = 1; k <= 5; ++k) {
      const auto u = uniform4({k, static_cast<std::uint64_t>(si),
                               static_cast<std::uint64_t>(rep), 0},
                              key);
      conds.push_back(offset_point(x, scale * (0.5 + 0.5 * u[0]), 2.0 * kPi * u[1]));
    }
    const ConditionResult r = slnd_ratio(m, x, conds);
    rows[static_cast<std::size_t>(idx)] = {r.value, r.regularized};
  });
  rec.timings.push_back({"ratios", clock.lap()});

  std::ostringstream csv;
  csv << stamp_line(c) << "scale,replicate,ratio,regularized\n";
  csv.precision(17);
  std::vector<double> minima(static_cast<std::size_t>(n_scales),
                             std::numeric_limits<double>::infinity());
  for (int si = 0; si < n_scales; ++si) {
    for (int rep = 0; rep < reps; ++rep) {
      const Row& r = rows[static_cast<std::size_t>(si) * reps + rep];
      csv << scales[static_cast<std::size_t>(si)] << ',' << rep << ',' << r.ratio << ','
          << (r.regularized ? 1 : 0) << '\n';
      minima[static_cast<std::size_t>(si)] =
          std::min(minima[static_cast<std::size_t>(si)], r.ratio);
    }
  }
  const std::string csv_path = (dir / "slnd_ratios.csv").string();
  write_text(csv_path, csv.str());
  rec.outputs.push_back({"ratios", csv_path});

  const double lo = *std::min_element(minima.begin(), minima.end());
  const double hi = *std::max_element(minima.begin(), minima.end());
  ordered_json j;
  j["scales"] = scales;
  j["minima"] = minima;
  j["global_min"] = lo;
  j["spread_factor"] = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  j["replicates_per_scale"] = reps;
  const std::string sum_path = (dir / "slnd_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});
  rec.timings.push_back({"write", clock.lap()});

  finish_record(rec, c);
  return rec;
}

RunRecord run_localtime(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::localtime);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const IsoLatGrid grid = make_grid(c.n_rows, c.n_lon);
  const FieldSample f = vector_field(s, c.d, 0, c.l_max, grid, c.seed, c.threads);
  rec.timings.push_back({"synthesis", clock.lap()});

  const Eigen::VectorXd t = level_vector(c, c.d);
  const double eps = default_bandwidth(f, c.alpha);
  const LocalTimeEstimate est = local_time_estimate(f, t, Region::sphere(), eps);

  // Profile radii must stay above the grid resolution and below 1/e; drop
  // the rest rather than fail, the sphere estimate stands on its own.
  const GaugeFunction g{c.alpha, c.d};
  std::vector<double> radii;
  for (double r : radius_schedule(c.radius0, c.radius_count, c.radius_ratio)) {
    if (r > resolution_scale(grid) && r < std::exp(-1.0)) radii.push_back(r);
  }
  if (radii.size() < radius_schedule(c.radius0, c.radius_count, c.radius_ratio).size())
    rec.warnings.push_back("density profile radii outside (resolution, 1/e) were dropped");
  if (!radii.empty()) {
    const SpherePoint x = make_point(c.cap_colat, c.cap_lon);
    const DensityProfile profile = upper_density_profile(f, t, x, radii, g, eps);
    const std::string prof_path = (dir / "localtime_profile.csv").string();
    guard_io([&] { save_density_profile_csv(profile, g, prof_path); });
    stamp_csv(prof_path, c);
    rec.outputs.push_back({"profile", prof_path});
  }
  rec.timings.push_back({"estimates", clock.lap()});

  ordered_json j;
  j["level"] = c.levels.empty() ? std::vector<double>(static_cast<std::size_t>(c.d), 0.0)
                                : c.levels;
  j["sphere_local_time"] = est.value;
  j["eps"] = est.eps;
  j["under_resolved"] = est.under_resolved;
  j["resolution"] = est.resolution;
  const std::string sum_path = (dir / "localtime_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});

  finish_record(rec, c);
  return rec;
}

RunRecord run_levelset(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::levelset);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const IsoLatGrid grid = make_grid(c.n_rows, c.n_lon);
  const FieldSample f = vector_field(s, c.d, 0, c.l_max, grid, c.seed, c.threads);
  rec.timings.push_back({"synthesis", clock.lap()});

  const double k_osc = fit_oscillation_constant(f, c.alpha);
  const double eps = default_level_tolerance(grid, c.alpha, k_osc);
  const Eigen::VectorXd t = level_vector(c, c.d);
  const LevelSetEstimate ls = extract_level_set(f, t, eps);
  rec.timings.push_back({"extraction", clock.lap()});

  const std::string set_path = (dir / "level_set.csv").string();
  guard_io([&] { save_level_set_csv(ls, set_path); });
  stamp_csv(set_path, c);
  rec.outputs.push_back({"level_set", set_path});

  ordered_json j;
  j["eps"] = eps;
  j["oscillation_constant"] = k_osc;
  j["member_points"] = static_cast<std::int64_t>(ls.member_indices.size());
  j["edge_crossings"] = static_cast<std::int64_t>(ls.crossings.size());
  const std::string sum_path = (dir / "levelset_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});

  finish_record(rec, c);
  return rec;
}

RunRecord run_dimension(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::dimension);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const IsoLatGrid grid = make_grid(c.n_rows, c.n_lon);
  int k_max = 3;
  while (k_max < 6 && 13 * (1 << (k_max + 1)) <= c.n_rows) ++k_max;
  const VoronoiHierarchy h = build_voronoi_hierarchy(k_max, grid);
  rec.timings.push_back({"hierarchy", clock.lap()});

  struct RepFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double std_error = 0.0;
    int k_lo = 0, k_hi = 0;
    std::int64_t set_size = 0;
    bool ok = false;
  };
  std::vector<RepFit> fits(static_cast<std::size_t>(c.replicates));
  const Eigen::VectorXd t = level_vector(c, c.d);
  for_each_replicate(c.replicates, c.threads, [&](int rep) {
    const FieldSample f =
        vector_field(s, c.d, 0, c.l_max, grid, c.seed + static_cast<std::uint64_t>(rep), 1);
    LevelSetEstimate ls;
    if (c.d == 1) {
      ls = extract_level_set(f, t, 1e-12);
    } else {
      const double k_osc = fit_oscillation_constant(f, c.alpha);
      ls = extract_level_set(f, t, default_level_tolerance(grid, c.alpha, k_osc));
    }
    RepFit& out = fits[static_cast<std::size_t>(rep)];
    out.set_size = ls.size();
    if (ls.empty()) return;
    try {
      const auto range = dimension_level_range(ls, h);
      const DimensionFit fit = box_dimension(ls, h, range.first, range.second);
      out.slope = fit.slope;
      out.std_error = fit.std_error;
      out.k_lo = range.first;
      out.k_hi = range.second;
      out.ok = true;
    } catch (const std::exception&) {
      // too few usable levels at this draw; row stays NaN
    }
  });
  rec.timings.push_back({"replicates", clock.lap()});

  std::ostringstream csv;
  csv << stamp_line(c) << "alpha,d,replicate,slope,std_error,k_lo,k_hi,set_size\n";
  csv.precision(17);
  std::vector<double> slopes;
  for (int rep = 0; rep < c.replicates; ++rep) {
    const RepFit& f = fits[static_cast<std::size_t>(rep)];
    csv << c.alpha << ',' << c.d << ',' << rep << ',' << f.slope << ',' << f.std_error << ','
        << f.k_lo << ',' << f.k_hi << ',' << f.set_size << '\n';
    if (f.ok) slopes.push_back(f.slope);
  }
  const std::string csv_path = (dir / "dimension_replicates.csv").string();
  write_text(csv_path, csv.str());
  rec.outputs.push_back({"replicates", csv_path});

  if (slopes.empty()) rec.warnings.push_back("no replicate produced a usable dimension fit");
  ordered_json j;
  j["alpha"] = c.alpha;
  j["d"] = c.d;
  j["prediction"] = 2.0 - (c.alpha - 2.0) * c.d / 2.0;
  j["replicates"] = c.replicates;
  j["usable"] = static_cast<int>(slopes.size());
  j["median_slope"] = slopes.empty() ? std::numeric_limits<double>::quiet_NaN()
                                     : median_of(slopes);
  j["hierarchy_k_max"] = k_max;
  const std::string sum_path = (dir / "dimension_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});

  finish_record(rec, c);
  return rec;
}

RunRecord run_capacity(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::capacity);
  const fs::path dir(c.out);
  Stopwatch clock;

  const CovarianceModel m = make_covariance_model(spectrum_for(c));
  const Cap cap = config_cap(c);
  const CapacityEstimate est = capacity_estimate(m, c.d, cap, c.tilts);
  rec.timings.push_back({"capacity", clock.lap()});

  const std::string trace_path = (dir / "energy_trace.csv").string();
  guard_io([&] { save_energy_trace_csv(est.energies.front(), trace_path); });
  stamp_csv(trace_path, c);
  rec.outputs.push_back({"energy_trace", trace_path});

  const std::vector<double> alphas =
      c.theory_alphas.empty() ? std::vector<double>{c.alpha} : c.theory_alphas;
  const std::vector<int> ds = c.theory_ds.empty() ? std::vector<int>{c.d} : c.theory_ds;
  const std::vector<ConsistencyRow> grid_rows =
      consistency_grid(alphas, ds, c.cap_radius, c.l_max);
  rec.timings.push_back({"consistency", clock.lap()});

  ordered_json fam = ordered_json::array();
  for (std::size_t i = 0; i < est.tilts.size(); ++i) {
    fam.push_back({{"tilt", est.tilts[i]},
                   {"status", status_name(est.energies[i].status)},
                   {"energy", est.energies[i].value}});
  }
  ordered_json cons = ordered_json::array();
  bool all_consistent = true;
  for (const auto& row : grid_rows) {
    cons.push_back({{"alpha", row.alpha},
                    {"d", row.d},
                    {"margin", row.margin},
                    {"criterion", row.criterion},
                    {"integrable", row.integrable},
                    {"capacity_positive", row.capacity_positive},
                    {"consistent", row.consistent}});
    all_consistent = all_consistent && row.consistent;
  }
  ordered_json j;
  j["capacity"] = est.value;
  j["best_tilt"] = est.best_tilt;
  j["family"] = std::move(fam);
  j["consistency"] = std::move(cons);
  j["all_consistent"] = all_consistent;
  const std::string cap_path = (dir / "capacity.json").string();
  write_json(cap_path, std::move(j), c);
  rec.outputs.push_back({"capacity", cap_path});

  if (!all_consistent)
    rec.warnings.push_back("hitting criterion, integrability, and capacity disagree "
                           "on at least one grid cell");

  finish_record(rec, c);
  return rec;
}

RunRecord run_hitting(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::hitting);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const IsoLatGrid grid = make_grid(c.n_rows, c.n_lon);
  const Cap cap = config_cap(c);
  const std::vector<double> sched = geometric_eps_schedule(c.eps0, c.eps_count, c.eps_ratio);
  const std::vector<int> ds = c.theory_ds.empty() ? std::vector<int>{c.d} : c.theory_ds;

  std::vector<HittingFrequencyTable> tables;
  tables.reserve(ds.size());
  for (int d : ds) {
    const Eigen::VectorXd t = level_vector(c, d);
    tables.push_back(hitting_probability_mc(s, d, cap, t, sched, c.replicates, grid, c.seed));
    const std::string path =
        (dir / ("hitting_frequencies_d" + std::to_string(d) + ".csv")).string();
    guard_io([&] { save_frequency_table_csv(tables.back(), path); });
    stamp_csv(path, c);
    rec.outputs.push_back({"frequencies_d" + std::to_string(d), path});
  }
  rec.timings.push_back({"monte_carlo", clock.lap()});

  bool monotone = true;
  for (std::size_t di = 1; di < tables.size(); ++di) {
    for (std::size_t e = 0; e < sched.size(); ++e) {
      if (tables[di].rows[e].hits > tables[di - 1].rows[e].hits) monotone = false;
    }
  }
  ordered_json j;
  j["ds"] = ds;
  j["eps"] = sched;
  ordered_json per_d = ordered_json::array();
  for (std::size_t di = 0; di < tables.size(); ++di) {
    std::vector<double> freqs;
    for (const auto& row : tables[di].rows) freqs.push_back(row.freq);
    per_d.push_back({{"d", ds[di]},
                     {"freq", freqs},
                     {"trend", trend_name(tables[di].trend)}});
  }
  j["tables"] = std::move(per_d);
  j["nonincreasing_in_d"] = monotone;
  j["replicates"] = c.replicates;
  const std::string sum_path = (dir / "hitting_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});

  finish_record(rec, c);
  return rec;
}

RunRecord run_oscillation_tail(const ExperimentConfig& c, OscillationTailResult* result) {
  RunRecord rec = begin_record(c, Command::oscillation_tail);
  const fs::path dir(c.out);
  Stopwatch clock;

  const double beta = c.band_beta == 0.0 ? default_beta(c.alpha) : c.band_beta;
  const double r = c.band_r;
  struct BandDef {
    double b = 0.0;
    int l = 0, u = 0;
  };
  std::vector<BandDef> defs;
  for (double b : c.band_b_sweep) {
    BandDef def{b, band_lower(r, b, beta), band_upper(r, b, beta)};
    if (def.u > c.l_max)
      throw ConfigError("spectrum.l_max: band.b_sweep needs l_max >= " +
                        std::to_string(def.u) + " to resolve the upper band edge at b = " +
                        std::to_string(b));
    defs.push_back(def);
  }

  const PowerSpectrum s = spectrum_for(c);
  const SpherePoint center = make_point(c.cap_colat, c.cap_lon);
  const std::vector<SpherePoint> pts = cap_points(center, r, 48);
  const Cap osc_cap = make_cap(center, std::min(kPi, 1.001 * r));

  const int reps = c.replicates;
  std::vector<double> full_osc(static_cast<std::size_t>(reps));
  std::vector<std::vector<double>> band_osc(defs.size(),
                                            std::vector<double>(static_cast<std::size_t>(reps)));
  for_each_replicate(reps, c.threads, [&](int rep) {
    const std::uint64_t rep_seed = c.seed + static_cast<std::uint64_t>(rep);
    const FieldSample full = vector_field(s, c.d, 0, c.l_max, pts, rep_seed);
    full_osc[static_cast<std::size_t>(rep)] = oscillation(full, osc_cap);
    for (std::size_t bi = 0; bi < defs.size(); ++bi) {
      FieldSample res;
      res.points = pts;
      res.values.resize(static_cast<Eigen::Index>(pts.size()), c.d);
      for (int k = 0; k < c.d; ++k) {
        const HarmonicCoefficients coeff = sample_coefficients(s, 0, c.l_max, rep_seed, k);
        const FieldSample one = evaluate_field(band_stop(coeff, defs[bi].l, defs[bi].u), pts);
        res.values.col(k) = one.values.col(0);
      }
      res.seed = rep_seed;
      res.spectrum_hash = full.spectrum_hash;
      band_osc[bi][static_cast<std::size_t>(rep)] = oscillation(res, osc_cap);
    }
  });
  rec.timings.push_back({"replicates", clock.lap()});

  OscillationTailResult out;
  out.full_min = *std::min_element(full_osc.begin(), full_osc.end());
  {
    std::vector<double> grid_u = quantile_grid(full_osc, 10, 0.50, 0.95);
    out.full_fit = fit_log_tail(tail_curve(full_osc, grid_u));
    grid_u.insert(grid_u.begin(), 0.95 * out.full_min);  // probability-1 anchor row
    out.full_curve = tail_curve(full_osc, grid_u);
  }
  const int n_batches = 4;
  const int batch_len = reps / n_batches;
  for (std::size_t bi = 0; bi < defs.size(); ++bi) {
    BandTail tail;
    tail.b = defs[bi].b;
    tail.l = defs[bi].l;
    tail.u = defs[bi].u;
    std::vector<double> grid_u = quantile_grid(band_osc[bi], 10, 0.50, 0.95);
    tail.pooled = fit_log_tail(tail_curve(band_osc[bi], grid_u));
    grid_u.insert(grid_u.begin(), 0.95 * *std::min_element(band_osc[bi].begin(),
                                                           band_osc[bi].end()));
    tail.curve = tail_curve(band_osc[bi], grid_u);
    std::vector<double> slopes;
    for (int batch = 0; batch < n_batches; ++batch) {
      const auto begin = band_osc[bi].begin() + static_cast<std::ptrdiff_t>(batch) * batch_len;
      std::vector<double> chunk(begin, batch == n_batches - 1 ? band_osc[bi].end()
                                                              : begin + batch_len);
      const std::vector<double> bu = quantile_grid(chunk, 8, 0.50, 0.90);
      const LogTailFit fit = fit_log_tail(tail_curve(chunk, bu));
      tail.batches.push_back(fit);
      slopes.push_back(fit.slope);
    }
    tail.median_slope = median_of(slopes);
    out.bands.push_back(std::move(tail));
  }
  out.slope_monotone = true;
  for (std::size_t bi = 1; bi < out.bands.size(); ++bi) {
    if (!(std::abs(out.bands[bi].median_slope) > std::abs(out.bands[bi - 1].median_slope)))
      out.slope_monotone = false;
  }
  rec.timings.push_back({"fits", clock.lap()});

  std::ostringstream curves;
  curves << stamp_line(c) << "family,b,u,prob,n\n";
  curves.precision(17);
  for (std::size_t i = 0; i < out.full_curve.u.size(); ++i)
    curves << "full,0," << out.full_curve.u[i] << ',' << out.full_curve.prob[i] << ','
           << out.full_curve.n << '\n';
  for (const auto& band : out.bands)
    for (std::size_t i = 0; i < band.curve.u.size(); ++i)
      curves << "band_residual," << band.b << ',' << band.curve.u[i] << ','
             << band.curve.prob[i] << ',' << band.curve.n << '\n';
  const std::string curves_path = (dir / "tail_curves.csv").string();
  write_text(curves_path, curves.str());
  rec.outputs.push_back({"curves", curves_path});

  std::ostringstream fits;
  fits << stamp_line(c) << "family,b,batch,slope,intercept,r2,points\n";
  fits.precision(17);
  fits << "full,0,-1," << out.full_fit.slope << ',' << out.full_fit.intercept << ','
       << out.full_fit.r2 << ',' << out.full_fit.points << '\n';
  for (const auto& band : out.bands) {
    fits << "band_residual," << band.b << ",-1," << band.pooled.slope << ','
         << band.pooled.intercept << ',' << band.pooled.r2 << ',' << band.pooled.points
         << '\n';
    for (std::size_t batch = 0; batch < band.batches.size(); ++batch) {
      const LogTailFit& f = band.batches[batch];
      fits << "band_residual," << band.b << ',' << batch << ',' << f.slope << ','
           << f.intercept << ',' << f.r2 << ',' << f.points << '\n';
    }
  }
  const std::string fits_path = (dir / "tail_fits.csv").string();
  write_text(fits_path, fits.str());
  rec.outputs.push_back({"fits", fits_path});

  ordered_json j;
  j["r"] = r;
  j["beta"] = beta;
  j["full"] = {{"slope", out.full_fit.slope},
               {"r2", out.full_fit.r2},
               {"min_oscillation", out.full_min}};
  ordered_json bands = ordered_json::array();
  for (const auto& band : out.bands) {
    std::vector<double> slopes;
    for (const auto& f : band.batches) slopes.push_back(f.slope);
    bands.push_back({{"b", band.b},
                     {"l", band.l},
                     {"u", band.u},
                     {"median_slope", band.median_slope},
                     {"batch_slopes", slopes}});
  }
  j["bands"] = std::move(bands);
  j["slope_monotone"] = out.slope_monotone;
  j["replicates"] = reps;
  const std::string sum_path = (dir / "oscillation_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});

  if (!out.slope_monotone)
    rec.warnings.push_back("band residual tail slopes are not monotone across b_sweep");
  if (result) *result = std::move(out);

  finish_record(rec, c);
  return rec;
}

RunRecord run_smooth_event(const ExperimentConfig& c, SmoothEventResult* result) {
  RunRecord rec = begin_record(c, Command::smooth_event);
  const fs::path dir(c.out);
  Stopwatch clock;

  const PowerSpectrum s = spectrum_for(c);
  const IsoLatGrid grid = make_grid(c.n_rows, c.n_lon);
  const double r0 = c.smooth_r0;

  // Candidate radii r0 ratio^k inside (r0^2, r0), usable when the ball
  // catches at least two grid points.
  std::vector<double> candidates;
  double rr = r0;
  for (int k = 0; k < c.radius_count; ++k) {
    rr *= c.radius_ratio;
    if (!(rr > r0 * r0)) break;
    candidates.push_back(rr);
  }
  if (candidates.empty())
    throw ConfigError("radii: no schedule entry falls inside (r0^2, r0); "
                      "raise radii.count or the ratio");

  const SpherePoint target = make_point(c.cap_colat, c.cap_lon);
  std::int64_t center_idx = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.n_rows; ++i) {
    for (int jj = 0; jj < grid.n_lon; ++jj) {
      const double dist = geodesic_distance(grid.point(i, jj), target);
      if (dist < best_dist) {
        best_dist = dist;
        center_idx = grid.index(i, jj);
      }
    }
  }
  const SpherePoint x = grid.point(static_cast<int>(center_idx / grid.n_lon),
                                   static_cast<int>(center_idx % grid.n_lon));

  std::vector<std::int64_t> in_ball;  // grid indices ordered by distance to x
  std::vector<double> dists;
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    const double dist = geodesic_distance(
        grid.point(static_cast<int>(i / grid.n_lon), static_cast<int>(i % grid.n_lon)), x);
    if (dist <= candidates.front()) {
      in_ball.push_back(i);
      dists.push_back(dist);
    }
  }
  std::vector<std::size_t> order(in_ball.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return dists[a] < dists[b]; });

  std::vector<double> radii;
  std::vector<std::size_t> prefix;  // points within each usable radius
  for (double cand : candidates) {
    std::size_t count = 0;
    while (count < order.size() && dists[order[count]] <= cand) ++count;
    if (count >= 2) {
      radii.push_back(cand);
      prefix.push_back(count);
    }
  }
  if (radii.empty())
    throw ConfigError("smooth.r0: no radius in (r0^2, r0) catches two grid points "
                      "at this resolution; refine the grid");

  // Both event conditions live at the gauge scale of the probe radius, so
  // the counting bandwidth follows it: the level cannot be resolved sharper
  // than the field's own oscillation inside the ball.
  const GaugeFunction g{c.alpha, c.d};
  std::vector<double> osc_bound(radii.size()), lt_bound(radii.size()), eps_lt(radii.size());
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    osc_bound[ri] = w_gauge(radii[ri], c.alpha);
    lt_bound[ri] = phi_gauge(radii[ri], g);
    eps_lt[ri] = 0.5 * osc_bound[ri];
  }

  const int reps = c.replicates;
  const auto n_c = c.c_grid.size();
  std::vector<std::uint8_t> hits(n_c * static_cast<std::size_t>(reps), 0);
  for_each_replicate(reps, c.threads, [&](int rep) {
    const FieldSample f =
        vector_field(s, c.d, 0, c.l_max, grid, c.seed + static_cast<std::uint64_t>(rep), 1);
    const Eigen::VectorXd tx = f.values.row(center_idx).transpose();
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      double osc = 0.0;
      for (std::size_t p = 0; p < prefix[ri]; ++p) {
        const auto row = static_cast<Eigen::Index>(in_ball[order[p]]);
        osc = std::max(osc, (f.values.row(row).transpose() - tx).norm());
      }
      const LocalTimeEstimate lt =
          local_time_estimate(f, tx, Region::ball(make_cap(x, radii[ri])), eps_lt[ri]);
      for (std::size_t ci = 0; ci < n_c; ++ci) {
        const double cc = c.c_grid[ci];
        if (osc <= 2.0 * cc * osc_bound[ri] && lt.value > (kPi / cc) * lt_bound[ri])
          hits[ci * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)] = 1;
      }
    }
  });
  rec.timings.push_back({"replicates", clock.lap()});

  SmoothEventResult out;
  out.r0 = r0;
  const double log_r0 = std::log(r0);
  out.guarantee = 1.0 - 1.0 / (log_r0 * log_r0);
  out.radii = radii;
  for (std::size_t ci = 0; ci < n_c; ++ci) {
    SmoothEventRow row;
    row.c = c.c_grid[ci];
    row.replicates = reps;
    for (int rep = 0; rep < reps; ++rep)
      row.successes += hits[ci * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)];
    row.frequency = static_cast<double>(row.successes) / reps;
    out.rows.push_back(row);
  }
  out.best_c = 0.0;
  out.best_frequency = -1.0;
  for (const auto& row : out.rows) {
    if (row.frequency >= out.guarantee) {
      out.best_c = row.c;
      out.best_frequency = row.frequency;
      break;
    }
  }
  if (out.best_frequency < 0.0) {
    for (const auto& row : out.rows) {
      if (row.frequency > out.best_frequency) {
        out.best_frequency = row.frequency;
        out.best_c = row.c;
      }
    }
    rec.warnings.push_back("no constant on the c grid reaches the theoretical frequency " +
                           std::to_string(out.guarantee));
  }

  std::ostringstream csv;
  csv << stamp_line(c) << "c,successes,replicates,frequency\n";
  csv.precision(17);
  for (const auto& row : out.rows)
    csv << row.c << ',' << row.successes << ',' << row.replicates << ',' << row.frequency
        << '\n';
  const std::string csv_path = (dir / "smooth_event.csv").string();
  write_text(csv_path, csv.str());
  rec.outputs.push_back({"frequencies", csv_path});

  ordered_json j;
  j["r0"] = r0;
  j["guarantee"] = out.guarantee;
  j["radii"] = radii;
  j["eps"] = eps_lt;  // counting bandwidth per radius, w(r) / 2
  j["best_c"] = out.best_c;
  j["best_frequency"] = out.best_frequency;
  j["center"] = {{"colat", x.colat}, {"lon", x.lon}};
  const std::string sum_path = (dir / "smooth_event_summary.json").string();
  write_json(sum_path, std::move(j), c);
  rec.outputs.push_back({"summary", sum_path});

  if (result) *result = std::move(out);
  finish_record(rec, c);
  return rec;
}

RunRecord run_verify_theory(const ExperimentConfig& c, TheoryReport* report) {
  RunRecord rec = begin_record(c, Command::verify_theory);
  const fs::path dir(c.out);
  Stopwatch clock;

  const std::vector<double> alphas =
      c.theory_alphas.empty() ? std::vector<double>{c.alpha} : c.theory_alphas;
  const std::vector<int> ds = c.theory_ds.empty() ? std::vector<int>{c.d} : c.theory_ds;

  TheoryReport rep;
  rep.version = kToolkitVersion;
  rep.hash_hex = config_hash_hex(c);
  rep.seed = c.seed;

  // One consistency pass covers integrability and capacity sign for every
  // cell; slope tables are cached per alpha.
  const std::vector<ConsistencyRow> cons = consistency_grid(alphas, ds, c.cap_radius, c.l_max);
  rec.timings.push_back({"consistency", clock.lap()});
  auto cons_row = [&](double alpha, int d) -> const ConsistencyRow& {
    for (const auto& row : cons)
      if (row.alpha == alpha && row.d == d) return row;
    throw std::logic_error("consistency grid missing a cell");
  };

  std::map<double, double> slope_cache;
  auto variogram_slope = [&](double alpha) {
    if (auto it = slope_cache.find(alpha); it != slope_cache.end()) return it->second;
    const int l_fit = 32768;  // resolves the fit window [1e-3, 1e-1]
    const CovarianceTable table =
        tabulate_covariance(make_covariance_model(spectrum_at(alpha, l_fit)));
    std::vector<double> lt, lv;
    for (int i = 0; i < 25; ++i) {
      const double theta = std::exp(std::log(1e-3) + (std::log(1e-1) - std::log(1e-3)) *
                                                         i / 24.0);
      lt.push_back(std::log(theta));
      lv.push_back(std::log(table.variogram(theta)));
    }
    const double slope = fit_line(lt, lv).slope;
    slope_cache[alpha] = slope;
    return slope;
  };

  const IsoLatGrid mc_grid = make_grid(48, 130);
  const PowerSpectrum mc_spectrum_base = spectrum_at(2.5, 64);

  for (double alpha : alphas) {
    const PowerSpectrum s_a = spectrum_at(alpha, c.l_max);
    const CovarianceModel m_a = make_covariance_model(s_a);

    for (int d : ds) {
      TheoryCell cell;
      cell.alpha = alpha;
      cell.d = d;
      cell.hitting_margin = 4.0 - (alpha - 2.0) * d;
      cell.dimension_prediction = 2.0 - (alpha - 2.0) * d / 2.0;
      cell.hitting_possible = cell.hitting_margin > 0.0;

      {
        TheoryCheck chk;
        chk.name = "spectral_normalization";
        chk.expected = 1.0;
        chk.measured = spectrum_variance_sum(s_a);
        chk.tolerance = 1e-12;
        chk.hard = true;
        chk.passed = std::abs(chk.measured - chk.expected) <= chk.tolerance;
        cell.checks.push_back(chk);
      }
      {
        TheoryCheck chk;
        chk.name = "gauge_identity";
        chk.expected = 0.0;
        chk.tolerance = 1e-14;
        chk.hard = true;
        const GaugeFunction g{alpha, d};
        double worst = 0.0;
        for (int i = 0; i < 40; ++i) {
          const double rr = std::exp(std::log(1e-4) +
                                     (std::log(0.3) - std::log(1e-4)) * i / 39.0);
          const double w = w_gauge(rr, alpha);
          worst = std::max(worst,
                           std::abs(phi_gauge(rr, g) * std::pow(w, d) - rr * rr) / (rr * rr));
        }
        chk.measured = worst;
        chk.passed = worst <= chk.tolerance;
        chk.note = "max relative error of phi w^d = r^2 over r in [1e-4, 0.3]";
        cell.checks.push_back(chk);
      }
      {
        TheoryCheck chk;
        chk.name = "variance_identity";
        chk.expected = 0.0;
        chk.tolerance = 1e-10;
        chk.hard = true;
        double worst = 0.0;
        for (int i = 0; i < 40; ++i) {
          const double theta =
              std::exp(std::log(1e-2) + (std::log(3.0) - std::log(1e-2)) * i / 39.0);
          const double p = joint_density(m_a, theta, Eigen::Vector2d::Zero());
          const double lhs = 1.0 / std::pow(2.0 * kPi * p, 2);
          const double cov = covariance(m_a, theta);
          worst = std::max(worst, std::abs(lhs - (1.0 - cov * cov)));
        }
        chk.measured = worst;
        chk.passed = worst <= chk.tolerance;
        chk.note = "max deviation of (2 pi p)^-2 from 1 - C^2 over theta in [1e-2, 3]";
        cell.checks.push_back(chk);
      }
      {
        TheoryCheck chk;
        chk.name = "variogram_slope";
        chk.expected = alpha - 2.0;
        chk.measured = variogram_slope(alpha);
        chk.tolerance = 0.1;
        chk.hard = false;
        chk.passed = std::abs(chk.measured - chk.expected) <= chk.tolerance;
        cell.checks.push_back(chk);
      }
      const ConsistencyRow& row = cons_row(alpha, d);
      {
        TheoryCheck chk;
        chk.name = "integrability_agreement";
        chk.expected = cell.hitting_possible ? 1.0 : 0.0;
        chk.measured = row.integrable ? 1.0 : 0.0;
        chk.tolerance = 0.0;
        chk.hard = true;
        chk.passed = row.integrable == cell.hitting_possible;
        chk.note = "kernel integrability vs the sign of 4 - (alpha - 2) d";
        cell.checks.push_back(chk);
      }
      {
        TheoryCheck chk;
        chk.name = "capacity_sign";
        chk.expected = cell.hitting_possible ? 1.0 : 0.0;
        chk.measured = row.capacity_positive ? 1.0 : 0.0;
        chk.tolerance = 0.0;
        chk.hard = true;
        chk.passed = row.capacity_positive == cell.hitting_possible;
        chk.note = row.capacity_positive ? "positive capacity" : "capacity 0";
        cell.checks.push_back(chk);
      }
      if (std::abs(cell.hitting_margin) >= 1.0) {
        TheoryCheck chk;
        chk.name = "hitting_frequency";
        chk.expected = cell.hitting_possible ? 1.0 : 0.0;
        chk.tolerance = 0.5;
        chk.hard = false;
        const PowerSpectrum s_mc =
            alpha == 2.5 ? mc_spectrum_base : spectrum_at(alpha, 64);
        const HittingFrequencyTable table = hitting_probability_mc(
            s_mc, d, config_cap(c), Eigen::VectorXd::Zero(d),
            geometric_eps_schedule(0.4, 3, 0.5), std::min(c.replicates, 200), mc_grid,
            c.seed);
        double finest = 0.0;
        double finest_eps = std::numeric_limits<double>::infinity();
        for (const auto& row_f : table.rows) {
          if (row_f.eps < finest_eps) {
            finest_eps = row_f.eps;
            finest = row_f.freq;
          }
        }
        chk.measured = finest;
        chk.passed = std::abs(chk.measured - chk.expected) <= chk.tolerance;
        chk.note = "frequency at eps = " + std::to_string(finest_eps) + ", trend " +
                   trend_name(table.trend);
        cell.checks.push_back(chk);
      }

      for (const auto& chk : cell.checks) {
        if (chk.passed) continue;
        if (chk.hard) {
          rep.passed = false;
          rep.warnings.push_back("hard check failed: " + chk.name + " at alpha=" +
                                 std::to_string(alpha) + ", d=" + std::to_string(d));
        } else {
          const double miss = std::abs(chk.measured - chk.expected);
          if (miss > 2.0 * chk.tolerance) {
            rep.passed = false;
            rep.warnings.push_back("statistical check outside twice its tolerance: " +
                                   chk.name + " at alpha=" + std::to_string(alpha) +
                                   ", d=" + std::to_string(d));
          } else {
            rep.warnings.push_back("statistical check missed (within twice tolerance): " +
                                   chk.name + " at alpha=" + std::to_string(alpha) +
                                   ", d=" + std::to_string(d));
          }
        }
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  rec.timings.push_back({"checks", clock.lap()});

  const std::string report_json = theory_report_to_json(rep);
  const auto violations = validate_json_schema(report_json, kTheoryReportSchema);
  if (!violations.empty())
    throw std::logic_error("theory report violates its schema: " + violations.front());

  const std::string json_path = (dir / "theory_report.json").string();
  write_text(json_path, report_json + "\n");
  rec.outputs.push_back({"report", json_path});

  const std::string schema_path = (dir / "report.schema.json").string();
  write_text(schema_path, std::string(kTheoryReportSchema) + "\n");
  rec.outputs.push_back({"schema", schema_path});

  std::ostringstream csv;
  csv << stamp_line(c) << "alpha,d,check,expected,measured,tolerance,passed,hard\n";
  csv.precision(17);
  for (const auto& cell : rep.cells)
    for (const auto& chk : cell.checks)
      csv << cell.alpha << ',' << cell.d << ',' << chk.name << ',' << chk.expected << ','
          << chk.measured << ',' << chk.tolerance << ',' << (chk.passed ? 1 : 0) << ','
          << (chk.hard ? 1 : 0) << '\n';
  const std::string csv_path = (dir / "theory_report.csv").string();
  write_text(csv_path, csv.str());
  rec.outputs.push_back({"report_csv", csv_path});

  rec.passed = rep.passed;
  rec.warnings.insert(rec.warnings.end(), rep.warnings.begin(), rep.warnings.end());
  if (report) *report = std::move(rep);

  finish_record(rec, c);
  return rec;
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_skipped = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_skipped) {
      header_skipped = true;  // first non-comment line is the header
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::vector<fs::path> sorted_matches(const fs::path& dir, const std::string& prefix,
                                     const std::string& suffix) {
  std::vector<fs::path> found;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() >= prefix.size() + suffix.size() &&
          name.compare(0, prefix.size(), prefix) == 0 &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
        found.push_back(entry.path());
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace

RunRecord run_report(const ExperimentConfig& c) {
  RunRecord rec = begin_record(c, Command::report);
  const fs::path dir(c.out);
  Stopwatch clock;

  const auto dim_files = sorted_matches(dir, "dimension_replicates", ".csv");
  const auto hit_files = sorted_matches(dir, "hitting_frequencies_d", ".csv");
  const auto energy_files = sorted_matches(dir, "energy_trace", ".csv");
  if (dim_files.empty() && hit_files.empty() && energy_files.empty())
    throw IoError("report inputs missing in " + c.out +
                  ": expected dimension_replicates*.csv, hitting_frequencies_d*.csv, "
                  "or energy_trace*.csv from prior commands");

  if (!dim_files.empty()) {
    // alpha, d, replicate, slope, std_error (+prediction recomputed)
    struct Row {
      double alpha;
      int d, replicate;
      double slope, std_error;
    };
    std::vector<Row> rows;
    for (const auto& file : dim_files) {
      for (const auto& f : read_csv_rows(file)) {
        if (f.size() < 5) continue;
        rows.push_back({std::stod(f[0]), std::stoi(f[1]), std::stoi(f[2]), std::stod(f[3]),
                        std::stod(f[4])});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.alpha, a.d, a.replicate) < std::tie(b.alpha, b.d, b.replicate);
    });
    std::ostringstream csv;
    csv << stamp_line(c) << "alpha,d,replicate,slope,std_error,prediction\n";
    csv.precision(17);
    for (const auto& r : rows)
      csv << r.alpha << ',' << r.d << ',' << r.replicate << ',' << r.slope << ','
          << r.std_error << ',' << 2.0 - (r.alpha - 2.0) * r.d / 2.0 << '\n';
    const std::string path = (dir / "report_dimension.csv").string();
    write_text(path, csv.str());
    rec.outputs.push_back({"dimension", path});
  } else {
    rec.warnings.push_back("no dimension inputs found");
  }

  if (!hit_files.empty()) {
    struct Row {
      int d;
      double eps, freq, ci_lo, ci_hi;
    };
    std::vector<Row> rows;
    for (const auto& file : hit_files) {
      const std::string stem = file.stem().string();
      const int d = std::stoi(stem.substr(std::string("hitting_frequencies_d").size()));
      for (const auto& f : read_csv_rows(file)) {
        if (f.size() < 6) continue;
        rows.push_back({d, std::stod(f[0]), std::stod(f[3]), std::stod(f[4]),
                        std::stod(f[5])});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.d, a.eps) < std::tie(b.d, b.eps);
    });
    std::ostringstream csv;
    csv << stamp_line(c) << "d,eps,freq,ci_lo,ci_hi\n";
    csv.precision(17);
    for (const auto& r : rows)
      csv << r.d << ',' << r.eps << ',' << r.freq << ',' << r.ci_lo << ',' << r.ci_hi << '\n';
    const std::string path = (dir / "report_hitting.csv").string();
    write_text(path, csv.str());
    rec.outputs.push_back({"hitting", path});
  } else {
    rec.warnings.push_back("no hitting inputs found");
  }

  if (!energy_files.empty()) {
    struct Row {
      std::string source;
      int shell;
      double increment, cumulative;
    };
    std::vector<Row> rows;
    for (const auto& file : energy_files) {
      for (const auto& f : read_csv_rows(file)) {
        if (f.size() < 3) continue;
        rows.push_back({file.stem().string(), std::stoi(f[0]), std::stod(f[1]),
                        std::stod(f[2])});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.source, a.shell) < std::tie(b.source, b.shell);
    });
    std::ostringstream csv;
    csv << stamp_line(c) << "source,shell,increment,cumulative\n";
    csv.precision(17);
    for (const auto& r : rows)
      csv << r.source << ',' << r.shell << ',' << r.increment << ',' << r.cumulative << '\n';
    const std::string path = (dir / "report_energy.csv").string();
    write_text(path, csv.str());
    rec.outputs.push_back({"energy", path});
  } else {
    rec.warnings.push_back("no energy inputs found");
  }

  rec.timings.push_back({"aggregate", clock.lap()});
  finish_record(rec, c);
  return rec;
}

}  // namespace sgf
