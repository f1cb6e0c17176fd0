#include "sgf/capacity.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "sgf/harmonics.hpp"
#include "sgf/level_set.hpp"
#include "sgf/local_time.hpp"
#include "sgf/spectrum.hpp"

namespace sgf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Gauss-Legendre integral of f over [a, b].
template <typename F>
double integrate(const GaussLegendreRule& rule, double a, double b, F&& f) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
    acc += rule.weights[q] * f(mid + half * rule.nodes[q]);
  }
  return half * acc;
}

enum class ShellTail { decaying, grown, mixed };

// The last three consecutive-shell ratios decide the tail: all at or above
// the threshold means the increments have stopped decaying geometrically.
ShellTail classify_shells(const std::vector<double>& inc, double threshold) {
  const std::size_t n = inc.size();
  int above = 0;
  int below = 0;
  for (std::size_t k = n - 3; k < n; ++k) {
    const double prev = inc[k - 1];
    const double ratio = prev > 0.0 ? inc[k] / prev : 0.0;
    if (ratio >= threshold) {
      ++above;
    } else {
      ++below;
    }
  }
  if (above == 3) return ShellTail::grown;
  if (below == 3) return ShellTail::decaying;
  return ShellTail::mixed;
}

void validate_energy_spec(const EnergySpec& spec) {
  if (spec.far_nodes < 8 || spec.angular_nodes < 8) {
    throw std::invalid_argument("energy: need at least 8 quadrature nodes");
  }
  if (spec.shells < 8 || spec.shells > 64) {
    throw std::invalid_argument("energy: shells must lie in [8, 64]");
  }
  if (!(spec.local_split > 0.0) || !(spec.local_split <= 0.25)) {
    throw std::invalid_argument("energy: local_split must lie in (0, 1/4]");
  }
  if (!(spec.ratio_threshold > 0.5) || !(spec.ratio_threshold <= 1.0)) {
    throw std::invalid_argument("energy: ratio_threshold must lie in (0.5, 1]");
  }
}

double wilson_lo(double p, double n, double z) {
  const double denom = 1.0 + z * z / n;
  const double center = (p + 0.5 * z * z / n) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z * z / (n * n)) / denom;
  return std::max(0.0, center - half);
}

double wilson_hi(double p, double n, double z) {
  const double denom = 1.0 + z * z / n;
  const double center = (p + 0.5 * z * z / n) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z * z / (n * n)) / denom;
  return std::min(1.0, center + half);
}

}  // namespace

double phi_kernel(const CovarianceModel& m, double theta, int d,
                  const Eigen::VectorXd& a) {
  if (d < 1) throw std::invalid_argument("phi_kernel: d must be positive");
  if (a.size() != d) {
    throw std::invalid_argument("phi_kernel: level must have d entries");
  }
  double out = 1.0;
  for (int j = 0; j < d; ++j) {
    out *= joint_density(m, theta, Eigen::Vector2d(a[j], a[j]));
  }
  return out;
}

double phi_kernel(const CovarianceModel& m, double theta, int d) {
  if (d < 1) throw std::invalid_argument("phi_kernel: d must be positive");
  if (!(theta > 0.0) || !(theta <= kPi)) {
    throw std::invalid_argument("phi_kernel: theta must lie in (0, pi]");
  }
  if (std::abs(m.var0 - 1.0) > 1e-6) {
    throw std::invalid_argument("phi_kernel: spectrum must have unit variance");
  }
  // sigma^2 (1 - sigma^2/4) = (1 - cov)(1 + cov) without the cancellation of
  // forming 1 - cov^2 directly at small angles.
  const double s2 = variogram(m, theta);
  const double v = s2 * (1.0 - 0.25 * s2);
  if (!(v > 0.0)) throw std::invalid_argument("phi_kernel: singular correlation");
  return std::pow(4.0 * kPi * kPi * v, -0.5 * d);
}

EnergyResult energy(const CovarianceModel& m, int d, const RadialMeasure& mu,
                    const EnergySpec& spec) {
  if (d < 1) throw std::invalid_argument("energy: d must be positive");
  if (!(mu.tilt >= 0.0)) throw std::invalid_argument("energy: tilt must be >= 0");
  validate_energy_spec(spec);

  const CovarianceTable table = tabulate_covariance(m);
  const double r = mu.cap.radius;
  const double beta = mu.tilt;
  const double theta_loc = spec.local_split * r;

  const auto kernel = [&table, d](double theta) {
    const double s2 = table.variogram(theta);
    const double v = s2 * (1.0 - 0.25 * s2);
    return std::pow(4.0 * kPi * kPi * v, -0.5 * d);
  };

  // Normalization c and local pair intensity I2 = int rho^2 dsigma for the
  // surface density rho(s) = c (s/r)^beta.
  const GaussLegendreRule norm_rule = gauss_legendre(64);
  const double j1 = integrate(norm_rule, 0.0, r, [&](double s) {
    return std::pow(s / r, beta) * std::sin(s);
  });
  const double j2 = integrate(norm_rule, 0.0, r, [&](double s) {
    return std::pow(s / r, 2.0 * beta) * std::sin(s);
  });
  const double c = 1.0 / (2.0 * kPi * j1);
  const double i2 = c * c * 2.0 * kPi * j2;

  // Far field: pairs at distance >= theta_loc, exact in the two radii and
  // the longitude gap. psi0 is where the haversine distance crosses
  // theta_loc; pairs whose whole circle lies closer are left to the shells.
  const GaussLegendreRule s_rule = gauss_legendre(spec.far_nodes);
  const GaussLegendreRule psi_rule = gauss_legendre(spec.angular_nodes);
  const int n_s = spec.far_nodes;
  Eigen::VectorXd s_node(n_s), s_weight(n_s), s_sin(n_s), s_rho(n_s);
  for (int i = 0; i < n_s; ++i) {
    s_node[i] = 0.5 * r * (1.0 + s_rule.nodes[i]);
    s_weight[i] = 0.5 * r * s_rule.weights[i];
    s_sin[i] = std::sin(s_node[i]);
    s_rho[i] = c * std::pow(s_node[i] / r, beta);
  }
  const double hav_loc = std::sin(0.5 * theta_loc) * std::sin(0.5 * theta_loc);

  double e_far = 0.0;
  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < n_s; ++j) {
      const double delta = std::abs(s_node[i] - s_node[j]);
      const double sdel = std::sin(0.5 * delta);
      const double hav_del = sdel * sdel;
      const double cross = s_sin[i] * s_sin[j];
      double psi0 = 0.0;
      if (delta < theta_loc) {
        const double arg = (hav_loc - hav_del) / cross;
        if (arg >= 1.0) continue;
        psi0 = 2.0 * std::asin(std::sqrt(std::max(0.0, arg)));
      }
      const double mid = 0.5 * (psi0 + kPi);
      const double half = 0.5 * (kPi - psi0);
      double k_ij = 0.0;
      for (int q = 0; q < spec.angular_nodes; ++q) {
        const double sp = std::sin(0.5 * (mid + half * psi_rule.nodes[q]));
        const double hav = hav_del + cross * sp * sp;
        const double dist = 2.0 * std::asin(std::min(1.0, std::sqrt(hav)));
        k_ij += psi_rule.weights[q] * kernel(dist);
      }
      e_far += 4.0 * kPi * (s_weight[i] * s_rho[i] * s_sin[i]) *
               (s_weight[j] * s_rho[j] * s_sin[j]) * half * k_ij;
    }
  }

  // Near shells against the locally flat pair density 2 pi I2 theta.
  const GaussLegendreRule shell_rule = gauss_legendre(16);
  EnergyResult out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "cap(colat=%.6g, lon=%.6g, r=%.6g), tilt=%.6g",
                mu.cap.center.colat, mu.cap.center.lon, r, beta);
  out.description = buf;
  out.increments.resize(static_cast<std::size_t>(spec.shells));
  out.trace.resize(static_cast<std::size_t>(spec.shells));
  double acc = e_far;
  for (int k = 0; k < spec.shells; ++k) {
    const double hi = std::ldexp(theta_loc, -k);
    const double inc = 2.0 * kPi * i2 *
                       integrate(shell_rule, 0.5 * hi, hi,
                                 [&](double theta) { return kernel(theta) * theta; });
    out.increments[static_cast<std::size_t>(k)] = inc;
    acc += inc;
    out.trace[static_cast<std::size_t>(k)] = acc;
  }

  switch (classify_shells(out.increments, spec.ratio_threshold)) {
    case ShellTail::grown:
      out.status = EnergyStatus::divergent;
      out.value = kInf;
      break;
    case ShellTail::decaying: {
      out.status = EnergyStatus::finite;
      const double last = out.increments.back();
      const double prev = out.increments[out.increments.size() - 2];
      const double rho = prev > 0.0 ? last / prev : 0.0;
      out.value = acc + (rho > 0.0 && rho < 1.0 ? last * rho / (1.0 - rho) : 0.0);
      break;
    }
    case ShellTail::mixed:
      out.status = EnergyStatus::indeterminate;
      out.value = kNan;
      break;
  }
  return out;
}

EnergyResult energy(const CovarianceModel&, int d, const DiscreteMeasure& mu) {
  if (d < 1) throw std::invalid_argument("energy: d must be positive");
  if (mu.points.empty()) throw std::invalid_argument("energy: no atoms");
  if (mu.weights.size() != static_cast<Eigen::Index>(mu.points.size())) {
    throw std::invalid_argument("energy: one weight per atom required");
  }
  if ((mu.weights.array() <= 0.0).any()) {
    throw std::invalid_argument("energy: weights must be positive");
  }
  if (std::abs(mu.weights.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("energy: weights must sum to 1");
  }
  // Every atom pairs with itself at distance 0, where Phi is singular.
  EnergyResult out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "discrete(n=%zu)", mu.points.size());
  out.description = buf;
  out.status = EnergyStatus::divergent;
  out.value = kInf;
  return out;
}

CapacityEstimate capacity_estimate(const CovarianceModel& m, int d, const Cap& cap,
                                   const std::vector<double>& tilts,
                                   const EnergySpec& spec) {
  if (tilts.empty()) throw std::invalid_argument("capacity_estimate: empty tilt family");
  CapacityEstimate out;
  out.tilts = tilts;
  out.energies.reserve(tilts.size());
  double best = kInf;
  std::size_t best_at = tilts.size();
  for (std::size_t k = 0; k < tilts.size(); ++k) {
    out.energies.push_back(energy(m, d, RadialMeasure{cap, tilts[k]}, spec));
    const EnergyResult& e = out.energies.back();
    if (e.status == EnergyStatus::finite && e.value < best) {
      best = e.value;
      best_at = k;
    }
  }
  if (best_at == tilts.size()) {
    out.value = 0.0;
    out.best_tilt = kNan;
  } else {
    out.value = 1.0 / best;
    out.best_tilt = tilts[best_at];
  }
  return out;
}

IntegrabilityResult integrability_test(double alpha, int d, double r) {
  if (!(alpha > 2.0) || !(alpha < 4.0)) {
    throw std::invalid_argument("integrability_test: alpha must lie in (2, 4)");
  }
  if (d < 1) throw std::invalid_argument("integrability_test: d must be positive");
  if (!(r > 0.0) || !(r <= kPi)) {
    throw std::invalid_argument("integrability_test: r must lie in (0, pi]");
  }
  IntegrabilityResult out;
  out.exponent = d * (1.0 - 0.5 * alpha);
  const bool analytic = out.exponent > -2.0;

  const GaussLegendreRule rule = gauss_legendre(16);
  const int shells = 30;
  out.increments.resize(shells);
  for (int k = 0; k < shells; ++k) {
    const double hi = std::ldexp(r, -k);
    out.increments[static_cast<std::size_t>(k)] =
        integrate(rule, 0.5 * hi, hi, [&](double theta) {
          return std::pow(theta, out.exponent) * std::sin(theta);
        });
  }
  const ShellTail tail = classify_shells(out.increments, 0.97);
  if (tail == ShellTail::mixed) {
    throw std::runtime_error("integrability_test: refinement did not classify");
  }
  const bool numeric = tail == ShellTail::decaying;
  if (numeric != analytic) {
    throw std::runtime_error(
        "integrability_test: numeric refinement contradicts the analytic exponent");
  }
  out.integrable = analytic;
  return out;
}

std::vector<ConsistencyRow> consistency_grid(const std::vector<double>& alphas,
                                             const std::vector<int>& ds,
                                             double cap_radius, int l_max,
                                             const EnergySpec& spec) {
  if (alphas.empty() || ds.empty()) {
    throw std::invalid_argument("consistency_grid: empty parameter grid");
  }
  if (!(cap_radius > 0.0) || !(cap_radius <= kPi)) {
    throw std::invalid_argument("consistency_grid: cap radius must lie in (0, pi]");
  }
  const Cap cap = make_cap(make_point(0.5 * kPi, 0.0), cap_radius);
  std::vector<ConsistencyRow> rows;
  rows.reserve(alphas.size() * ds.size());
  for (double alpha : alphas) {
    const CovarianceModel model =
        make_covariance_model(normalize(power_law_spectrum(alpha, l_max)));
    for (int d : ds) {
      ConsistencyRow row;
      row.alpha = alpha;
      row.d = d;
      row.margin = 4.0 - (alpha - 2.0) * d;
      row.criterion = row.margin > 0.0;
      row.integrable = integrability_test(alpha, d, cap_radius).integrable;
      row.capacity_positive = capacity_estimate(model, d, cap, {0.0, 1.0, 2.0, 4.0},
                                                spec)
                                  .value > 0.0;
      row.consistent =
          row.criterion == row.integrable && row.criterion == row.capacity_positive;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string consistency_grid_to_json(const std::vector<ConsistencyRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ConsistencyRow& row : rows) {
    arr.push_back({{"alpha", row.alpha},
                   {"d", row.d},
                   {"margin", row.margin},
                   {"criterion", row.criterion},
                   {"integrable", row.integrable},
                   {"capacity_positive", row.capacity_positive},
                   {"consistent", row.consistent}});
  }
  return arr.dump(2);
}

void save_consistency_grid_json(const std::vector<ConsistencyRow>& rows,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_consistency_grid_json: cannot open " + path);
  out << consistency_grid_to_json(rows) << '\n';
  if (!out) {
    throw std::runtime_error("save_consistency_grid_json: write failed on " + path);
  }
}

std::vector<double> geometric_eps_schedule(double eps0, int n, double ratio) {
  if (!(eps0 > 0.0)) throw std::invalid_argument("geometric_eps_schedule: eps0 <= 0");
  if (n < 1) throw std::invalid_argument("geometric_eps_schedule: need n >= 1");
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    throw std::invalid_argument("geometric_eps_schedule: ratio must lie in (0, 1)");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  double eps = eps0;
  for (int k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] = eps;
    eps *= ratio;
  }
  return out;
}

HittingFrequencyTable hitting_probability_mc(const PowerSpectrum& s, int d,
                                             const Cap& cap, const Eigen::VectorXd& t,
                                             const std::vector<double>& eps_schedule,
                                             int replicates, const IsoLatGrid& grid,
                                             std::uint64_t seed) {
  if (replicates < 100) {
    throw std::invalid_argument("hitting_probability_mc: need replicates >= 100");
  }
  if (d < 1) throw std::invalid_argument("hitting_probability_mc: d must be positive");
  if (t.size() != d) {
    throw std::invalid_argument("hitting_probability_mc: level must have d entries");
  }
  if (eps_schedule.empty()) {
    throw std::invalid_argument("hitting_probability_mc: empty eps schedule");
  }
  double eps_min = kInf;
  for (double eps : eps_schedule) {
    if (!(eps > 0.0)) {
      throw std::invalid_argument("hitting_probability_mc: eps must be positive");
    }
    eps_min = std::min(eps_min, eps);
  }
  if (d >= 2) {
    const double h = std::min(resolution_scale(grid), 0.3);
    if (eps_min < 0.05 * w_gauge(h, s.alpha)) {
      throw std::invalid_argument(
          "hitting_probability_mc: eps under-resolved for this grid");
    }
  }

  const std::size_t n_eps = eps_schedule.size();
  std::vector<int> hits(n_eps, 0);
  for (int rep = 0; rep < replicates; ++rep) {
    const FieldSample f =
        vector_field(s, d, 0, s.l_max(), grid, seed + static_cast<std::uint64_t>(rep));
    for (std::size_t k = 0; k < n_eps; ++k) {
      if (hitting_indicator(f, t, cap, eps_schedule[k])) ++hits[k];
    }
  }

  HittingFrequencyTable out;
  out.replicates = replicates;
  out.seed = seed;
  out.rows.resize(n_eps);
  const double z = 1.959963984540054;  // two-sided 95%
  const double n = static_cast<double>(replicates);
  for (std::size_t k = 0; k < n_eps; ++k) {
    HittingFrequencyRow& row = out.rows[k];
    row.eps = eps_schedule[k];
    row.hits = hits[k];
    row.freq = static_cast<double>(hits[k]) / n;
    row.ci_lo = wilson_lo(row.freq, n, z);
    row.ci_hi = wilson_hi(row.freq, n, z);
  }

  double f_max = 0.0;
  double f_finest = 0.0;
  double finest = kInf;
  for (const HittingFrequencyRow& row : out.rows) {
    f_max = std::max(f_max, row.freq);
    if (row.eps < finest) {
      finest = row.eps;
      f_finest = row.freq;
    }
  }
  if (f_max == 0.0 || f_finest <= 0.25 * f_max) {
    out.trend = HittingTrend::collapsing;
  } else if (f_finest >= 0.8 * f_max) {
    out.trend = HittingTrend::stable;
  } else {
    out.trend = HittingTrend::mixed;
  }
  return out;
}

void save_energy_trace_csv(const EnergyResult& e, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_energy_trace_csv: cannot open " + path);
  out << "shell,increment,cumulative\n";
  out.precision(17);
  for (std::size_t k = 0; k < e.increments.size(); ++k) {
    out << k << ',' << e.increments[k] << ',' << e.trace[k] << '\n';
  }
  if (!out) throw std::runtime_error("save_energy_trace_csv: write failed on " + path);
}

void save_frequency_table_csv(const HittingFrequencyTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_frequency_table_csv: cannot open " + path);
  out << "eps,hits,replicates,freq,ci_lo,ci_hi\n";
  out.precision(17);
  for (const HittingFrequencyRow& row : t.rows) {
    out << row.eps << ',' << row.hits << ',' << t.replicates << ',' << row.freq << ','
        << row.ci_lo << ',' << row.ci_hi << '\n';
  }
  if (!out) {
    throw std::runtime_error("save_frequency_table_csv: write failed on " + path);
  }
}

}  // namespace sgf
