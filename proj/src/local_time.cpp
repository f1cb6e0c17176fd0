#include "sgf/local_time.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sgf/covariance.hpp"

namespace sgf {

namespace {

bool in_box(const FieldSample& f, Eigen::Index k, const Box& box) {
  for (int c = 0; c < f.components(); ++c) {
    const double v = f.values(k, c);
    if (v < box.lo[c] || v >= box.hi[c]) return false;
  }
  return true;
}

// Median absolute increment between longitude neighbors on the equatorial
// row: the scale a counting bandwidth must dominate to see more than noise.
double increment_scale(const FieldSample& f) {
  const int i = f.grid.n_rows / 2;
  const int n = f.grid.n_lon;
  if (n < 2) return 0.0;
  std::vector<double> jump(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Eigen::Index a = f.grid.index(i, j);
    const Eigen::Index b = f.grid.index(i, (j + 1) % n);
    jump[static_cast<std::size_t>(j)] =
        (f.values.row(a) - f.values.row(b)).cwiseAbs().maxCoeff();
  }
  const auto mid = jump.begin() + jump.size() / 2;
  std::nth_element(jump.begin(), mid, jump.end());
  return *mid;
}

}  // namespace

double occupation_measure(const FieldSample& f, const Region& region, const Box& box) {
  if (!f.on_grid()) {
    throw std::invalid_argument("occupation_measure: requires a grid sample");
  }
  if (box.lo.size() != f.components() || box.hi.size() != f.components()) {
    throw std::invalid_argument("occupation_measure: box dimension mismatch");
  }
  const IsoLatGrid& grid = f.grid;
  double acc = 0.0;
  bool any = false;
  if (region.whole_sphere) {
    any = true;
    for (int i = 0; i < grid.n_rows; ++i) {
      const double wgt = grid.ring_weight(i);
      for (int j = 0; j < grid.n_lon; ++j) {
        if (in_box(f, grid.index(i, j), box)) acc += wgt;
      }
    }
  } else {
    const Eigen::Vector3d cu = region.cap.center.unit();
    const double lo = region.cap.center.colat - region.cap.radius;
    const double hi = region.cap.center.colat + region.cap.radius;
    for (int i = 0; i < grid.n_rows; ++i) {
      const double t = grid.colat(i);
      if (t < lo || t > hi) continue;
      const double wgt = grid.ring_weight(i);
      for (int j = 0; j < grid.n_lon; ++j) {
        if (geodesic_distance<double>(grid.unit(i, j), cu) > region.cap.radius) {
          continue;
        }
        any = true;
        if (in_box(f, grid.index(i, j), box)) acc += wgt;
      }
    }
  }
  if (!any) throw std::invalid_argument("occupation_measure: region holds no grid point");
  return acc;
}

double resolution_scale(const IsoLatGrid& grid) {
  return 2.0 * grid.covering_radius_bound();
}

LocalTimeEstimate local_time_estimate(const FieldSample& f, const Eigen::VectorXd& t,
                                      const Region& region, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("local_time_estimate: eps must be > 0");
  if (t.size() != f.components()) {
    throw std::invalid_argument("local_time_estimate: level dimension mismatch");
  }
  Box ball;
  ball.lo = t.array() - eps;
  ball.hi = t.array() + eps;
  LocalTimeEstimate est;
  est.t = t;
  est.region = region;
  est.eps = eps;
  est.resolution = resolution_scale(f.grid);
  est.under_resolved = eps < increment_scale(f);
  est.value =
      occupation_measure(f, region, ball) / std::pow(2.0 * eps, f.components());
  return est;
}

double w_gauge(double r, double alpha) {
  if (!(r > 0.0) || !(r < std::exp(-1.0))) {
    throw std::invalid_argument("w_gauge: r must lie in (0, 1/e)");
  }
  return rho_alpha(r / std::sqrt(std::log(-std::log(r))), alpha);
}

double phi_gauge(double r, const GaugeFunction& g) {
  if (g.d < 1) throw std::invalid_argument("phi_gauge: d must be >= 1");
  return r * r / std::pow(w_gauge(r, g.alpha), g.d);
}

double default_bandwidth(const FieldSample& f, double alpha) {
  if (!f.on_grid()) {
    throw std::invalid_argument("default_bandwidth: requires a grid sample");
  }
  const double h = std::min(resolution_scale(f.grid), 0.3);
  return 4.0 * w_gauge(h, alpha);
}

std::vector<double> radius_schedule(double r0, int n, double ratio) {
  if (!(r0 > 0.0) || n < 1 || !(ratio > 0.0) || !(ratio < 1.0)) {
    throw std::invalid_argument("radius_schedule: need r0 > 0, n >= 1, ratio in (0,1)");
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  double r = r0;
  for (int k = 0; k < n; ++k, r *= ratio) out[static_cast<std::size_t>(k)] = r;
  return out;
}

DensityProfile upper_density_profile(const FieldSample& f, const Eigen::VectorXd& t,
                                     const SpherePoint& x,
                                     const std::vector<double>& radii,
                                     const GaugeFunction& g, double eps) {
  if (radii.empty()) throw std::invalid_argument("upper_density_profile: no radii");
  const double res = resolution_scale(f.grid);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > res) || !(radii[k] < std::exp(-1.0))) {
      throw std::invalid_argument(
          "upper_density_profile: radius outside (resolution, 1/e)");
    }
    if (k > 0 && !(radii[k] < radii[k - 1])) {
      throw std::invalid_argument("upper_density_profile: radii must decrease");
    }
  }
  DensityProfile p;
  p.eps = (eps > 0.0) ? eps : default_bandwidth(f, g.alpha);
  p.radii = radii;
  double run = 0.0;
  for (double r : radii) {
    const auto est =
        local_time_estimate(f, t, Region::ball(make_cap(x, r)), p.eps);
    const double ratio = est.value / phi_gauge(r, g);
    p.ratios.push_back(ratio);
    run = std::max(run, ratio);
    p.running_max.push_back(run);
  }
  return p;
}

BandErrorStats band_local_time_error_mc(const PowerSpectrum& s, int d, const Cap& cap,
                                        int l, int u, int replicates, double eps,
                                        const IsoLatGrid& grid, std::uint64_t seed) {
  if (replicates < 30) {
    throw std::invalid_argument("band_local_time_error_mc: need >= 30 replicates");
  }
  if (!(1 <= l && l < u && u <= s.l_max())) {
    throw std::invalid_argument("band_local_time_error_mc: need 1 <= l < u <= l_max");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("band_local_time_error_mc: eps must be > 0");
  }
  const Region region = Region::ball(cap);
  // Nearest grid point to the cap center carries the level T(z).
  const int iz = std::clamp(
      static_cast<int>(std::floor(cap.center.colat * grid.n_rows / kPi)), 0,
      grid.n_rows - 1);
  const int jz = static_cast<int>(std::llround(cap.center.lon * grid.n_lon /
                                               (2.0 * kPi))) %
                 grid.n_lon;
  const Eigen::Index kz = grid.index(iz, jz);

  double acc = 0.0, acc2 = 0.0;
  for (int rep = 0; rep < replicates; ++rep) {
    const std::uint64_t rep_seed = seed + static_cast<std::uint64_t>(rep);
    FieldSample full;
    FieldSample banded;
    full.grid = grid;
    banded.grid = grid;
    full.values.resize(grid.size(), d);
    banded.values.resize(grid.size(), d);
    for (int k = 0; k < d; ++k) {
      const HarmonicCoefficients coef =
          sample_coefficients(s, 0, s.l_max(), rep_seed, k);
      const FieldSample fc = evaluate_field(coef, grid);
      const FieldSample bc = evaluate_field(band_pass(coef, l, u), grid);
      full.values.col(k) = fc.values.col(0);
      banded.values.col(k) = bc.values.col(0);
    }
    const Eigen::VectorXd level = full.values.row(kz).transpose();
    const double err = local_time_estimate(full, level, region, eps).value -
                       local_time_estimate(banded, level, region, eps).value;
    const double e2 = err * err;
    acc += e2;
    acc2 += e2 * e2;
  }
  BandErrorStats out;
  out.l = l;
  out.u = u;
  out.replicates = replicates;
  out.eps = eps;
  out.second_moment = acc / replicates;
  out.standard_error = std::sqrt(
      std::max(0.0, acc2 / replicates - out.second_moment * out.second_moment) /
      replicates);
  return out;
}

void save_density_profile_csv(const DensityProfile& p, const GaugeFunction& g,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_density_profile_csv: cannot open " + path);
  out.precision(17);
  out << "radius,ratio,running_max,alpha,d,eps\n";
  for (std::size_t k = 0; k < p.radii.size(); ++k) {
    out << p.radii[k] << "," << p.ratios[k] << "," << p.running_max[k] << ","
        << g.alpha << "," << g.d << "," << p.eps << "\n";
  }
  if (!out) throw std::runtime_error("save_density_profile_csv: write failed");
}

void save_band_error_csv(const std::vector<BandErrorStats>& stats,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_band_error_csv: cannot open " + path);
  out.precision(17);
  out << "l,u,replicates,eps,second_moment,standard_error\n";
  for (const auto& s : stats) {
    out << s.l << "," << s.u << "," << s.replicates << "," << s.eps << ","
        << s.second_moment << "," << s.standard_error << "\n";
  }
  if (!out) throw std::runtime_error("save_band_error_csv: write failed");
}

}  // namespace sgf
