#pragma once
// Occupation measures, the counting local-time estimator, the gauge pair
// (w, phi), upper-density profiles over shrinking caps, and the Monte Carlo
// error of band-limited local times.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "sgf/sphere_geom.hpp"
#include "sgf/spectrum.hpp"
#include "sgf/synthesis.hpp"

namespace sgf {

// Evaluation region: the whole sphere or a geodesic cap.
struct Region {
  bool whole_sphere = true;
  Cap cap{SpherePoint{0.0, 0.0}, kPi};

  static Region sphere() { return Region{}; }
  static Region ball(const Cap& c) { return Region{false, c}; }
};

// Axis-aligned half-open box [lo, hi) in value space, one entry per field
// component. Half-open keeps adjacent boxes additive with no double count.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

// Sum of cell weights over grid points inside the region whose value vector
// lies in the box. Grid samples only. Throws when the region catches no
// grid point or the box dimension disagrees with the component count.
double occupation_measure(const FieldSample& f, const Region& region, const Box& box);

// Twice the covering-radius bound: the scale below which a cap may fall
// between grid points.
double resolution_scale(const IsoLatGrid& grid);

struct LocalTimeEstimate {
  Eigen::VectorXd t;
  Region region;
  double eps = 0.0;
  double value = 0.0;
  double resolution = 0.0;      // resolution_scale of the sample's grid
  bool under_resolved = false;  // eps below the field's per-cell increment scale
};

// Counting estimator (2 eps)^{-d} * occupation of the sup-norm ball at t.
// A bandwidth under the median adjacent-sample increment is flagged, not
// rejected.
LocalTimeEstimate local_time_estimate(const FieldSample& f, const Eigen::VectorXd& t,
                                      const Region& region, double eps);

// Gauges on r in (0, 1/e), where log|log r| > 0:
//   w(r)   = rho_alpha(r / sqrt(log|log r|))
//   phi(r) = r^2 / w(r)^d,  so phi * w^d = r^2 identically.
struct GaugeFunction {
  double alpha = 3.0;
  int d = 1;
};

double w_gauge(double r, double alpha);
double phi_gauge(double r, const GaugeFunction& g);

// Default counting bandwidth 4 w(h) at the grid's resolution scale h
// (clamped into the gauge domain).
double default_bandwidth(const FieldSample& f, double alpha);

// Geometric radius schedule r0 * ratio^k, k = 0..n-1 (the declared stand-in
// for a limit r -> 0).
std::vector<double> radius_schedule(double r0, int n, double ratio = 0.8);

// L(t, D(x, r)) / phi(r) along a decreasing radius schedule; running_max is
// the limsup proxy.
struct DensityProfile {
  std::vector<double> radii;
  std::vector<double> ratios;
  std::vector<double> running_max;
  double eps = 0.0;
};

DensityProfile upper_density_profile(const FieldSample& f, const Eigen::VectorXd& t,
                                     const SpherePoint& x,
                                     const std::vector<double>& radii,
                                     const GaugeFunction& g, double eps = 0.0);

// Monte Carlo second moment of L(T(z), D) - L^{l,u}(T(z), D): the counting
// estimator at the field's own central value, full field versus its [l, u]
// band, same coefficient draws, over independent replicates.
struct BandErrorStats {
  int l = 0;
  int u = 0;
  int replicates = 0;
  double eps = 0.0;
  double second_moment = 0.0;
  double standard_error = 0.0;  // of the second-moment estimate
};

BandErrorStats band_local_time_error_mc(const PowerSpectrum& s, int d, const Cap& cap,
                                        int l, int u, int replicates, double eps,
                                        const IsoLatGrid& grid, std::uint64_t seed);

// CSV exports carry the defining parameters alongside each row.
void save_density_profile_csv(const DensityProfile& p, const GaugeFunction& g,
                              const std::string& path);
void save_band_error_csv(const std::vector<BandErrorStats>& stats,
                         const std::string& path);

}  // namespace sgf
