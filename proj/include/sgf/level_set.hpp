#pragma once
// Finite-resolution level sets: extraction with sub-grid edge refinement,
// box-counting dimension over the nested Voronoi hierarchy, and the gauge
// premeasure compared against local time.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgf/local_time.hpp"
#include "sgf/sphere_geom.hpp"
#include "sgf/synthesis.hpp"

namespace sgf {

// Grid edge whose field values straddle the level; the midpoint is taken in
// grid coordinates (mean colatitude or mean longitude), not along the
// geodesic. Only produced for one-component fields.
struct EdgeCrossing {
  std::int64_t a = 0;
  std::int64_t b = 0;
  SpherePoint midpoint;
};

struct LevelSetEstimate {
  Eigen::VectorXd t;
  double eps = 0.0;
  IsoLatGrid grid;
  std::uint64_t seed = 0;
  std::uint64_t spectrum_hash = 0;
  int band_lo = 0;
  int band_hi = 0;

  std::vector<std::int64_t> member_indices;  // |T(x) - t|_inf <= eps
  std::vector<EdgeCrossing> crossings;       // sign-change edges, d = 1

  bool empty() const { return member_indices.empty() && crossings.empty(); }
  std::int64_t size() const {
    return static_cast<std::int64_t>(member_indices.size()) +
           static_cast<std::int64_t>(crossings.size());
  }
  // Member grid points followed by crossing midpoints.
  std::vector<SpherePoint> points() const;
};

// All grid points within eps of the level in the max norm; for d = 1 also
// the midpoints of grid edges where T - t changes sign. Requires a grid
// sample and eps > 0. An empty result is valid.
LevelSetEstimate extract_level_set(const FieldSample& f, const Eigen::VectorXd& t,
                                   double eps);

// Distinct hierarchy cells holding at least one member point or crossing
// midpoint, per level (sorted cell indices). The hierarchy must be built on
// the sample's grid.
std::vector<std::vector<std::int32_t>> occupied_cells(const LevelSetEstimate& ls,
                                                      const VoronoiHierarchy& h);

std::vector<std::int64_t> occupied_cell_counts(const LevelSetEstimate& ls,
                                               const VoronoiHierarchy& h);

struct DimensionFit {
  double slope = 0.0;
  double std_error = 0.0;
  std::vector<int> levels;
  std::vector<std::int64_t> counts;
  std::vector<double> residuals;  // of log count against the fitted line
};

// Least-squares slope of log(occupied count) against k log 2 over levels
// k_lo..k_hi. Requires a nonempty set and at least 3 levels.
DimensionFit box_dimension(const LevelSetEstimate& ls, const VoronoiHierarchy& h,
                           int k_lo, int k_hi);

// Saturation-free fit window: levels whose occupied count is >= 10 and at
// most half the number of set points. Returns {k_lo, k_hi}; throws when
// fewer than 3 consecutive levels qualify.
std::pair<int, int> dimension_level_range(const LevelSetEstimate& ls,
                                          const VoronoiHierarchy& h);

// Sum of phi(cell diameter) over occupied level-k cells, diameter taken as
// the construction bound 2^{1-k}. Requires k >= 3 so the diameter lies in
// the gauge domain. Empty set gives 0.
double phi_premeasure(const LevelSetEstimate& ls, const VoronoiHierarchy& h,
                      int level, const GaugeFunction& g);

// True iff the level set at tolerance eps meets the cap: a member grid point
// or (d = 1) a sign-change midpoint within geodesic distance cap.radius.
bool hitting_indicator(const FieldSample& f, const Eigen::VectorXd& t,
                       const Cap& cap, double eps);

// Resolution-matched level tolerance 2 k_osc w(h) at the grid scale
// h = min(resolution_scale, 0.3).
double default_level_tolerance(const IsoLatGrid& grid, double alpha, double k_osc);

// Empirical oscillation constant: median over a deterministic spiral of probe
// caps of radius h of osc(T, cap) / w(h). Caps too small to hold two samples
// are skipped; more than half must survive.
double fit_oscillation_constant(const FieldSample& f, double alpha,
                                int n_caps = 64);

// colat,lon,origin rows; origin is "grid" or "edge".
void save_level_set_csv(const LevelSetEstimate& ls, const std::string& path);

std::string dimension_fit_to_json(const DimensionFit& fit);
void save_dimension_fit_json(const DimensionFit& fit, const std::string& path);

}  // namespace sgf
