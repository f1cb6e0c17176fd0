#pragma once
// Hitting diagnostics for the vector field (T_1, ..., T_d): the product
// density kernel Phi, energy integrals of measures supported on caps with a
// refinement trace that resolves the small-angle singularity, capacity
// estimates over a radial density family, the small-angle integrability
// criterion, and Monte Carlo hitting frequencies.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgf/covariance.hpp"
#include "sgf/sphere_geom.hpp"
#include "sgf/synthesis.hpp"

namespace sgf {

// Phi(theta; a) = prod_j p(theta; a_j), one bivariate density factor
// p(theta; a) at (a, a) per component. The a = 0 overload evaluates
// [2 pi sqrt(1 - cov^2)]^{-d} through the variogram, so the identity
// [2 pi p(theta; 0)]^{-2} = 1 - cov(theta)^2 holds to rounding. Requires a
// unit-variance spectrum and theta in (0, pi].
double phi_kernel(const CovarianceModel& m, double theta, int d,
                  const Eigen::VectorXd& a);
double phi_kernel(const CovarianceModel& m, double theta, int d);

// Probability measure on a cap with surface density proportional to
// (s / radius)^tilt, s the geodesic distance from the center. tilt = 0 is
// cap-uniform; positive tilt pushes mass toward the rim.
struct RadialMeasure {
  Cap cap;
  double tilt = 0.0;
};

// Finitely many atoms. Each atom pairs with itself at distance 0, where the
// kernel is singular, so the energy of any discrete measure is infinite.
struct DiscreteMeasure {
  std::vector<SpherePoint> points;
  Eigen::VectorXd weights;  // positive, sum 1
};

enum class EnergyStatus { finite, divergent, indeterminate };

// Double integral of Phi(d(x, y)) against mu x mu. increments[k] is the
// contribution of the dyadic distance shell (theta_loc 2^{-k-1},
// theta_loc 2^{-k}]; trace[k] is the far field plus shells 0..k, so the
// trace is nondecreasing by construction. On the power-law continuation the
// shell ratio tends to 2^{gamma - 2} with gamma = d (alpha - 2) / 2, which
// is what the classification reads off (see EnergySpec).
struct EnergyResult {
  std::string description;
  EnergyStatus status = EnergyStatus::indeterminate;
  double value = 0.0;              // +inf when divergent, NaN when indeterminate
  std::vector<double> increments;  // near shells, coarse to fine
  std::vector<double> trace;
};

// Quadrature controls. Distances below local_split * radius are integrated
// against the locally flat pair density 2 pi I2 theta (I2 the integrated
// squared density), distances above by exact Gauss rules in the two radii
// and the longitude gap. The rim band of width local_split * radius is not
// corrected for, which biases finite values by O(local_split) of the near
// field. Classification: the integral is declared divergent when the last
// three shell ratios all reach ratio_threshold (geometric decay has stopped;
// the boundary gamma = 2 approaches ratio 1 from below, hence a threshold
// slightly under 1), finite when all three stay below it (the geometric
// tail is then appended to the value), and indeterminate otherwise.
struct EnergySpec {
  int far_nodes = 48;
  int angular_nodes = 48;
  int shells = 26;
  double local_split = 1.0 / 64.0;
  double ratio_threshold = 0.97;
};

// Requires a power-law model (the covariance table supplies the
// sub-resolution continuation that the shells refine into).
EnergyResult energy(const CovarianceModel& m, int d, const RadialMeasure& mu,
                    const EnergySpec& spec = {});
EnergyResult energy(const CovarianceModel& m, int d, const DiscreteMeasure& mu);

// 1 / min energy over the tilt family; 0 when every member diverges. The
// family bound is one-sided: the reported value is a lower bound on the
// capacity up to quadrature error.
struct CapacityEstimate {
  double value = 0.0;
  double best_tilt = 0.0;  // NaN when value == 0
  std::vector<double> tilts;
  std::vector<EnergyResult> energies;
};

CapacityEstimate capacity_estimate(const CovarianceModel& m, int d, const Cap& cap,
                                   const std::vector<double>& tilts = {0.0, 1.0, 2.0,
                                                                       4.0},
                                   const EnergySpec& spec = {});

// Small-angle integrability of theta^{d (1 - alpha/2)} sin(theta) on (0, r]:
// the analytic rule d (alpha - 2) < 4 and a dyadic refinement of the
// integral, classified by the same shell-ratio rule as energy(). The two
// must agree; disagreement means the quadrature is broken and throws.
struct IntegrabilityResult {
  double exponent = 0.0;  // d (1 - alpha / 2)
  bool integrable = false;
  std::vector<double> increments;  // shells of the numeric refinement
};

IntegrabilityResult integrability_test(double alpha, int d, double r);

// One cell of the hitting consistency check: the sign of 4 - (alpha - 2) d,
// the integrability classification, and positivity of the capacity estimate
// for a cap of the given radius must all agree.
struct ConsistencyRow {
  double alpha = 0.0;
  int d = 0;
  double margin = 0.0;  // 4 - (alpha - 2) d
  bool criterion = false;
  bool integrable = false;
  bool capacity_positive = false;
  bool consistent = false;
};

std::vector<ConsistencyRow> consistency_grid(const std::vector<double>& alphas,
                                             const std::vector<int>& ds,
                                             double cap_radius, int l_max,
                                             const EnergySpec& spec = {});
std::string consistency_grid_to_json(const std::vector<ConsistencyRow>& rows);
void save_consistency_grid_json(const std::vector<ConsistencyRow>& rows,
                                const std::string& path);

// n tolerances eps0 * ratio^k, k = 0..n-1, descending.
std::vector<double> geometric_eps_schedule(double eps0, int n, double ratio = 0.5);

enum class HittingTrend { stable, collapsing, mixed };

struct HittingFrequencyRow {
  double eps = 0.0;
  int hits = 0;
  double freq = 0.0;
  double ci_lo = 0.0;  // Wilson 95% interval
  double ci_hi = 0.0;
};

// Share of replicate draws whose level set at tolerance eps meets the cap,
// one row per eps in schedule order. Replicate r draws the d-component
// field at seed + r, components counter-nested, so for fixed seed the hit
// indicator is pointwise nonincreasing in d. trend compares the frequency
// at the finest eps against the best row: stable when it retains 80%,
// collapsing when it drops below 25% (or nothing was hit at all).
struct HittingFrequencyTable {
  std::vector<HittingFrequencyRow> rows;
  HittingTrend trend = HittingTrend::mixed;
  int replicates = 0;
  std::uint64_t seed = 0;
};

// Requires replicates >= 100. For d >= 2 every eps must stay above
// 0.05 w(h) at the grid scale h; below that the grid cannot distinguish a
// near miss from a miss and the frequency collapses as a pure resolution
// artifact (d = 1 is exempt: sign-change crossings resolve the level
// exactly). Throws invalid_argument on an under-resolved schedule.
HittingFrequencyTable hitting_probability_mc(const PowerSpectrum& s, int d,
                                             const Cap& cap, const Eigen::VectorXd& t,
                                             const std::vector<double>& eps_schedule,
                                             int replicates, const IsoLatGrid& grid,
                                             std::uint64_t seed);

// CSV exports: shell,increment,cumulative and
// eps,hits,replicates,freq,ci_lo,ci_hi.
void save_energy_trace_csv(const EnergyResult& e, const std::string& path);
void save_frequency_table_csv(const HittingFrequencyTable& t, const std::string& path);

}  // namespace sgf
