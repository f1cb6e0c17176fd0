#pragma once
// Sphere points, geodesic metric, caps, iso-latitude grids, and the nested
// Voronoi hierarchy used by the dimension and premeasure estimators.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace sgf {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Point on the unit 2-sphere addressed by colatitude in [0, pi] and
// longitude in [0, 2*pi). The unit 3-vector is derived, never stored.
template <typename Scalar>
struct SpherePointT {
  Scalar colat{0};
  Scalar lon{0};

  Eigen::Matrix<Scalar, 3, 1> unit() const {
    using std::cos;
    using std::sin;
    const Scalar s = sin(colat);
    return {s * cos(lon), s * sin(lon), cos(colat)};
  }
};

using SpherePoint = SpherePointT<double>;

// Validating constructor: throws std::invalid_argument when the coordinates
// are outside their ranges (longitude is reduced mod 2*pi first).
SpherePoint make_point(double colat, double lon);
SpherePoint point_from_unit(const Eigen::Vector3d& v);

// arccos(<u,v>) evaluated as atan2(|u x v|, <u,v>): same value on [0, pi],
// but exact at 0 and fully conditioned at both ends.
template <typename Scalar>
Scalar geodesic_distance(const Eigen::Matrix<Scalar, 3, 1>& u,
                         const Eigen::Matrix<Scalar, 3, 1>& v) {
  using std::atan2;
  return atan2(u.cross(v).norm(), u.dot(v));
}

template <typename Scalar>
Scalar geodesic_distance(const SpherePointT<Scalar>& p, const SpherePointT<Scalar>& q) {
  return geodesic_distance<Scalar>(p.unit(), q.unit());
}

// Geodesic cap (closed ball). radius in (0, pi].
struct Cap {
  SpherePoint center;
  double radius;
};

Cap make_cap(const SpherePoint& center, double radius);

// Area of a cap of radius r: 2*pi*(1 - cos r). Throws on r outside (0, pi].
double cap_area(double r);

// Iso-latitude grid: rows at colat (i + 1/2) * pi / n_rows, uniform
// longitudes, so row data is FFT-friendly. ring_weight is the exact area of
// one cell of the ring (integral of sin over the row's colatitude band times
// the longitude step), so weights sum to 4*pi identically.
struct IsoLatGrid {
  int n_rows = 0;
  int n_lon = 0;

  double colat(int i) const { return (i + 0.5) * kPi / n_rows; }
  double lon(int j) const { return 2.0 * kPi * j / n_lon; }
  double ring_weight(int i) const {
    const double t0 = i * kPi / n_rows, t1 = (i + 1) * kPi / n_rows;
    return (std::cos(t0) - std::cos(t1)) * 2.0 * kPi / n_lon;
  }
  SpherePoint point(int i, int j) const { return {colat(i), lon(j)}; }
  Eigen::Vector3d unit(int i, int j) const { return point(i, j).unit(); }

  std::int64_t size() const { return static_cast<std::int64_t>(n_rows) * n_lon; }
  std::int64_t index(int i, int j) const {
    return static_cast<std::int64_t>(i) * n_lon + j;
  }

  // Upper bound on the distance from an arbitrary sphere point to the grid.
  double covering_radius_bound() const;
};

IsoLatGrid make_grid(int n_rows, int n_lon);

// One level of the hierarchy. centers[i] has parent parent[i] in the level
// above (-1 at level 1); cell_of assigns every grid point to the nearest
// center among the children of the point's parent cell (ties: lowest index),
// which makes the cells nested across levels by construction.
struct VoronoiLevel {
  std::vector<SpherePoint> centers;
  std::vector<int> parent;
  std::vector<std::int32_t> cell_of;
  double max_cell_radius = 0.0;  // max distance from a grid point to its center
};

struct VoronoiHierarchy {
  IsoLatGrid grid;
  std::vector<VoronoiLevel> levels;  // levels[k-1] holds level k

  int k_max() const { return static_cast<int>(levels.size()); }

  // Cell index of an arbitrary point at the given level (nested walk down).
  int locate(int level, const SpherePoint& p) const;
};

// Level 1 is the two poles. Level k >= 2 runs a greedy farthest-point pass
// inside each parent cell (parent center inherited first) with global
// separation threshold 2^-k; deterministic given the grid ordering.
// Throws when the grid is too coarse to certify separation at level k_max.
VoronoiHierarchy build_voronoi_hierarchy(int k_max, const IsoLatGrid& grid);

std::string hierarchy_to_json(const VoronoiHierarchy& h);

// Greedy covering count of a cap by balls of radius eps, on a deterministic
// local grid of pitch eps/4. Throws on eps outside (0, cap.radius].
int covering_number(const Cap& cap, double eps);

}  // namespace sgf
