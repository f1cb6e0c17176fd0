#include "sgf/sphere_geom.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgf {

namespace {

double reduce_lon(double lon) {
  const double two_pi = 2.0 * kPi;
  double r = std::fmod(lon, two_pi);
  if (r < 0) r += two_pi;
  if (r >= two_pi) r = 0.0;  // fmod roundoff at the seam
  return r;
}

}  // namespace

SpherePoint make_point(double colat, double lon) {
  if (!(colat >= 0.0 && colat <= kPi)) {
    throw std::invalid_argument("SpherePoint: colatitude outside [0, pi]");
  }
  if (!std::isfinite(lon)) {
    throw std::invalid_argument("SpherePoint: longitude not finite");
  }
  return {colat, reduce_lon(lon)};
}

SpherePoint point_from_unit(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!(std::abs(n - 1.0) <= 1e-9)) {
    throw std::invalid_argument("SpherePoint: vector is not unit length");
  }
  const Eigen::Vector3d u = v / n;
  const double colat = std::atan2(std::hypot(u.x(), u.y()), u.z());
  double lon = std::atan2(u.y(), u.x());
  if (lon < 0) lon += 2.0 * kPi;
  return {colat, reduce_lon(lon)};
}

Cap make_cap(const SpherePoint& center, double radius) {
  if (!(radius > 0.0 && radius <= kPi)) {
    throw std::invalid_argument("Cap: radius outside (0, pi]");
  }
  return {center, radius};
}

double cap_area(double r) {
  if (!(r > 0.0 && r <= kPi)) {
    throw std::invalid_argument("cap_area: radius outside (0, pi]");
  }
  return 2.0 * kPi * (1.0 - std::cos(r));
}

double IsoLatGrid::covering_radius_bound() const {
  return 0.5 * kPi / n_rows + kPi / n_lon;
}

IsoLatGrid make_grid(int n_rows, int n_lon) {
  if (n_rows < 1 || n_lon < 1) {
    throw std::invalid_argument("IsoLatGrid: empty grid");
  }
  return {n_rows, n_lon};
}

namespace {

struct LevelBuild {
  std::vector<Eigen::Vector3d> units;  // center unit vectors
};

}  // namespace

VoronoiHierarchy build_voronoi_hierarchy(int k_max, const IsoLatGrid& grid) {
  if (k_max < 1) {
    throw std::invalid_argument("build_voronoi_hierarchy: k_max must be >= 1");
  }
  if (k_max >= 2) {
    const double need = std::ldexp(1.0, -k_max) / 4.0;
    if (grid.covering_radius_bound() > need) {
      throw std::invalid_argument(
          "build_voronoi_hierarchy: grid too coarse to certify separation at level " +
          std::to_string(k_max));
    }
  }

  VoronoiHierarchy h;
  h.grid = grid;
  const std::int64_t n = grid.size();

  // Level 1: the poles.
  {
    VoronoiLevel lv;
    lv.centers = {SpherePoint{0.0, 0.0}, SpherePoint{kPi, 0.0}};
    lv.parent = {-1, -1};
    lv.cell_of.resize(n);
    for (int i = 0; i < grid.n_rows; ++i) {
      const std::int32_t cell = grid.colat(i) <= kPi / 2 ? 0 : 1;
      std::fill_n(lv.cell_of.begin() + grid.index(i, 0), grid.n_lon, cell);
    }
    lv.max_cell_radius = kPi / 2;
    h.levels.push_back(std::move(lv));
  }

  std::vector<Eigen::Vector3d> grid_units(n);
  for (int i = 0; i < grid.n_rows; ++i)
    for (int j = 0; j < grid.n_lon; ++j) grid_units[grid.index(i, j)] = grid.unit(i, j);

  for (int k = 2; k <= k_max; ++k) {
    const double sep = std::ldexp(1.0, -k);
    const VoronoiLevel& up = h.levels.back();
    const int n_parents = static_cast<int>(up.centers.size());

    // Candidate lists per parent cell, in grid order.
    std::vector<std::vector<std::int64_t>> members(n_parents);
    for (std::int64_t x = 0; x < n; ++x) members[up.cell_of[x]].push_back(x);

    VoronoiLevel lv;
    LevelBuild lb;

    // Independent greedy farthest-point pass per parent cell: the parent
    // center is inherited as the first child (so every cell has one), then
    // candidates are accepted farthest-first while at least 2^-k from all
    // siblings. Per-cell maximality plus the convexity of nested cells
    // yields sibling spacing bounds [2^-k, 2^(1-k)] up to grid slack; the
    // bounds are scoped to siblings, not to cross-parent pairs.
    std::vector<double> md;
    for (int c = 0; c < n_parents; ++c) {
      const auto& cand = members[c];
      md.assign(cand.size(), 0.0);
      auto add_center = [&](const SpherePoint& p, bool first) {
        lv.centers.push_back(p);
        lv.parent.push_back(c);
        const Eigen::Vector3d u = p.unit();
        lb.units.push_back(u);
        for (size_t t = 0; t < cand.size(); ++t) {
          const double d = geodesic_distance<double>(u, grid_units[cand[t]]);
          if (first || d < md[t]) md[t] = d;
        }
      };
      add_center(up.centers[c], true);
      for (;;) {
        double best = -1.0;
        size_t best_t = 0;
        for (size_t t = 0; t < cand.size(); ++t) {
          if (md[t] > best) {
            best = md[t];
            best_t = t;
          }
        }
        if (best < sep) break;
        const std::int64_t x = cand[best_t];
        const int i = static_cast<int>(x / grid.n_lon);
        const int j = static_cast<int>(x % grid.n_lon);
        add_center(grid.point(i, j), false);
      }
    }

    // Nested assignment: nearest center among the children of the point's
    // parent cell, ties to the lowest center index.
    const int n_centers = static_cast<int>(lv.centers.size());
    std::vector<std::vector<int>> children(n_parents);
    for (int ci = 0; ci < n_centers; ++ci) children[lv.parent[ci]].push_back(ci);

    lv.cell_of.resize(n);
    double max_r = 0.0;
    for (std::int64_t x = 0; x < n; ++x) {
      const auto& kids = children[up.cell_of[x]];
      const Eigen::Vector3d& ux = grid_units[x];
      double best = std::numeric_limits<double>::infinity();
      int best_c = -1;
      for (int ci : kids) {
        const double d = geodesic_distance<double>(lb.units[ci], ux);
        if (d < best) {
          best = d;
          best_c = ci;
        }
      }
      lv.cell_of[x] = best_c;
      if (best > max_r) max_r = best;
    }
    lv.max_cell_radius = max_r;

    h.levels.push_back(std::move(lv));
  }
  return h;
}

int VoronoiHierarchy::locate(int level, const SpherePoint& p) const {
  if (level < 1 || level > k_max()) {
    throw std::invalid_argument("locate: level out of range");
  }
  const Eigen::Vector3d u = p.unit();
  int cur = -1;
  for (int k = 1; k <= level; ++k) {
    const VoronoiLevel& lv = levels[k - 1];
    double best = std::numeric_limits<double>::infinity();
    int best_c = -1;
    for (int ci = 0; ci < static_cast<int>(lv.centers.size()); ++ci) {
      if (k > 1 && lv.parent[ci] != cur) continue;
      const double d = geodesic_distance<double>(lv.centers[ci].unit(), u);
      if (d < best) {
        best = d;
        best_c = ci;
      }
    }
    cur = best_c;
  }
  return cur;
}

std::string hierarchy_to_json(const VoronoiHierarchy& h) {
  nlohmann::json out;
  out["k_max"] = h.k_max();
  out["grid"] = {{"n_rows", h.grid.n_rows}, {"n_lon", h.grid.n_lon}};
  nlohmann::json levels = nlohmann::json::array();
  for (int k = 1; k <= h.k_max(); ++k) {
    const VoronoiLevel& lv = h.levels[k - 1];
    nlohmann::json centers = nlohmann::json::array();
    for (const SpherePoint& c : lv.centers) centers.push_back({c.colat, c.lon});
    levels.push_back({{"level", k}, {"centers", centers}, {"parent", lv.parent}});
  }
  out["levels"] = std::move(levels);
  return out.dump();
}

int covering_number(const Cap& cap, double eps) {
  if (!(eps > 0.0 && eps <= cap.radius)) {
    throw std::invalid_argument("covering_number: eps outside (0, cap.radius]");
  }
  const Eigen::Vector3d c = cap.center.unit();
  // Deterministic frame around the cap center.
  const Eigen::Vector3d a =
      std::abs(c.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d e1 = a.cross(c).normalized();
  const Eigen::Vector3d e2 = c.cross(e1);

  const double pitch = eps / 4.0;
  std::vector<Eigen::Vector3d> chosen;
  const double cos_eps = std::cos(eps);
  auto covered = [&](const Eigen::Vector3d& p) {
    for (const Eigen::Vector3d& q : chosen) {
      if (p.dot(q) >= cos_eps) return true;
    }
    return false;
  };

  chosen.push_back(c);  // cap center first: eps == radius covers in one ball
  for (double rho = pitch; rho < cap.radius; rho += pitch) {
    const int m = std::max(4, static_cast<int>(std::ceil(2.0 * kPi * std::sin(rho) / pitch)));
    const double cr = std::cos(rho), sr = std::sin(rho);
    for (int t = 0; t < m; ++t) {
      const double psi = 2.0 * kPi * t / m;
      const Eigen::Vector3d p = cr * c + sr * (std::cos(psi) * e1 + std::sin(psi) * e2);
      if (!covered(p)) chosen.push_back(p);
    }
  }
  return static_cast<int>(chosen.size());
}

}  // namespace sgf
