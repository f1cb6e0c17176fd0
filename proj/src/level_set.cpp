#include "sgf/level_set.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace sgf {

namespace {

bool within_level(const Eigen::MatrixXd& values, std::int64_t idx,
                  const Eigen::VectorXd& t, double eps) {
  return (values.row(idx).transpose() - t).cwiseAbs().maxCoeff() <= eps;
}

void require_grid_sample(const FieldSample& f, const Eigen::VectorXd& t,
                         double eps, const char* who) {
  if (!f.on_grid()) {
    throw std::invalid_argument(std::string(who) + ": sample is not on a grid");
  }
  if (eps <= 0.0) {
    throw std::invalid_argument(std::string(who) + ": eps must be positive");
  }
  if (t.size() != f.components()) {
    throw std::invalid_argument(std::string(who) +
                                ": level dimension does not match the field");
  }
}

void require_same_grid(const LevelSetEstimate& ls, const VoronoiHierarchy& h,
                       const char* who) {
  if (ls.grid.n_rows != h.grid.n_rows || ls.grid.n_lon != h.grid.n_lon) {
    throw std::invalid_argument(std::string(who) +
                                ": hierarchy was built on a different grid");
  }
}

}  // namespace

std::vector<SpherePoint> LevelSetEstimate::points() const {
  std::vector<SpherePoint> out;
  out.reserve(member_indices.size() + crossings.size());
  for (const auto idx : member_indices) {
    out.push_back(grid.point(static_cast<int>(idx / grid.n_lon),
                             static_cast<int>(idx % grid.n_lon)));
  }
  for (const auto& c : crossings) out.push_back(c.midpoint);
  return out;
}

LevelSetEstimate extract_level_set(const FieldSample& f, const Eigen::VectorXd& t,
                                   double eps) {
  require_grid_sample(f, t, eps, "extract_level_set");

  LevelSetEstimate ls;
  ls.t = t;
  ls.eps = eps;
  ls.grid = f.grid;
  ls.seed = f.seed;
  ls.spectrum_hash = f.spectrum_hash;
  ls.band_lo = f.band_lo;
  ls.band_hi = f.band_hi;

  const std::int64_t n = f.size();
  for (std::int64_t idx = 0; idx < n; ++idx) {
    if (within_level(f.values, idx, t, eps)) ls.member_indices.push_back(idx);
  }

  if (f.components() == 1) {
    const double level = t(0);
    const auto sign_split = [&](std::int64_t a, std::int64_t b) {
      return (f.values(a, 0) - level) * (f.values(b, 0) - level) < 0.0;
    };
    const double dlon = kPi / f.grid.n_lon;
    for (int i = 0; i < f.grid.n_rows; ++i) {
      for (int j = 0; j < f.grid.n_lon; ++j) {
        const std::int64_t a = f.grid.index(i, j);
        const std::int64_t b = f.grid.index(i, (j + 1) % f.grid.n_lon);
        if (sign_split(a, b)) {
          ls.crossings.push_back(
              {a, b, make_point(f.grid.colat(i), f.grid.lon(j) + dlon)});
        }
        if (i + 1 < f.grid.n_rows) {
          const std::int64_t c = f.grid.index(i + 1, j);
          if (sign_split(a, c)) {
            ls.crossings.push_back(
                {a, c, make_point((i + 1) * kPi / f.grid.n_rows, f.grid.lon(j))});
          }
        }
      }
    }
  }
  return ls;
}

std::vector<std::vector<std::int32_t>> occupied_cells(const LevelSetEstimate& ls,
                                                      const VoronoiHierarchy& h) {
  require_same_grid(ls, h, "occupied_cells");
  const int km = h.k_max();

  std::vector<std::vector<char>> mark(km);
  for (int k = 1; k <= km; ++k) {
    mark[k - 1].assign(h.levels[k - 1].centers.size(), 0);
    const auto& cell_of = h.levels[k - 1].cell_of;
    for (const auto idx : ls.member_indices) mark[k - 1][cell_of[idx]] = 1;
  }

  if (!ls.crossings.empty()) {
    // One top-down walk per midpoint; children grouped by parent in index
    // order reproduce locate()'s lowest-index tie break.
    std::vector<std::vector<std::int32_t>> child_list(km), child_off(km);
    for (int k = 2; k <= km; ++k) {
      const auto& level = h.levels[k - 1];
      auto& off = child_off[k - 1];
      off.assign(h.levels[k - 2].centers.size() + 1, 0);
      for (const int p : level.parent) ++off[p + 1];
      for (std::size_t i = 1; i < off.size(); ++i) off[i] += off[i - 1];
      child_list[k - 1].resize(level.parent.size());
      std::vector<std::int32_t> at(off.begin(), off.end() - 1);
      for (std::int32_t c = 0; c < static_cast<std::int32_t>(level.parent.size()); ++c) {
        child_list[k - 1][at[level.parent[c]]++] = c;
      }
    }

    std::vector<std::vector<Eigen::Vector3d>> units(km);
    for (int k = 1; k <= km; ++k) {
      units[k - 1].reserve(h.levels[k - 1].centers.size());
      for (const auto& c : h.levels[k - 1].centers) units[k - 1].push_back(c.unit());
    }

    for (const auto& cr : ls.crossings) {
      const Eigen::Vector3d u = cr.midpoint.unit();
      std::int32_t cur = 0;
      for (int k = 1; k <= km; ++k) {
        double best = std::numeric_limits<double>::infinity();
        std::int32_t best_c = -1;
        if (k == 1) {
          for (std::int32_t c = 0; c < static_cast<std::int32_t>(units[0].size()); ++c) {
            const double d = geodesic_distance<double>(units[0][c], u);
            if (d < best) {
              best = d;
              best_c = c;
            }
          }
        } else {
          const auto& off = child_off[k - 1];
          const auto& cs = child_list[k - 1];
          for (std::int32_t i = off[cur]; i < off[cur + 1]; ++i) {
            const double d = geodesic_distance<double>(units[k - 1][cs[i]], u);
            if (d < best) {
              best = d;
              best_c = cs[i];
            }
          }
        }
        cur = best_c;
        mark[k - 1][cur] = 1;
      }
    }
  }

  std::vector<std::vector<std::int32_t>> out(km);
  for (int k = 1; k <= km; ++k) {
    for (std::int32_t c = 0; c < static_cast<std::int32_t>(mark[k - 1].size()); ++c) {
      if (mark[k - 1][c]) out[k - 1].push_back(c);
    }
  }
  return out;
}

std::vector<std::int64_t> occupied_cell_counts(const LevelSetEstimate& ls,
                                               const VoronoiHierarchy& h) {
  const auto cells = occupied_cells(ls, h);
  std::vector<std::int64_t> counts(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    counts[k] = static_cast<std::int64_t>(cells[k].size());
  }
  return counts;
}

DimensionFit box_dimension(const LevelSetEstimate& ls, const VoronoiHierarchy& h,
                           int k_lo, int k_hi) {
  require_same_grid(ls, h, "box_dimension");
  if (ls.empty()) throw std::invalid_argument("box_dimension: empty level set");
  if (k_lo < 1 || k_hi > h.k_max() || k_hi - k_lo + 1 < 3) {
    throw std::invalid_argument("box_dimension: need >= 3 levels inside the hierarchy");
  }

  const auto counts = occupied_cell_counts(ls, h);
  DimensionFit fit;
  const int n = k_hi - k_lo + 1;
  Eigen::VectorXd x(n), y(n);
  for (int k = k_lo; k <= k_hi; ++k) {
    fit.levels.push_back(k);
    fit.counts.push_back(counts[k - 1]);
    x(k - k_lo) = k * std::log(2.0);
    y(k - k_lo) = std::log(static_cast<double>(counts[k - 1]));
  }
  const double xm = x.mean(), ym = y.mean();
  const Eigen::VectorXd xc = x.array() - xm;
  const Eigen::VectorXd yc = y.array() - ym;
  const double sxx = xc.squaredNorm();
  fit.slope = xc.dot(yc) / sxx;
  const Eigen::VectorXd r = yc - fit.slope * xc;
  fit.residuals.assign(r.data(), r.data() + n);
  if (n > 2) fit.std_error = std::sqrt(r.squaredNorm() / (n - 2) / sxx);
  return fit;
}

std::pair<int, int> dimension_level_range(const LevelSetEstimate& ls,
                                          const VoronoiHierarchy& h) {
  if (ls.empty()) {
    throw std::invalid_argument("dimension_level_range: empty level set");
  }
  const auto counts = occupied_cell_counts(ls, h);
  // Below 10 cells the log count is dominated by the coarse packing; above
  // half the point count the cells are saturating toward one point each.
  const double cap = 0.5 * static_cast<double>(ls.size());
  int lo = 0, hi = -1;
  int best_lo = 0, best_hi = -1;
  for (int k = 1; k <= h.k_max(); ++k) {
    if (counts[k - 1] >= 10 && static_cast<double>(counts[k - 1]) <= cap) {
      if (hi != k - 1) lo = k;
      hi = k;
      if (hi - lo > best_hi - best_lo) {
        best_lo = lo;
        best_hi = hi;
      }
    }
  }
  if (best_hi - best_lo + 1 < 3) {
    throw std::invalid_argument(
        "dimension_level_range: fewer than 3 unsaturated levels");
  }
  return {best_lo, best_hi};
}

double phi_premeasure(const LevelSetEstimate& ls, const VoronoiHierarchy& h,
                      int level, const GaugeFunction& g) {
  require_same_grid(ls, h, "phi_premeasure");
  if (level < 1 || level > h.k_max()) {
    throw std::invalid_argument("phi_premeasure: level outside the hierarchy");
  }
  if (level < 3) {
    throw std::invalid_argument(
        "phi_premeasure: cell diameter 2^(1-k) needs k >= 3 to sit in the gauge domain");
  }
  if (ls.empty()) return 0.0;
  const auto cells = occupied_cells(ls, h);
  const double diam = std::ldexp(1.0, 1 - level);
  return static_cast<double>(cells[level - 1].size()) * phi_gauge(diam, g);
}

bool hitting_indicator(const FieldSample& f, const Eigen::VectorXd& t,
                       const Cap& cap, double eps) {
  require_grid_sample(f, t, eps, "hitting_indicator");

  const auto& u = cap.center;
  const double row_step = kPi / f.grid.n_rows;
  const double dlon = kPi / f.grid.n_lon;
  const int d = static_cast<int>(f.components());
  const double level = d == 1 ? t(0) : 0.0;

  for (int i = 0; i < f.grid.n_rows; ++i) {
    if (std::abs(f.grid.colat(i) - u.colat) > cap.radius + 2.0 * row_step) continue;
    for (int j = 0; j < f.grid.n_lon; ++j) {
      const std::int64_t a = f.grid.index(i, j);
      const SpherePoint p = f.grid.point(i, j);
      if (geodesic_distance(p, u) <= cap.radius && within_level(f.values, a, t, eps)) {
        return true;
      }
      if (d != 1) continue;
      const double va = f.values(a, 0) - level;
      const std::int64_t b = f.grid.index(i, (j + 1) % f.grid.n_lon);
      if (va * (f.values(b, 0) - level) < 0.0) {
        const SpherePoint m = make_point(f.grid.colat(i), f.grid.lon(j) + dlon);
        if (geodesic_distance(m, u) <= cap.radius) return true;
      }
      if (i + 1 < f.grid.n_rows) {
        const std::int64_t c = f.grid.index(i + 1, j);
        if (va * (f.values(c, 0) - level) < 0.0) {
          const SpherePoint m = make_point((i + 1) * row_step, f.grid.lon(j));
          if (geodesic_distance(m, u) <= cap.radius) return true;
        }
      }
    }
  }
  return false;
}

double default_level_tolerance(const IsoLatGrid& grid, double alpha, double k_osc) {
  if (k_osc <= 0.0) {
    throw std::invalid_argument("default_level_tolerance: k_osc must be positive");
  }
  const double h = std::min(resolution_scale(grid), 0.3);
  return 2.0 * k_osc * w_gauge(h, alpha);
}

double fit_oscillation_constant(const FieldSample& f, double alpha, int n_caps) {
  if (!f.on_grid()) {
    throw std::invalid_argument("fit_oscillation_constant: sample is not on a grid");
  }
  if (n_caps < 8) {
    throw std::invalid_argument("fit_oscillation_constant: need >= 8 probe caps");
  }
  const double h = std::min(resolution_scale(f.grid), 0.3);
  const double w = w_gauge(h, alpha);

  // Deterministic golden-angle spiral of probe centers.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<double> ratios;
  for (int i = 0; i < n_caps; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n_caps;
    const SpherePoint c = make_point(std::acos(z), std::fmod(i * golden, 2.0 * kPi));
    try {
      ratios.push_back(oscillation(f, make_cap(c, h)) / w);
    } catch (const std::invalid_argument&) {
      // cap holds fewer than two samples near a pole; skip
    }
  }
  if (ratios.size() * 2 < static_cast<std::size_t>(n_caps)) {
    throw std::invalid_argument(
        "fit_oscillation_constant: grid too coarse for the probe caps");
  }
  const auto mid = ratios.begin() + ratios.size() / 2;
  std::nth_element(ratios.begin(), mid, ratios.end());
  return *mid;
}

void save_level_set_csv(const LevelSetEstimate& ls, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_level_set_csv: cannot open " + path);
  out.precision(17);
  out << "colat,lon,origin\n";
  for (const auto idx : ls.member_indices) {
    const auto p = ls.grid.point(static_cast<int>(idx / ls.grid.n_lon),
                                 static_cast<int>(idx % ls.grid.n_lon));
    out << p.colat << ',' << p.lon << ",grid\n";
  }
  for (const auto& c : ls.crossings) {
    out << c.midpoint.colat << ',' << c.midpoint.lon << ",edge\n";
  }
  if (!out) throw std::runtime_error("save_level_set_csv: write failed for " + path);
}

std::string dimension_fit_to_json(const DimensionFit& fit) {
  nlohmann::json j;
  j["slope"] = fit.slope;
  j["std_error"] = fit.std_error;
  j["levels"] = fit.levels;
  j["counts"] = fit.counts;
  j["residuals"] = fit.residuals;
  return j.dump(2);
}

void save_dimension_fit_json(const DimensionFit& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dimension_fit_json: cannot open " + path);
  out << dimension_fit_to_json(fit) << '\n';
  if (!out) {
    throw std::runtime_error("save_dimension_fit_json: write failed for " + path);
  }
}

}  // namespace sgf
