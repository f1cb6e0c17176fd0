#include "sgf/synthesis.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sgf/harmonics.hpp"
#include "sgf/rng.hpp"

namespace sgf {

namespace {

// g_m(theta) = sum_l a_{lm} lambda_{lm}(theta) for m = 0..l_hi. g must be
// pre-sized to l_hi + 1 and zeroed; lam_buf holds at least l_hi + 1 entries.
void accumulate_g(const HarmonicCoefficients& c, double theta, Eigen::VectorXcd& g,
                  Eigen::VectorXd& lam_buf) {
  const int lh = c.l_hi;
  for (int m = 0; m <= lh; ++m) {
    auto col = lam_buf.head(lh - m + 1);
    legendre_lambda_col<double>(lh, m, theta, col);
    std::complex<double> acc(0.0, 0.0);
    for (int l = std::max(m, c.l_lo); l <= lh; ++l) {
      acc += c.a[c.offset(l) + m] * col[l - m];
    }
    g[m] = acc;
  }
}

// T(phi_j) = Re g_0 + 2 sum_{m>=1} Re(g_m e^{i m phi_j}) for the n uniform
// longitudes of a row. Even n goes through the packed-half-spectrum inverse
// transform (unscaled, so the sum comes out directly); odd n falls back to
// the direct recurrence.
struct RowSynth {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  std::vector<double> time;

  RowSynth() {
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
  }

  template <typename Sink>
  void run(const Eigen::VectorXcd& g, int n, Sink&& sink) {
    const int lh = static_cast<int>(g.size()) - 1;
    if (n % 2 == 0) {
      const int nh = n / 2 + 1;
      freq.assign(nh, std::complex<double>(0.0, 0.0));
      for (int m = 0; m <= lh; ++m) freq[m] = g[m];
      freq[0] = std::complex<double>(freq[0].real(), 0.0);
      fft.inv(time, freq);
      for (int j = 0; j < n; ++j) sink(j, time[j]);
    } else {
      const double dphi = 2.0 * kPi / n;
      for (int j = 0; j < n; ++j) {
        const std::complex<double> z(std::cos(j * dphi), std::sin(j * dphi));
        std::complex<double> w = z;
        double v = g[0].real();
        for (int m = 1; m <= lh; ++m) {
          v += 2.0 * (g[m] * w).real();
          w *= z;
        }
        sink(j, v);
      }
    }
  }
};

void synth_grid_rows(const HarmonicCoefficients& c, const IsoLatGrid& grid, int i0,
                     int i1, Eigen::MatrixXd& values, int col) {
  Eigen::VectorXcd g(c.l_hi + 1);
  Eigen::VectorXd lam(c.l_hi + 1);
  RowSynth synth;
  for (int i = i0; i < i1; ++i) {
    accumulate_g(c, grid.colat(i), g, lam);
    const std::int64_t base = grid.index(i, 0);
    synth.run(g, grid.n_lon, [&](int j, double v) { values(base + j, col) = v; });
  }
}

void synth_grid(const HarmonicCoefficients& c, const IsoLatGrid& grid,
                Eigen::MatrixXd& values, int col, int threads) {
  if (grid.n_rows <= 0 || grid.n_lon <= 0) {
    throw std::invalid_argument("synthesis: empty grid");
  }
  if (grid.n_lon < 2 * c.l_hi + 1) {
    throw std::invalid_argument(
        "synthesis: grid under-resolved, need n_lon >= 2 l_hi + 1");
  }
  const int nw = std::clamp(threads, 1, grid.n_rows);
  if (nw == 1) {
    synth_grid_rows(c, grid, 0, grid.n_rows, values, col);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    const int i0 = static_cast<int>(static_cast<std::int64_t>(grid.n_rows) * w / nw);
    const int i1 =
        static_cast<int>(static_cast<std::int64_t>(grid.n_rows) * (w + 1) / nw);
    pool.emplace_back(synth_grid_rows, std::cref(c), std::cref(grid), i0, i1,
                      std::ref(values), col);
  }
  for (auto& t : pool) t.join();
}

void synth_points(const HarmonicCoefficients& c, const std::vector<SpherePoint>& pts,
                  Eigen::MatrixXd& values, int col) {
  Eigen::VectorXcd g(c.l_hi + 1);
  Eigen::VectorXd lam(c.l_hi + 1);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    accumulate_g(c, pts[k].colat, g, lam);
    const std::complex<double> z(std::cos(pts[k].lon), std::sin(pts[k].lon));
    std::complex<double> w = z;
    double v = g[0].real();
    for (int m = 1; m <= c.l_hi; ++m) {
      v += 2.0 * (g[m] * w).real();
      w *= z;
    }
    values(static_cast<Eigen::Index>(k), col) = v;
  }
}

void check_component_count(int d) {
  if (d < 1) throw std::invalid_argument("vector_field: component count must be >= 1");
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

std::complex<double> HarmonicCoefficients::at(int l, int m) const {
  if (l < l_lo || l > l_hi || std::abs(m) > l) {
    throw std::out_of_range("HarmonicCoefficients::at: index outside band");
  }
  if (m >= 0) return a[offset(l) + m];
  const std::complex<double> v = std::conj(a[offset(l) - m]);
  return (m % 2 == 0) ? v : -v;
}

HarmonicCoefficients sample_coefficients(const PowerSpectrum& s, int l_lo, int l_hi,
                                         std::uint64_t seed, int component) {
  if (l_lo < 0 || l_hi < l_lo || l_hi > s.l_max()) {
    throw std::invalid_argument("sample_coefficients: band outside [0, l_max]");
  }
  if (component < 0) {
    throw std::invalid_argument("sample_coefficients: negative component index");
  }
  HarmonicCoefficients c;
  c.l_lo = l_lo;
  c.l_hi = l_hi;
  c.seed = seed;
  c.component = component;
  c.spectrum_hash = spectrum_hash(s);
  c.a.resize(c.offset(l_hi) + l_hi + 1);
  const NormalStream ns(seed, StreamTag::coefficients);
  for (int l = l_lo; l <= l_hi; ++l) {
    const double s_full = std::sqrt(s.c[l]);
    const double s_half = std::sqrt(0.5 * s.c[l]);
    const Eigen::Index base = c.offset(l);
    for (int m = 0; m <= l; ++m) {
      const auto z = ns.block(static_cast<std::uint64_t>(component),
                              static_cast<std::uint64_t>(l),
                              static_cast<std::uint64_t>(m));
      c.a[base + m] = (m == 0)
                          ? std::complex<double>(s_full * z[0], 0.0)
                          : std::complex<double>(s_half * z[0], s_half * z[1]);
    }
  }
  return c;
}

HarmonicCoefficients band_pass(const HarmonicCoefficients& c, int keep_lo, int keep_hi) {
  if (keep_lo > keep_hi) throw std::invalid_argument("band_pass: empty band");
  HarmonicCoefficients out = c;
  for (int l = c.l_lo; l <= c.l_hi; ++l) {
    if (l < keep_lo || l > keep_hi) {
      out.a.segment(out.offset(l), l + 1).setZero();
    }
  }
  return out;
}

HarmonicCoefficients band_stop(const HarmonicCoefficients& c, int cut_lo, int cut_hi) {
  if (cut_lo > cut_hi) throw std::invalid_argument("band_stop: empty band");
  HarmonicCoefficients out = c;
  for (int l = std::max(c.l_lo, cut_lo); l <= std::min(c.l_hi, cut_hi); ++l) {
    out.a.segment(out.offset(l), l + 1).setZero();
  }
  return out;
}

PowerSpectrum band_pass_spectrum(const PowerSpectrum& s, int keep_lo, int keep_hi) {
  if (keep_lo > keep_hi) throw std::invalid_argument("band_pass_spectrum: empty band");
  PowerSpectrum out = s;
  out.kind = SpectrumKind::custom;
  for (int l = 0; l <= s.l_max(); ++l) {
    if (l < keep_lo || l > keep_hi) out.c[l] = 0.0;
  }
  return out;
}

PowerSpectrum band_stop_spectrum(const PowerSpectrum& s, int cut_lo, int cut_hi) {
  if (cut_lo > cut_hi) throw std::invalid_argument("band_stop_spectrum: empty band");
  PowerSpectrum out = s;
  out.kind = SpectrumKind::custom;
  for (int l = std::max(0, cut_lo); l <= std::min(s.l_max(), cut_hi); ++l) {
    out.c[l] = 0.0;
  }
  return out;
}

SpherePoint FieldSample::location(Eigen::Index k) const {
  if (k < 0 || k >= size()) throw std::out_of_range("FieldSample::location");
  if (on_grid()) {
    const int i = static_cast<int>(k / grid.n_lon);
    const int j = static_cast<int>(k % grid.n_lon);
    return grid.point(i, j);
  }
  return points[static_cast<std::size_t>(k)];
}

FieldSample evaluate_field(const HarmonicCoefficients& c, const IsoLatGrid& grid,
                           int threads) {
  FieldSample f;
  f.grid = grid;
  f.band_lo = c.l_lo;
  f.band_hi = c.l_hi;
  f.seed = c.seed;
  f.spectrum_hash = c.spectrum_hash;
  f.values.resize(grid.size(), 1);
  synth_grid(c, grid, f.values, 0, threads);
  return f;
}

FieldSample evaluate_field(const HarmonicCoefficients& c,
                           const std::vector<SpherePoint>& pts) {
  if (pts.empty()) throw std::invalid_argument("evaluate_field: empty point list");
  FieldSample f;
  f.points = pts;
  f.band_lo = c.l_lo;
  f.band_hi = c.l_hi;
  f.seed = c.seed;
  f.spectrum_hash = c.spectrum_hash;
  f.values.resize(static_cast<Eigen::Index>(pts.size()), 1);
  synth_points(c, pts, f.values, 0);
  return f;
}

FieldSample vector_field(const PowerSpectrum& s, int d, int l_lo, int l_hi,
                         const IsoLatGrid& grid, std::uint64_t seed, int threads) {
  check_component_count(d);
  FieldSample f;
  f.grid = grid;
  f.band_lo = l_lo;
  f.band_hi = l_hi;
  f.seed = seed;
  f.spectrum_hash = spectrum_hash(s);
  f.values.resize(grid.size(), d);
  for (int k = 0; k < d; ++k) {
    const HarmonicCoefficients c = sample_coefficients(s, l_lo, l_hi, seed, k);
    synth_grid(c, grid, f.values, k, threads);
  }
  return f;
}

FieldSample vector_field(const PowerSpectrum& s, int d, int l_lo, int l_hi,
                         const std::vector<SpherePoint>& pts, std::uint64_t seed) {
  check_component_count(d);
  if (pts.empty()) throw std::invalid_argument("vector_field: empty point list");
  FieldSample f;
  f.points = pts;
  f.band_lo = l_lo;
  f.band_hi = l_hi;
  f.seed = seed;
  f.spectrum_hash = spectrum_hash(s);
  f.values.resize(static_cast<Eigen::Index>(pts.size()), d);
  for (int k = 0; k < d; ++k) {
    const HarmonicCoefficients c = sample_coefficients(s, l_lo, l_hi, seed, k);
    synth_points(c, pts, f.values, k);
  }
  return f;
}

BandSplit band_split(const PowerSpectrum& s, int l, int u, const IsoLatGrid& grid,
                     std::uint64_t seed, int d, int threads) {
  check_component_count(d);
  if (!(1 <= l && l < u && u <= s.l_max())) {
    throw std::invalid_argument("band_split: need 1 <= l < u <= l_max");
  }
  BandSplit bs;
  bs.l = l;
  bs.u = u;
  for (FieldSample* f : {&bs.main, &bs.residual}) {
    f->grid = grid;
    f->seed = seed;
    f->spectrum_hash = spectrum_hash(s);
    f->values.resize(grid.size(), d);
  }
  bs.main.band_lo = l;
  bs.main.band_hi = u;
  bs.residual.band_lo = 0;
  bs.residual.band_hi = s.l_max();
  for (int k = 0; k < d; ++k) {
    const HarmonicCoefficients full = sample_coefficients(s, 0, s.l_max(), seed, k);
    synth_grid(band_pass(full, l, u), grid, bs.main.values, k, threads);
    synth_grid(band_stop(full, l, u), grid, bs.residual.values, k, threads);
  }
  return bs;
}

double default_beta(double alpha) {
  if (!(alpha > 2.0)) throw std::invalid_argument("default_beta: alpha must exceed 2");
  return (alpha - 2.0) / 4.0;
}

int band_lower(double r, double b, double beta) {
  if (!(r > 0.0) || !(b > 1.0) || !(beta > 0.0)) {
    throw std::invalid_argument("band_lower: need r > 0, b > 1, beta > 0");
  }
  return static_cast<int>(std::floor(std::pow(b, -beta) / r));
}

int band_upper(double r, double b, double beta) {
  if (!(r > 0.0) || !(b > 1.0) || !(beta > 0.0)) {
    throw std::invalid_argument("band_upper: need r > 0, b > 1, beta > 0");
  }
  return static_cast<int>(std::floor(std::pow(b, 1.0 - beta) / r));
}

double oscillation(const FieldSample& f, const Cap& cap) {
  const Eigen::Vector3d cu = cap.center.unit();
  std::vector<Eigen::Index> in;
  if (f.on_grid()) {
    // Only rows whose colatitude band can intersect the cap.
    const double lo = cap.center.colat - cap.radius;
    const double hi = cap.center.colat + cap.radius;
    for (int i = 0; i < f.grid.n_rows; ++i) {
      const double t = f.grid.colat(i);
      if (t < lo || t > hi) continue;
      for (int j = 0; j < f.grid.n_lon; ++j) {
        if (geodesic_distance<double>(f.grid.unit(i, j), cu) <= cap.radius) {
          in.push_back(f.grid.index(i, j));
        }
      }
    }
  } else {
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      if (geodesic_distance<double>(f.points[k].unit(), cu) <= cap.radius) {
        in.push_back(k);
      }
    }
  }
  if (in.size() < 2) {
    throw std::invalid_argument("oscillation: cap holds fewer than two samples");
  }
  if (f.components() == 1) {
    double lo = f.values(in[0], 0), hi = lo;
    for (Eigen::Index k : in) {
      lo = std::min(lo, f.values(k, 0));
      hi = std::max(hi, f.values(k, 0));
    }
    return hi - lo;
  }
  double best = 0.0;
  for (std::size_t a = 0; a + 1 < in.size(); ++a) {
    for (std::size_t b = a + 1; b < in.size(); ++b) {
      best = std::max(best, (f.values.row(in[a]) - f.values.row(in[b])).norm());
    }
  }
  return best;
}

void save_field_binary(const FieldSample& f, const std::string& path) {
  if (!f.on_grid()) {
    throw std::invalid_argument("save_field_binary: requires a grid sample");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_field_binary: cannot open " + path);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.n_rows));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.n_lon));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(f.components()));
  write_pod<std::uint64_t>(out, f.seed);
  write_pod<std::uint64_t>(out, f.spectrum_hash);
  for (int k = 0; k < f.components(); ++k) {
    out.write(reinterpret_cast<const char*>(f.values.col(k).data()),
              static_cast<std::streamsize>(sizeof(double)) * f.size());
  }
  if (!out) throw std::runtime_error("save_field_binary: write failed on " + path);
}

FieldSample load_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_field_binary: cannot open " + path);
  FieldSample f;
  const auto n_rows = read_pod<std::uint32_t>(in);
  const auto n_lon = read_pod<std::uint32_t>(in);
  const auto d = read_pod<std::uint32_t>(in);
  f.seed = read_pod<std::uint64_t>(in);
  f.spectrum_hash = read_pod<std::uint64_t>(in);
  if (!in || n_rows == 0 || n_lon == 0 || d == 0) {
    throw std::runtime_error("load_field_binary: malformed header in " + path);
  }
  f.grid = make_grid(static_cast<int>(n_rows), static_cast<int>(n_lon));
  f.values.resize(f.grid.size(), static_cast<int>(d));
  for (std::uint32_t k = 0; k < d; ++k) {
    in.read(reinterpret_cast<char*>(f.values.col(k).data()),
            static_cast<std::streamsize>(sizeof(double)) * f.values.rows());
  }
  if (!in) throw std::runtime_error("load_field_binary: truncated data in " + path);
  return f;
}

void save_field_csv(const FieldSample& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_field_csv: cannot open " + path);
  out.precision(17);
  out << "colat,lon";
  for (int k = 0; k < f.components(); ++k) out << ",v" << k;
  out << "\n";
  for (Eigen::Index p = 0; p < f.size(); ++p) {
    const SpherePoint x = f.location(p);
    out << x.colat << "," << x.lon;
    for (int k = 0; k < f.components(); ++k) out << "," << f.values(p, k);
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_field_csv: write failed on " + path);
}

}  // namespace sgf
