#pragma once
// Gaussian coefficient sampling, band-limited synthesis on iso-latitude
// grids and point lists, band splitting, and sup-norm oscillation over caps.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sgf/sphere_geom.hpp"
#include "sgf/spectrum.hpp"

namespace sgf {

// Coefficients a_{lm} for l in [l_lo, l_hi], packed with m in [0, l] only.
// Negative orders follow from a_{l,-m} = (-1)^m conj(a_{lm}) and at(l, m)
// applies that rule, so Hermitian symmetry holds by construction; a_{l0} is
// real. The counter-based draw depends only on (seed, component, l, m):
// re-sampling any band of the same stream reproduces the same values.
struct HarmonicCoefficients {
  int l_lo = 0;
  int l_hi = -1;
  Eigen::VectorXcd a;  // rows l_lo..l_hi, row l holds m = 0..l
  std::uint64_t seed = 0;
  int component = 0;
  std::uint64_t spectrum_hash = 0;

  Eigen::Index offset(int l) const {
    const auto lo = static_cast<Eigen::Index>(l_lo);
    const auto ll = static_cast<Eigen::Index>(l);
    return (ll - lo) * (ll + lo + 1) / 2;  // sum of (l'+1) over l' in [l_lo, l)
  }
  std::complex<double> at(int l, int m) const;
};

HarmonicCoefficients sample_coefficients(const PowerSpectrum& s, int l_lo, int l_hi,
                                         std::uint64_t seed, int component = 0);

// Zero every degree outside [keep_lo, keep_hi] / inside [cut_lo, cut_hi].
// The two halves of a band split are masks of one common draw.
HarmonicCoefficients band_pass(const HarmonicCoefficients& c, int keep_lo, int keep_hi);
HarmonicCoefficients band_stop(const HarmonicCoefficients& c, int cut_lo, int cut_hi);

// Same masks applied to the spectrum itself (for analytic moments of the
// split fields).
PowerSpectrum band_pass_spectrum(const PowerSpectrum& s, int keep_lo, int keep_hi);
PowerSpectrum band_stop_spectrum(const PowerSpectrum& s, int cut_lo, int cut_hi);

// A realized field: one value row per sample location, one column per
// independent component. Treated as immutable once built.
struct FieldSample {
  IsoLatGrid grid;                  // n_rows > 0 iff the sample lives on a grid
  std::vector<SpherePoint> points;  // explicit locations otherwise
  Eigen::MatrixXd values;           // size() x components
  int band_lo = 0;
  int band_hi = -1;
  std::uint64_t seed = 0;
  std::uint64_t spectrum_hash = 0;

  bool on_grid() const { return grid.n_rows > 0; }
  Eigen::Index size() const { return values.rows(); }
  int components() const { return static_cast<int>(values.cols()); }
  SpherePoint location(Eigen::Index k) const;
};

// Synthesis of one component from explicit coefficients. On a grid the sum
// separates: per row, g_m = sum_l a_{lm} lambda_{lm}(theta), then an inverse
// transform across longitude; the packed half-spectrum keeps the output real
// identically. Requires n_lon >= 2 l_hi + 1 so no degree aliases.
FieldSample evaluate_field(const HarmonicCoefficients& c, const IsoLatGrid& grid,
                           int threads = 1);
FieldSample evaluate_field(const HarmonicCoefficients& c,
                           const std::vector<SpherePoint>& pts);

// d independent components sharing a master seed; component k draws from
// counter stream (seed, k, l, m), so the first components of a field do not
// change when d grows.
FieldSample vector_field(const PowerSpectrum& s, int d, int l_lo, int l_hi,
                         const IsoLatGrid& grid, std::uint64_t seed, int threads = 1);
FieldSample vector_field(const PowerSpectrum& s, int d, int l_lo, int l_hi,
                         const std::vector<SpherePoint>& pts, std::uint64_t seed);

// T = main + residual pointwise: main carries degrees [l, u], the residual
// the complement [0, l-1] and [u+1, l_max], both from one coefficient draw.
struct BandSplit {
  int l = 0;
  int u = 0;
  FieldSample main;
  FieldSample residual;
};

BandSplit band_split(const PowerSpectrum& s, int l, int u, const IsoLatGrid& grid,
                     std::uint64_t seed, int d = 1, int threads = 1);

// Band limits at resolution r: l = floor(b^{-beta}/r), u = floor(b^{1-beta}/r),
// with default beta = (alpha - 2)/4 and b = 8.
double default_beta(double alpha);
int band_lower(double r, double b, double beta);
int band_upper(double r, double b, double beta);

// Largest Euclidean distance between value vectors over sample locations
// inside the cap. Throws when fewer than two locations fall inside.
double oscillation(const FieldSample& f, const Cap& cap);

// Binary layout: u32 n_rows, u32 n_lon, u32 d, u64 seed, u64 spectrum hash,
// then one row-major little-endian float64 block per component. Grid samples
// only; band provenance is not persisted.
void save_field_binary(const FieldSample& f, const std::string& path);
FieldSample load_field_binary(const std::string& path);

// colat,lon,v0,...,v{d-1} per line; works for grids and point lists.
void save_field_csv(const FieldSample& f, const std::string& path);

}  // namespace sgf
