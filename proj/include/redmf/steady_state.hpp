#pragma once

// Fixed-point window distribution for a constant loss probability k.
//
// On each dyadic interval [w_max/2^(n+1), w_max/2^n] the density is a finite
// Gaussian sum  p(w) = sum_{i=0..n} a_i^n exp(-4^i k w^2 / 2),  with
//   a_i^n = 4^i / prod_{l=1..i}(1 - 4^l) * a_0^(n-i)        (i > 0)
// and a_0^n fixed by continuity at w_max/2^n (the density jumps by
// +M k w_max when crossing w_max/2 upwards, and p(w_max) = M k w_max).

#include <cstddef>
#include <vector>

#include "redmf/model.hpp"

namespace redmf {

/// Coefficients stored as a_i^n = scaled[n][i] * exp(log_scale) so that
/// neither e^{+k w_max^2/2} nor the normalized mass overflow.
struct SeriesCoefficients {
  double k = 0;
  double w_max = 0;
  int depth = 0;            // n_max
  double log_scale = 0;
  double mass_at_wmax = 1;  // M the coefficients are proportional to
  bool unit_mass = true;
  std::vector<std::vector<double>> scaled;

  /// Unscaled a_i^n; may overflow to inf for large k with unit mass.
  double coefficient(int n, int i) const;
  /// Left edge of the deepest interval; the density is treated as zero below.
  double lower_edge() const;
};

/// Smallest n with w_max / 2^(n+1) < 1 packet.
int default_depth(double w_max);

/// 4^i / prod_{l=1..i}(1 - 4^l); alternates in sign, summable.
double off_diagonal_factor(int i);

SeriesCoefficients build_series(double k, double w_max, int depth);

/// Density in the scale the coefficients carry (unit mass unless
/// normalized). Right-continuous at dyadic breakpoints.
double eval_density(const SeriesCoefficients& coeffs, double w);

/// Integral of the density over (lower_edge, w_max] at the coefficients'
/// scale, returned as log(integral) to avoid overflow.
double log_density_integral(const SeriesCoefficients& coeffs);

/// Rescales unit-mass coefficients so the density plus atom integrate to 1.
/// Throws when the truncated tail below lower_edge() is not negligible.
SeriesCoefficients normalize_series(const SeriesCoefficients& unit);

/// Normalized distribution on a uniform grid of `cells` cells with exact
/// per-cell integrals.
WindowDistribution normalize(const SeriesCoefficients& unit,
                             std::size_t cells = kDefaultCells);

/// Closed-form quantities of a normalized fixed point.
struct FixedPoint {
  SeriesCoefficients series;  // normalized
  double mass_at_wmax = 1;
  double mean = 0;            // packets
  double second_moment = 0;   // packets^2
  double truncation_residual = 0;

  double density(double w) const { return eval_density(series, w); }
  WindowDistribution distribution(std::size_t cells = kDefaultCells) const;
};

/// Builds and normalizes, deepening the series until the truncated tail is
/// below tolerance. k == 0 yields the degenerate all-at-w_max point.
FixedPoint solve_fixed_point(double k, double w_max);

/// First-order estimate exp(-k w_max^2 / 2) of the mass at w_max.
double taylor_mass(double k, double w_max);

/// Grid quadrature of the first moment (atom included).
double mean_window(const WindowDistribution& dist);
/// Grid quadrature of the second moment (atom included).
double second_moment(const WindowDistribution& dist);

/// sum_{i>=1} |off_diagonal_factor(i)|, the constant bounding the series.
double off_diagonal_sum();

/// Largest sum of absolute term magnitudes over a w sample; finite and at
/// most sup_n |a_0^n| * (1 + off_diagonal_sum()).
double series_abs_bound(const SeriesCoefficients& coeffs);

}  // namespace redmf
