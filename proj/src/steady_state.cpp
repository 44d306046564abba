#include "redmf/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace redmf {

namespace {

constexpr double kTruncationTolerance = 1e-10;
constexpr int kMaxDepth = 64;

double pow4(int i) { return std::ldexp(1.0, 2 * i); }

double interval_hi(double w_max, int n) { return std::ldexp(w_max, -n); }
double interval_lo(double w_max, int n) { return std::ldexp(w_max, -(n + 1)); }

// Integral of exp(-c w^2) over [x0, x1], 0 <= x0 <= x1.
double gauss_integral(double c, double x0, double x1) {
  const double s = std::sqrt(c);
  const double a = s * x0, b = s * x1;
  const double scale = 0.5 * std::sqrt(std::numbers::pi / c);
  if (a > 1.0) return scale * (std::erfc(a) - std::erfc(b));
  return scale * (std::erf(b) - std::erf(a));
}

// exp(ls) times the integral of w exp(-c w^2) over [x0, x1].
double first_moment_term(double c, double x0, double x1, double ls) {
  const double lo = std::exp(ls - c * x0 * x0);
  return lo * -std::expm1(-c * (x1 * x1 - x0 * x0)) / (2 * c);
}

// exp(ls) times the integral of w^2 exp(-c w^2) over [x0, x1].
double second_moment_term(double c, double x0, double x1, double ls) {
  const double edge =
      (x0 * std::exp(ls - c * x0 * x0) - x1 * std::exp(ls - c * x1 * x1)) /
      (2 * c);
  return edge + std::exp(ls) * gauss_integral(c, x0, x1) / (2 * c);
}

int interval_of(const SeriesCoefficients& s, double w) {
  int n = 0;
  while (n < s.depth && w < interval_lo(s.w_max, n)) ++n;
  return n;
}

// Per-term sum over [x0, x1] inside interval n, at scale exp(ls).
double interval_mass(const SeriesCoefficients& s, int n, double x0, double x1) {
  double sum = 0;
  for (int i = 0; i <= n; ++i) {
    const double c = pow4(i) * s.k / 2;
    sum += s.scaled[n][i] * std::exp(s.log_scale) * gauss_integral(c, x0, x1);
  }
  return sum;
}

std::vector<double> cell_masses(const SeriesCoefficients& s,
                                std::size_t cells) {
  std::vector<double> out(cells, 0.0);
  if (s.scaled.empty()) return out;
  const double dw = s.w_max / static_cast<double>(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    double lo = static_cast<double>(j) * dw;
    const double hi = static_cast<double>(j + 1) * dw;
    if (hi <= s.lower_edge()) continue;
    lo = std::max(lo, s.lower_edge());
    // Split the cell at dyadic breakpoints it straddles.
    double m = 0;
    double a = lo;
    while (a < hi) {
      const int n = interval_of(s, a);
      const double b = std::min(hi, interval_hi(s.w_max, n));
      m += interval_mass(s, n, a, b);
      a = b;
    }
    out[j] = std::max(m, 0.0);
  }
  return out;
}

}  // namespace

double SeriesCoefficients::coefficient(int n, int i) const {
  return scaled.at(n).at(i) * std::exp(log_scale);
}

double SeriesCoefficients::lower_edge() const {
  return interval_lo(w_max, depth);
}

int default_depth(double w_max) {
  int n = 0;
  while (interval_lo(w_max, n) >= 1.0) ++n;
  return std::max(n, 1);
}

double off_diagonal_factor(int i) {
  double f = 1.0;
  for (int l = 1; l <= i; ++l) f *= 4.0 / (1.0 - pow4(l));
  return f;
}

double off_diagonal_sum() {
  double sum = 0;
  for (int i = 1; i < 40; ++i) sum += std::abs(off_diagonal_factor(i));
  return sum;
}

SeriesCoefficients build_series(double k, double w_max, int depth) {
  if (!(k > 0)) throw Error(ErrorCode::Domain, "build_series needs k > 0");
  if (depth < 1) throw Error(ErrorCode::InvalidArgument, "series depth must be >= 1");
  if (!(w_max > 0)) throw Error(ErrorCode::InvalidArgument, "w_max must be > 0");

  SeriesCoefficients s;
  s.k = k;
  s.w_max = w_max;
  s.depth = depth;
  s.log_scale = k * w_max * w_max / 2;
  s.mass_at_wmax = 1;
  s.unit_mass = true;
  s.scaled.resize(depth + 1);

  std::vector<double> factor(depth + 1);
  for (int i = 0; i <= depth; ++i) factor[i] = off_diagonal_factor(i);

  s.scaled[0] = {k * w_max};
  for (int n = 1; n <= depth; ++n) {
    auto& row = s.scaled[n];
    row.assign(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) row[i] = factor[i] * s.scaled[n - i][0];

    // Continuity at w_n, expressed relative to the i = 0 exponential.
    const double wn = interval_hi(w_max, n);
    auto rel = [&](int i) { return std::exp(-(pow4(i) - 1) * k * wn * wn / 2); };
    double upper = 0, lower = 0;
    for (int i = 0; i < n; ++i) upper += s.scaled[n - 1][i] * rel(i);
    for (int i = 1; i <= n; ++i) lower += row[i] * rel(i);
    row[0] = upper - lower;
    if (n == 1) row[0] -= k * w_max * std::exp(k * wn * wn / 2 - s.log_scale);
  }
  for (const auto& row : s.scaled)
    for (double v : row)
      if (!std::isfinite(v))
        throw Error(ErrorCode::Numerical, "series coefficients are not finite");
  return s;
}

double eval_density(const SeriesCoefficients& s, double w) {
  if (!(w > 0) || w > s.w_max)
    throw Error(ErrorCode::InvalidArgument, "density evaluated outside (0, w_max]");
  if (s.scaled.empty() || w < s.lower_edge()) return 0.0;
  const int n = interval_of(s, w);
  double p = 0;
  for (int i = 0; i <= n; ++i) {
    const double e = s.log_scale - pow4(i) * s.k * w * w / 2;
    if (e > 709)
      throw Error(ErrorCode::Numerical,
                  "density overflows at unit mass; normalize first");
    p += s.scaled[n][i] * std::exp(e);
  }
  return p;
}

double log_density_integral(const SeriesCoefficients& s) {
  double sum = 0;
  for (int n = 0; n <= s.depth; ++n) {
    const double x0 = interval_lo(s.w_max, n), x1 = interval_hi(s.w_max, n);
    for (int i = 0; i <= n; ++i)
      sum += s.scaled[n][i] * gauss_integral(pow4(i) * s.k / 2, x0, x1);
  }
  if (!(sum > 0))
    throw Error(ErrorCode::Numerical, "non-positive density integral");
  return s.log_scale + std::log(sum);
}

SeriesCoefficients normalize_series(const SeriesCoefficients& unit) {
  if (!unit.unit_mass)
    throw Error(ErrorCode::InvalidArgument, "normalize expects unit-mass coefficients");
  const double log_i = log_density_integral(unit);
  // M = 1 / (1 + I)
  const double log_m = log_i > 0 ? -(log_i + std::log1p(std::exp(-log_i)))
                                  : -std::log1p(std::exp(log_i));
  SeriesCoefficients s = unit;
  s.log_scale += log_m;
  s.mass_at_wmax = std::exp(log_m);
  s.unit_mass = false;

  const double edge = s.lower_edge();
  const double residual = edge * std::abs(eval_density(s, edge));
  if (residual > kTruncationTolerance)
    throw Error(ErrorCode::Numerical,
                "series truncation residual above tolerance; increase depth");
  return s;
}

WindowDistribution normalize(const SeriesCoefficients& unit, std::size_t cells) {
  const SeriesCoefficients s = normalize_series(unit);
  return WindowDistribution(s.w_max, cell_masses(s, cells), s.mass_at_wmax);
}

WindowDistribution FixedPoint::distribution(std::size_t cells) const {
  if (series.scaled.empty())
    return WindowDistribution::degenerate_at_wmax(series.w_max, cells);
  return WindowDistribution(series.w_max, cell_masses(series, cells),
                            mass_at_wmax);
}

FixedPoint solve_fixed_point(double k, double w_max) {
  if (!(k >= 0)) throw Error(ErrorCode::Domain, "loss probability must be >= 0");
  FixedPoint fp;
  if (k == 0) {
    fp.series.w_max = w_max;
    fp.series.unit_mass = false;
    fp.mass_at_wmax = 1;
    fp.mean = w_max;
    fp.second_moment = w_max * w_max;
    return fp;
  }
  for (int depth = default_depth(w_max);; depth += 2) {
    try {
      fp.series = normalize_series(build_series(k, w_max, depth));
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Numerical || depth >= kMaxDepth) throw;
    }
  }
  const auto& s = fp.series;
  fp.mass_at_wmax = s.mass_at_wmax;
  fp.truncation_residual = s.lower_edge() * std::abs(eval_density(s, s.lower_edge()));

  double mean = w_max * s.mass_at_wmax;
  double second = w_max * w_max * s.mass_at_wmax;
  for (int n = 0; n <= s.depth; ++n) {
    const double x0 = interval_lo(w_max, n), x1 = interval_hi(w_max, n);
    for (int i = 0; i <= n; ++i) {
      const double c = pow4(i) * k / 2;
      mean += s.scaled[n][i] * first_moment_term(c, x0, x1, s.log_scale);
      second += s.scaled[n][i] * second_moment_term(c, x0, x1, s.log_scale);
    }
  }
  fp.mean = mean;
  fp.second_moment = second;
  return fp;
}

double taylor_mass(double k, double w_max) {
  if (!(k >= 0)) throw Error(ErrorCode::Domain, "loss probability must be >= 0");
  return std::exp(-k * w_max * w_max / 2);
}

namespace {
void require_normalized(const WindowDistribution& d) {
  if (d.cells() == 0 || !d.is_normalized())
    throw Error(ErrorCode::Domain, "moment of an unnormalized distribution");
}
}  // namespace

double mean_window(const WindowDistribution& d) {
  require_normalized(d);
  double m = d.w_max() * d.mass_at_wmax();
  const auto mass = d.cell_mass();
  for (std::size_t i = 0; i < mass.size(); ++i) m += d.cell_center(i) * mass[i];
  return m;
}

double second_moment(const WindowDistribution& d) {
  require_normalized(d);
  double m = d.w_max() * d.w_max() * d.mass_at_wmax();
  const auto mass = d.cell_mass();
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double w = d.cell_center(i);
    m += w * w * mass[i];
  }
  return m;
}

double series_abs_bound(const SeriesCoefficients& s) {
  double worst = 0;
  constexpr int kSamples = 4096;
  for (int j = 1; j <= kSamples; ++j) {
    const double w = s.w_max * j / kSamples;
    if (w < s.lower_edge()) continue;
    const int n = interval_of(s, w);
    double sum = 0;
    for (int i = 0; i <= n; ++i)
      sum += std::abs(s.scaled[n][i]) *
             std::exp(s.log_scale - pow4(i) * s.k * w * w / 2);
    worst = std::max(worst, sum);
  }
  return worst;
}

}  // namespace redmf
