#include "redmf/stability.hpp"

#include <cmath>
#include <limits>

namespace redmf {

std::complex<double> LinearizedCoefficients::x_at(std::complex<double> phi,
                                                  double r_e) const {
  // -x = R phi (1 - U) + K F + U  (with K F + U = -x0)
  return -(r_e * phi * (1.0 - u)) + x0;
}

LinearizedCoefficients linearized_coefficients(const EquilibriumState& eq,
                                               const NetworkParams& params,
                                               double epsilon) {
  if (!(eq.k_e > 0))
    throw Error(ErrorCode::Domain, "linearization needs a congested equilibrium (K > 0)");
  if (epsilon < 0) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  const double K = eq.k_e, F = eq.f_e, M = eq.m_e, R = eq.r_e;
  const double W = params.w_max, C = params.capacity_per_user;

  LinearizedCoefficients l;
  l.y = (1 - K) / (C + epsilon * F);
  l.u = epsilon * l.y / K * (1 - M);
  l.x0 = -(K * F + l.u);
  l.a = R * R * (1 - l.u);
  l.b = R * (K * F + l.u + K * W * (1 - l.u) + M * W);
  // phi^0 terms of (R phi + K W)(-x) + M K W - M W eps y (1 - R phi); the
  // M K W source is p(W) dF after multiplying the atom equation by R = 1/A.
  l.c = K * W * (K * F + l.u) + M * K * W - M * W * epsilon * l.y;
  return l;
}

QuadraticRoots roots_and_verdict(double a, double b, double c) {
  QuadraticRoots r;
  if (a == 0) {
    if (b == 0) throw Error(ErrorCode::Domain, "quadratic and linear terms both vanish");
    r.degenerate = true;
    r.roots = {std::complex<double>(-c / b), std::complex<double>(-c / b)};
  } else {
    const double disc = b * b - 4 * a * c;
    if (disc >= 0) {
      const double s = std::sqrt(disc);
      const double q = -0.5 * (b + (b >= 0 ? s : -s));
      if (q == 0) {
        r.roots = {0.0, 0.0};
      } else {
        r.roots = {std::complex<double>(q / a), std::complex<double>(c / q)};
      }
    } else {
      const double re = -b / (2 * a), im = std::sqrt(-disc) / (2 * std::abs(a));
      r.roots = {std::complex<double>(re, im), std::complex<double>(re, -im)};
    }
  }
  r.stable = r.max_real() < 0;
  return r;
}

double sufficient_epsilon_bound(const EquilibriumState& eq,
                                 const NetworkParams& params) {
  if (eq.m_e >= 1) return std::numeric_limits<double>::infinity();
  return eq.k_e * params.capacity_per_user / (1 - eq.m_e);
}

double weak_condition_u(const EquilibriumState& eq, const NetworkParams& params,
                        double epsilon) {
  if (!(eq.k_e > 0)) throw Error(ErrorCode::Domain, "U needs K > 0");
  const double C = params.capacity_per_user;
  return (1 - eq.k_e) / eq.k_e * epsilon / (C + epsilon * eq.f_e) * (1 - eq.m_e);
}

double uncapped_epsilon_bound(double k, double c) {
  const double denom = 1 - kAlpha * std::sqrt(k) - k;
  if (!(k > 0) || k >= 0.54 || denom <= 0)
    throw Error(ErrorCode::Domain, "uncapped bound needs 0 < k and 1 - alpha sqrt(k) - k > 0");
  return k * c / denom;
}

TuningResult tune_red(double prop_delay, double q_max, double min_th,
                      double w_max) {
  if (!(prop_delay > 0) || !(w_max > 0) || min_th < 0)
    throw Error(ErrorCode::InvalidArgument, "tune_red needs T > 0, w_max > 0, min_th >= 0");
  if (min_th > q_max) throw Error(ErrorCode::InvalidArgument, "tune_red needs min_th <= q_max");
  TuningResult t;
  t.beta = q_max / prop_delay;
  t.gamma = min_th / prop_delay;
  t.epsilon_bound = kAlphaSq / ((prop_delay + q_max) * w_max);
  t.p_max_bound = (t.beta - t.gamma) / (t.beta + 1) * kAlphaSq / w_max;
  return t;
}

double second_moment_dynamics_check(const WindowDistribution& dist, double k) {
  return 1 - dist.mass_at_wmax() - 0.5 * k * second_moment(dist);
}

StabilityReport analyze_stability(const EquilibriumState& eq,
                                  const NetworkParams& params, double epsilon,
                                  double q_max) {
  StabilityReport r;
  r.epsilon = epsilon;
  r.coeffs = linearized_coefficients(eq, params, epsilon);
  r.roots = roots_and_verdict(r.coeffs.a, r.coeffs.b, r.coeffs.c);
  const auto dominant = r.roots.roots[0].real() >= r.roots.roots[1].real()
                            ? r.roots.roots[0]
                            : r.roots.roots[1];
  r.x_dominant = r.coeffs.x_at(dominant, eq.r_e);
  r.sufficient_bound = sufficient_epsilon_bound(eq, params);
  try {
    r.uncapped_bound = uncapped_epsilon_bound(eq.k_e, params.capacity_per_user);
    r.uncapped_ok = epsilon < r.uncapped_bound;
  } catch (const Error&) {
    r.uncapped_bound = std::numeric_limits<double>::quiet_NaN();
  }
  r.universal_bound = kAlphaSq / ((params.prop_delay + q_max) * params.w_max);
  r.sufficient_ok = epsilon < r.sufficient_bound;
  r.weak_u = r.coeffs.u < 1;
  r.universal_ok = epsilon < r.universal_bound;
  r.roots_negative = r.roots.stable;
  r.phi_r = r.coeffs.a != 0 ? r.coeffs.b / (2 * r.coeffs.a) * eq.r_e
                            : std::numeric_limits<double>::infinity();
  r.small_phi_ok = std::abs(r.phi_r) < 1.0;
  return r;
}

}  // namespace redmf
