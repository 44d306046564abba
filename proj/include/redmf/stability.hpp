#pragma once

// Local stability of the RED equilibrium (averaging weight w_q = 1).
//
// A perturbation (dF, dM, dQ) = (1, x, y) e^{phi t}, with the delayed terms
// linearized as e^{-phi R} ~ 1 - phi R, reduces to a phi^2 + b phi + c = 0.

#include <array>
#include <complex>

#include "redmf/equilibrium.hpp"

namespace redmf {

inline constexpr double kAlpha = kSqrtFormulaAlpha;
inline constexpr double kAlphaSq = kAlpha * kAlpha;  // 1.7161

struct LinearizedCoefficients {
  double a = 0, b = 0, c = 0;
  double y = 0;   // dQ amplitude per unit dF, s/packet
  double x0 = 0;  // dM amplitude per unit dF at phi = 0
  double u = 0;   // (epsilon y / K)(1 - M)

  /// dM amplitude at a given root.
  std::complex<double> x_at(std::complex<double> phi, double r_e) const;
};

LinearizedCoefficients linearized_coefficients(const EquilibriumState& eq,
                                               const NetworkParams& params,
                                               double epsilon);

struct QuadraticRoots {
  std::array<std::complex<double>, 2> roots{};
  bool degenerate = false;  // a == 0: single root -c/b stored twice
  bool stable = false;      // every real part < 0
  double max_real() const {
    return std::max(roots[0].real(), roots[1].real());
  }
};

QuadraticRoots roots_and_verdict(double a, double b, double c);

/// epsilon < K C / (1 - M) is sufficient for stability.
double sufficient_epsilon_bound(const EquilibriumState& eq,
                                 const NetworkParams& params);

/// U = (1-K)/K * epsilon/(C + epsilon F) * (1-M).
double weak_condition_u(const EquilibriumState& eq, const NetworkParams& params,
                        double epsilon);

/// Bound K C / (1 - alpha sqrt(K) - K) for uncapped windows.
double uncapped_epsilon_bound(double k, double c);

struct TuningResult {
  double beta = 0;           // Q_max / T
  double gamma = 0;          // Min_th / T
  double p_max_bound = 0;
  double epsilon_bound = 0;  // 1/s
  double alpha_sq = kAlphaSq;
};

/// Universal rule epsilon < alpha^2 / ((T + Q_max) W_max) and the matching
/// p_max bound for a ramp from min_th to q_max.
TuningResult tune_red(double prop_delay, double q_max, double min_th,
                      double w_max);

/// 1 - M - k F2 / 2, the normalized growth rate of the mean window.
double second_moment_dynamics_check(const WindowDistribution& dist, double k);

struct StabilityReport {
  LinearizedCoefficients coeffs;
  QuadraticRoots roots;
  std::complex<double> x_dominant;  // dM amplitude at the dominant root
  double epsilon = 0;
  double sufficient_bound = 0;
  double uncapped_bound = 0;  // NaN outside its validity range
  double universal_bound = 0;
  double phi_r = 0;            // (b / 2a) R^e
  bool sufficient_ok = false;
  bool weak_u = false;
  bool uncapped_ok = false;
  bool universal_ok = false;
  bool roots_negative = false;
  bool small_phi_ok = false;
};

StabilityReport analyze_stability(const EquilibriumState& eq,
                                  const NetworkParams& params,
                                  double epsilon, double q_max);

}  // namespace redmf
