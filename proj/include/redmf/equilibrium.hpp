#pragma once

#include <optional>
#include <string>
#include <vector>

#include "redmf/model.hpp"
#include "redmf/steady_state.hpp"

namespace redmf {

/// Network fixed point with a non-empty queue.
struct EquilibriumState {
  double k_e = 0;   // loss probability
  double q_e = 0;   // queueing delay, s
  double r_e = 0;   // round-trip time, s
  double f_e = 0;   // mean window (packets in flight per user)
  double f2_e = 0;  // second moment of the window distribution
  double m_e = 0;   // mass at w_max
  double b_i_e = 0; // incoming rate per user, packets/s
  double b_o_e = 0; // outgoing rate per user, packets/s
  double a_e = 0;   // advance factor, 1/s
  FixedPoint fixed_point;

  WindowDistribution distribution(std::size_t cells = kDefaultCells) const {
    return fixed_point.distribution(cells);
  }
};

enum class EquilibriumOutcome { Congested, NoCongestion, RampSaturated };

const char* to_string(EquilibriumOutcome o);

struct EquilibriumResult {
  EquilibriumOutcome outcome = EquilibriumOutcome::NoCongestion;
  std::optional<EquilibriumState> state;  // set when Congested
  double residual_at_min_th = 0;
  double residual_at_max_th = 0;
  int iterations = 0;
};

/// Mean window of the fixed point for constant loss k (w_max at k = 0).
double model_mean_window(double k, double w_max);

/// F_model(f(q)) - C (T + q) / (1 - f(q)), packets. Defined on the closed
/// ramp [min_th, max_th].
double residual(double q, const NetworkParams& params, const REDConfig& red);

/// Assembles the full state at loss k and queue q; no consistency check.
EquilibriumState make_equilibrium_state(const NetworkParams& params, double k,
                                        double q);

/// Bisection on the queue over the RED ramp.
EquilibriumResult solve_equilibrium(const NetworkParams& params,
                                    const REDConfig& red);

/// Returns a description of every violated equilibrium relation (empty when
/// all hold). `red` may be null to skip the ramp relation.
std::vector<std::string> check_invariants(const EquilibriumState& eq,
                                          const NetworkParams& params,
                                          const REDConfig* red);

/// Square-root law min(w_max, 1.31 / sqrt(k)).
double sqrt_formula(double k, double w_max);

inline constexpr double kSqrtFormulaAlpha = 1.310;

}  // namespace redmf
