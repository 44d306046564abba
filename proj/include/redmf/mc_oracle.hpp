#pragma once

// Brute-force AIMD flows with independent per-packet loss, used to validate
// the analytic window distribution and the integrator's transients.

#include <cstdint>
#include <random>
#include <vector>

#include "redmf/model.hpp"

namespace redmf {

struct FlowState {
  double window = 1;
  double w_max = 64;
};

/// One ACK (or loss indication): halve with probability k, floor 1;
/// otherwise grow by 1/window, capped at w_max.
void ack_event(FlowState& flow, double k, std::mt19937_64& rng);

struct OracleOptions {
  int n_flows = 16;
  double k = 0;
  std::uint64_t n_events = 10'000'000;  // total over all flows, after burn-in
  std::uint64_t burn_in = 0;            // per flow; 0 selects 1000 * w_max
  std::uint64_t seed = 1;
  double w_max = 64;
  std::size_t cells = kDefaultCells;
  int threads = 1;
};

struct OracleResult {
  /// Time-weighted window distribution on the shared grid (an event at
  /// window w lasts R / w of ACK-clock time).
  WindowDistribution dist;
  double mean = 0;
  double second_moment = 0;
  double mass_at_wmax = 0;
  std::uint64_t events = 0;
  /// Largest relative standard error (across-flow batch means) of the unit
  /// bins holding at least 1e-3 of the mass.
  double max_rel_se = 0;
  bool insufficient_samples = false;
};

OracleResult run_oracle(const OracleOptions& opts);

/// Masses on bins of `width` packets over (0, w_max], with the atom last.
std::vector<double> coarse_bins(const WindowDistribution& dist, double width = 1.0);

/// Total variation distance on coarse bins.
double tv_distance(const WindowDistribution& a, const WindowDistribution& b,
                   double width = 1.0);

/// Mean window over time for flows started from `initial` with loss k and a
/// constant RTT (each flow ACKs at rate window / rtt).
std::vector<double> oracle_transient(const WindowDistribution& initial, double k,
                                     double rtt, const std::vector<double>& times,
                                     int n_flows, std::uint64_t seed);

}  // namespace redmf
