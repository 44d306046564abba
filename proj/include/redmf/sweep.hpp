#pragma once

// Independent simulator runs over a grid of user counts and RED p_max values,
// each paired with the equilibrium and the root-based stability verdict.

#include <string>
#include <vector>

#include "redmf/meanfield_sim.hpp"
#include "redmf/scenario.hpp"

namespace redmf {

struct SweepOptions {
  int n_from = 10;
  int n_to = 130;
  int n_step = 5;
  std::vector<double> p_max_grid;  // empty uses the scenario's p_max
  int threads = 0;                 // 0 uses every core, capped by REDMF_THREADS
  /// A run oscillates when its queue range after warmup exceeds this
  /// fraction of the buffer.
  double oscillation_fraction = 0.02;
};

struct SweepRow {
  int n_users = 0;
  double p_max = 0;  // 0 for drop-tail and constant loss
  RunSummary sim;
  bool oscillating = false;
  std::string equilibrium;  // outcome name, or "none" without RED
  double q_e = 0;
  bool roots_stable = false;
  double max_real_root = 0;  // 1/s
};

/// Worker count: `requested` (or hardware concurrency when 0), never more
/// than REDMF_THREADS when that is set to a positive integer.
int sweep_threads(int requested);

/// Rows ordered by p_max then n_users regardless of thread scheduling.
std::vector<SweepRow> run_sweep(const Scenario& base, const SweepOptions& opts);

bool is_oscillating(const RunSummary& s, double buffer_delay, double fraction);

}  // namespace redmf
