#pragma once

// The numbered acceptance checks, runnable from the library so the CLI and
// the acceptance binary report the same thing.

#include <string>

#include "redmf/scenario.hpp"

namespace redmf {

inline constexpr int kCriterionCount = 8;

struct ValidationOptions {
  Scenario scenario;  // the reference router; defaults match scenarios/isp.scn
  int threads = 0;    // for the oracle and sweeps, see sweep_threads()
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

/// Runs criterion `id` in 1..kCriterionCount. Numerical failures inside a
/// check are reported as a failing result, not thrown.
CriterionResult run_criterion(int id, const ValidationOptions& opts);

}  // namespace redmf
