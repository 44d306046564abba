#pragma once

// Scenario files: one `key = value` per line, SI units, '#' starts a comment.

#include <cstdint>
#include <string>
#include <string_view>

#include "redmf/meanfield_sim.hpp"
#include "redmf/model.hpp"

namespace redmf {

enum class LossKind { Red, DropTail, Constant };

struct Scenario {
  double capacity_bps = 1e9;
  double packet_bytes = 1024;
  double overhead_bytes = 40;
  double prop_delay_s = 0.010;
  double buffer_delay_s = 0.002;
  int n_users = 50;
  double w_max = 64;
  LossKind loss_model = LossKind::Red;
  REDConfig red{0.0004, 0.002, 0.005, 1.0};
  RedMode red_mode = RedMode::Instantaneous;
  double constant_k = 0;

  // Run controls.
  double t_end_s = 20;
  double warmup_s = 10;
  double dt_s = 0;  // 0 lets the integrator choose
  double sample_interval_s = 1e-3;
  std::size_t cells = kDefaultCells;
  StartMode start = StartMode::Warm;
  std::uint64_t seed = 1;
  std::string out;

  NetworkParams network() const;
  LossModel loss() const;
  SimOptions sim_options() const;

  bool operator==(const Scenario&) const = default;
};

/// Throws Error(Parse) with the line number on unknown keys, duplicates or
/// malformed values.
Scenario parse_scenario(std::string_view text);
/// Sets one key as if it appeared in a file; throws Error(Parse).
void set_scenario_key(Scenario& s, std::string_view key, std::string_view value);
/// The value as it would be emitted; throws Error(Parse) on unknown keys.
std::string get_scenario_key(const Scenario& s, std::string_view key);
/// Throws Error(Io) when the file cannot be read.
Scenario load_scenario(const std::string& path);
/// Emits every key; doubles are written with enough digits to round-trip.
std::string emit_scenario(const Scenario& s);

const char* to_string(LossKind k);

}  // namespace redmf
