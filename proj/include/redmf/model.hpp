#pragma once

// Shared domain types for the mean-field TCP/RED model.
//
// Conventions: queue sizes and delays are in seconds, windows in packets,
// rates in packets/second *per user* (aggregate rate is n_users times that).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace redmf {

enum class ErrorCode : int {
  InvalidArgument = 1,
  Domain = 2,
  Numerical = 3,
  Parse = 4,
  Io = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct NetworkParams {
  double capacity_per_user = 0;  // C, packets/s
  double prop_delay = 0;         // T, s
  int n_users = 0;               // N
  double w_max = 0;              // packets
  double buffer_delay = 0;       // Q_max, s
  double packet_size = 0;        // bytes on the wire, for conversions only

  double aggregate_capacity() const { return capacity_per_user * n_users; }
  void validate() const;
};

/// Builds per-user parameters from link-level figures (bits/s, bytes).
NetworkParams make_network_params(double capacity_bps, double packet_bytes,
                                  double overhead_bytes, double prop_delay,
                                  double buffer_delay, int n_users,
                                  double w_max);

struct REDConfig {
  double min_th = 0;  // s
  double max_th = 0;  // s
  double p_max = 0;
  double w_q = 1;

  /// Slope of the drop ramp, probability per second of queue.
  double epsilon() const { return p_max / (max_th - min_th); }
  void validate() const;

  bool operator==(const REDConfig&) const = default;
};

/// Drop probability of the RED ramp at queue delay q (seconds).
/// Above max_th every packet is dropped.
double red_drop_probability(const REDConfig& cfg, double q);

enum class RedMode { Instantaneous, Ewma };

struct RedLoss {
  REDConfig cfg;
  RedMode mode = RedMode::Instantaneous;
};
struct DropTailLoss {
  double buffer_delay = 0;
};
struct ConstantLoss {
  double k = 0;
};
using LossModel = std::variant<RedLoss, DropTailLoss, ConstantLoss>;

enum class Unit { Packets, Seconds, BitsPerSecond, PacketsPerSecond };

/// Converts between queue units (packets <-> seconds of aggregate service)
/// and rate units (bits/s <-> packets/s), using n_users * capacity_per_user
/// and packet_size.
double units_convert(const NetworkParams& params, double value, Unit from,
                     Unit to);

/// Window-size distribution: cell-averaged density on a uniform grid over
/// (0, w_max] plus an atom of mass at w_max.
class WindowDistribution {
 public:
  static constexpr double kNormTolerance = 1e-8;

  WindowDistribution() = default;
  /// Takes per-cell probability masses (not densities). Throws when the
  /// total mass is not 1 within kNormTolerance or any mass is negative.
  WindowDistribution(double w_max, std::vector<double> cell_mass,
                     double mass_at_wmax);

  /// Constructs without the normalization check; used by the time
  /// integrator whose state is monitored separately.
  static WindowDistribution unchecked(double w_max,
                                      std::vector<double> cell_mass,
                                      double mass_at_wmax);

  /// Everything at w_max.
  static WindowDistribution degenerate_at_wmax(double w_max,
                                               std::size_t cells);
  /// Everything in the cell containing w.
  static WindowDistribution point_mass(double w_max, std::size_t cells,
                                       double w);

  double w_max() const { return w_max_; }
  std::size_t cells() const { return mass_.size(); }
  double cell_width() const { return w_max_ / static_cast<double>(mass_.size()); }
  double cell_center(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) * cell_width();
  }
  double density(std::size_t i) const { return mass_[i] / cell_width(); }
  std::span<const double> cell_mass() const { return mass_; }
  double mass_at_wmax() const { return atom_; }
  double total_mass() const;
  bool is_normalized(double tol = kNormTolerance) const;

 private:
  double w_max_ = 0;
  std::vector<double> mass_;
  double atom_ = 0;
};

/// Default grid resolution: w_max / 1024 spacing.
inline constexpr std::size_t kDefaultCells = 1024;

}  // namespace redmf
