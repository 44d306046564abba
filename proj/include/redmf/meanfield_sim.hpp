#pragma once

// Time integration of the closed-loop mean-field system: window density
// transport with loss/halving terms, the atom at w_max, ACK-clocked advance
// factor, delayed loss feedback, flight conservation and the router queue.

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "redmf/model.hpp"

namespace redmf {

/// Sampled past of the queue, loss, flight and output rate, plus the forward
/// RTT map (arrival time s + T + Q(s) -> RTT T + Q(s)).
class DelayHistory {
 public:
  DelayHistory(double prop_delay, double horizon);

  /// Appends the values at time t (must exceed the last sample time).
  void push(double t, double q, double k, double f, double b_o);
  /// Fills [t0 - horizon, t0] with constant values.
  void prefill(double t0, double q, double k, double f, double b_o);

  double rtt_at(double t) const;
  double q_at(double t) const { return interp(t, &Sample::q); }
  double k_at(double t) const { return interp(t, &Sample::k); }
  double f_at(double t) const { return interp(t, &Sample::f); }
  double b_o_at(double t) const { return interp(t, &Sample::b_o); }

  double first_time() const { return samples_.front().t; }
  double last_time() const { return samples_.back().t; }
  std::size_t size() const { return samples_.size(); }

 private:
  struct Sample {
    double t, q, k, f, b_o;
  };
  struct Arrival {
    double at, rtt;
  };
  double interp(double t, double Sample::*field) const;
  void prune();

  double prop_delay_;
  double horizon_;
  std::deque<Sample> samples_;
  std::deque<Arrival> arrivals_;
};

/// Round-trip time R(t) from the history's forward map.
double rtt_now(const DelayHistory& hist, double t);
/// kappa(t) = K(t - R(t)).
double delayed_loss(const DelayHistory& hist, double t);

struct SimState {
  double t = 0;
  WindowDistribution dist;
  double q = 0;         // queueing delay, s
  double f = 0;         // mean window, packets
  double b_i = 0;       // packets/s per user
  double b_o = 0;       // packets/s per user
  double k = 0;         // drop probability at the router now
  double kappa = 0;     // loss indication seen by sources
  double a_factor = 0;  // 1/s
  double avg_q = 0;     // EWMA queue (equals q for w_q = 1)
  double rtt = 0;
  double f2 = 0;        // second moment of the windows
  double mass_drift = 0;
};

/// A(t) = B_o(t - T) / ((1 - K(t - R)) F(t - R)).
double advance_factor(const DelayHistory& hist, const NetworkParams& params,
                      double t);

enum class StartMode { Warm, Cold, Equilibrium };

struct SimOptions {
  std::size_t cells = kDefaultCells;
  double dt = 0;         // 0 selects min(dw / (2 A_max), T / 50)
  double cfl = 0.5;
  double t_end = 10;
  double warmup = 0;     // statistics start here
  double sample_interval = 1e-3;  // output decimation; 0 keeps every step
  StartMode start = StartMode::Warm;
  double warm_k = 0;     // 0 picks a square-root-law guess
  double initial_queue = 0;
};

struct SeriesRow {
  double t, q, f, m, b_i, b_o, k, kappa, a_factor, rtt, utilization;
};

struct RunSummary {
  double utilization = 0;   // time average of B_o / C over [warmup, t_end]
  double q_mean = 0, q_min = 0, q_max = 0, q_std = 0;
  double k_mean = 0;
  double max_mass_drift = 0;
  std::size_t steps = 0;
};

class Simulator {
 public:
  Simulator(NetworkParams params, LossModel loss, SimOptions opts);

  /// Starts from an explicit distribution and queue.
  Simulator(NetworkParams params, LossModel loss, SimOptions opts,
            const WindowDistribution& initial, double initial_queue);

  /// Current state; `dist` is refreshed from the working grid on access.
  const SimState& state() const;
  const DelayHistory& history() const { return hist_; }
  const NetworkParams& params() const { return params_; }
  double dt() const { return dt_; }

  /// One explicit step of at most dt(); returns the step actually taken.
  double step();

  /// Runs to opts.t_end, calling `on_sample` at the decimated output times.
  RunSummary run(const std::function<void(const SeriesRow&)>& on_sample = {});

  /// Forces the router loss to follow `k_of_t` instead of the loss model
  /// (queue still integrates). Used to probe the delay line.
  void override_loss(std::function<double(double)> k_of_t) {
    loss_override_ = std::move(k_of_t);
  }

 private:
  void init(const WindowDistribution& initial, double q0);
  double router_loss(double q_ref) const;

  NetworkParams params_;
  LossModel loss_;
  SimOptions opts_;
  DelayHistory hist_;
  mutable SimState state_;
  mutable bool dist_stale_ = false;
  std::vector<double> mass_;  // working cell masses
  std::vector<double> scratch_;
  double atom_ = 0;
  double dt_ = 0;
  double dw_ = 0;
  std::function<double(double)> loss_override_;
};

/// Queue time series statistics used to tell convergence from oscillation.
struct OscillationStats {
  double mean = 0, min = 0, max = 0, amplitude = 0;  // amplitude = max - min
};
OscillationStats queue_stats(const std::vector<SeriesRow>& rows, double t_from);

}  // namespace redmf
