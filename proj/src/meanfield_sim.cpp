#include "redmf/meanfield_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "redmf/equilibrium.hpp"
#include "redmf/steady_state.hpp"

namespace redmf {

namespace {

// 1 - exp(-x) without cancellation and without a libm call for small x.
inline double loss_fraction(double x) {
  if (x < 1e-4) return x * (1 - 0.5 * x);
  return -std::expm1(-x);
}

}  // namespace

DelayHistory::DelayHistory(double prop_delay, double horizon)
    : prop_delay_(prop_delay), horizon_(horizon) {
  if (!(prop_delay > 0) || !(horizon > prop_delay))
    throw Error(ErrorCode::InvalidArgument, "history needs 0 < T < horizon");
}

void DelayHistory::push(double t, double q, double k, double f, double b_o) {
  if (!samples_.empty()) {
    if (t < samples_.back().t)
      throw Error(ErrorCode::Numerical, "history times must increase");
    if (t == samples_.back().t) samples_.pop_back();
  }
  samples_.push_back({t, q, k, f, b_o});
  const double at = t + prop_delay_ + q;
  // Q drains at most one second per second, so arrivals never go backwards
  // by more than rounding; keep the newest sample for a given arrival time.
  while (!arrivals_.empty() && arrivals_.back().at >= at) arrivals_.pop_back();
  arrivals_.push_back({at, prop_delay_ + q});
  prune();
}

void DelayHistory::prefill(double t0, double q, double k, double f, double b_o) {
  samples_.clear();
  arrivals_.clear();
  push(t0 - horizon_, q, k, f, b_o);
  push(t0, q, k, f, b_o);
}

void DelayHistory::prune() {
  const double cut = samples_.back().t - horizon_;
  while (samples_.size() > 2 && samples_[1].t <= cut) samples_.pop_front();
  // Arrival entries are looked up at the current time or later; keep one
  // entry at or before the oldest useful time.
  while (arrivals_.size() > 2 && arrivals_[1].at <= cut) arrivals_.pop_front();
}

double DelayHistory::interp(double t, double Sample::*field) const {
  if (samples_.empty() || t < samples_.front().t || t > samples_.back().t)
    throw Error(ErrorCode::Numerical, "history lookup outside the stored window");
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const Sample& s) { return v < s.t; });
  if (it == samples_.end()) return samples_.back().*field;
  const Sample& hi = *it;
  const Sample& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.*field + w * (hi.*field - lo.*field);
}

double DelayHistory::rtt_at(double t) const {
  if (arrivals_.empty() || t < arrivals_.front().at)
    throw Error(ErrorCode::Numerical, "insufficient history for the RTT lookup");
  auto it = std::upper_bound(arrivals_.begin(), arrivals_.end(), t,
                             [](double v, const Arrival& a) { return v < a.at; });
  if (it == arrivals_.end())
    throw Error(ErrorCode::Numerical, "RTT lookup beyond the latest arrival");
  const Arrival& hi = *it;
  const Arrival& lo = *(it - 1);
  const double w = (t - lo.at) / (hi.at - lo.at);
  return lo.rtt + w * (hi.rtt - lo.rtt);
}

double rtt_now(const DelayHistory& hist, double t) { return hist.rtt_at(t); }

double delayed_loss(const DelayHistory& hist, double t) {
  return hist.k_at(t - hist.rtt_at(t));
}

double advance_factor(const DelayHistory& hist, const NetworkParams& params,
                      double t) {
  const double r = hist.rtt_at(t);
  const double f = hist.f_at(t - r);
  if (!(f > 0)) throw Error(ErrorCode::Numerical, "vanishing flight in history");
  const double k = std::min(hist.k_at(t - r), 1 - 1e-9);
  return hist.b_o_at(t - params.prop_delay) / ((1 - k) * f);
}

Simulator::Simulator(NetworkParams params, LossModel loss, SimOptions opts)
    : params_(params),
      loss_(std::move(loss)),
      opts_(opts),
      hist_(params.prop_delay > 0 ? params.prop_delay : 1.0,
            2 * (params.prop_delay + params.buffer_delay) + 1e-3) {
  params_.validate();
  if (opts_.cells < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 cells");

  double q0 = opts_.initial_queue;
  WindowDistribution init_dist;
  auto warm = [&] {
    double k = opts_.warm_k;
    if (!(k > 0)) {
      if (auto* c = std::get_if<ConstantLoss>(&loss_)) {
        k = c->k;
      } else {
        const double pipe = params_.capacity_per_user *
                            (params_.prop_delay + 0.5 * params_.buffer_delay);
        k = std::pow(kSqrtFormulaAlpha / pipe, 2);
      }
    }
    k = std::clamp(k, 1e-6, 0.2);
    init_dist = solve_fixed_point(k, params_.w_max).distribution(opts_.cells);
  };

  switch (opts_.start) {
    case StartMode::Cold:
      init_dist = WindowDistribution::point_mass(params_.w_max, opts_.cells, 1.0);
      break;
    case StartMode::Warm:
      warm();
      break;
    case StartMode::Equilibrium:
      if (auto* r = std::get_if<RedLoss>(&loss_)) {
        auto eq = solve_equilibrium(params_, r->cfg);
        if (!eq.state)
          throw Error(ErrorCode::Domain, "no congested equilibrium to start from");
        init_dist = eq.state->distribution(opts_.cells);
        q0 = eq.state->q_e;
      } else {
        warm();
      }
      break;
  }
  init(init_dist, q0);
}

Simulator::Simulator(NetworkParams params, LossModel loss, SimOptions opts,
                     const WindowDistribution& initial, double initial_queue)
    : params_(params),
      loss_(std::move(loss)),
      opts_(opts),
      hist_(params.prop_delay > 0 ? params.prop_delay : 1.0,
            2 * (params.prop_delay + params.buffer_delay) + 1e-3) {
  params_.validate();
  if (initial.w_max() != params_.w_max)
    throw Error(ErrorCode::InvalidArgument, "initial distribution has a different w_max");
  opts_.cells = initial.cells();
  init(initial, initial_queue);
}

double Simulator::router_loss(double q_ref) const {
  if (loss_override_) return loss_override_(state_.t);
  if (auto* r = std::get_if<RedLoss>(&loss_)) return red_drop_probability(r->cfg, q_ref);
  if (auto* c = std::get_if<ConstantLoss>(&loss_)) return c->k;
  return 0.0;  // drop-tail drops only on overflow
}

void Simulator::init(const WindowDistribution& initial, double q0) {
  if (q0 < 0 || q0 > params_.buffer_delay)
    throw Error(ErrorCode::InvalidArgument, "initial queue outside [0, buffer]");
  if (!initial.is_normalized(1e-6))
    throw Error(ErrorCode::InvalidArgument, "initial distribution is not normalized");
  if (auto* r = std::get_if<RedLoss>(&loss_)) r->cfg.validate();
  if (auto* c = std::get_if<ConstantLoss>(&loss_)) {
    if (!(c->k >= 0 && c->k < 1))
      throw Error(ErrorCode::InvalidArgument, "constant loss must be in [0, 1)");
  }

  const auto cm = initial.cell_mass();
  mass_.assign(cm.begin(), cm.end());
  scratch_.assign(mass_.size(), 0.0);
  atom_ = initial.mass_at_wmax();
  dw_ = initial.cell_width();

  const double c = params_.capacity_per_user, t_prop = params_.prop_delay;
  state_ = SimState{};
  double f = atom_ * params_.w_max, f2 = atom_ * params_.w_max * params_.w_max;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    const double w = (i + 0.5) * dw_;
    f += w * mass_[i];
    f2 += w * w * mass_[i];
  }
  // Flight conservation keeps F minus the packets held in the links and the
  // queue constant forever, so the prefilled history must agree with F:
  // (1 - K) F = b_o T + q C. The output rate absorbs the mismatch first and
  // the queue second.
  double k0 = router_loss(q0);
  double b_o = ((1 - k0) * f - q0 * c) / t_prop;
  if (b_o > c) {
    b_o = c;
    q0 = std::min(params_.buffer_delay, ((1 - k0) * f - c * t_prop) / c);
  } else if (b_o < 0) {
    b_o = 0;
    q0 = (1 - k0) * f / c;
  }
  k0 = router_loss(q0);
  state_.q = q0;
  state_.avg_q = q0;
  state_.f = f;
  state_.f2 = f2;
  state_.k = k0;
  state_.kappa = k0;
  state_.rtt = t_prop + q0;
  state_.b_i = f / state_.rtt;
  state_.b_o = b_o;
  state_.a_factor = state_.b_o / ((1 - state_.k) * f);
  state_.dist = WindowDistribution::unchecked(params_.w_max, mass_, atom_);
  hist_.prefill(0.0, q0, state_.k, f, state_.b_o);

  // A <= C / ((1 - K) F) is bounded by about 1 / T near equilibrium; the
  // step is shrunk further whenever the actual A demands it.
  dt_ = opts_.dt > 0 ? opts_.dt : std::min(dw_ * t_prop / 2, t_prop / 50);
}

double Simulator::step() {
  const double t = state_.t;
  const double c = params_.capacity_per_user, wmax = params_.w_max;
  const std::size_t n = mass_.size();

  // Rates are stored at step midpoints, so the delayed terms are read at
  // t + dt / 2; a half-step offset would leak (dt / 2) dB of flight per
  // change of the output rate.
  double dt = dt_;
  double r = 0, kd = 0, bod = 0, a = 0;
  for (int attempt = 0;; ++attempt) {
    const double tm = t + 0.5 * dt;
    r = hist_.rtt_at(tm);
    kd = std::min(hist_.k_at(tm - r), 1 - 1e-9);
    const double fd = hist_.f_at(tm - r);
    bod = hist_.b_o_at(tm - params_.prop_delay);
    if (!(fd > 0)) throw Error(ErrorCode::Numerical, "vanishing flight in history");
    a = bod / ((1 - kd) * fd);
    if (!std::isfinite(a)) throw Error(ErrorCode::Numerical, "advance factor is not finite");
    if (a * dt <= opts_.cfl * dw_ * (1 + 1e-12)) break;
    if (attempt == 8) throw Error(ErrorCode::Numerical, "CFL violated");
    dt = 0.9 * opts_.cfl * dw_ / a;
  }
  const double nu = a * dt / dw_;

  // Windows: upwind transport, loss of w -> w/2 deposited so that the first
  // moment is preserved, atom fed by the top cell and leaking to w_max/2.
  std::fill(scratch_.begin(), scratch_.end(), 0.0);
  const double loss_rate = kd * a * dt * dw_;  // x_i = loss_rate * (i + 0.5)
  double carry = 0;  // transported mass entering cell i from i - 1
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mass_[i];
    const double lost = loss_rate > 0 ? m * loss_fraction(loss_rate * (i + 0.5)) : 0.0;
    const double rem = m - lost;
    scratch_[i] += rem * (1 - nu) + carry;
    carry = rem * nu;
    if (lost > 0) {
      // Target (i + 0.5) dw / 2 sits a quarter cell off the centre of i / 2.
      const std::size_t j = i / 2;
      if (i % 2 == 0) {
        if (j == 0) {
          scratch_[0] += lost;
        } else {
          scratch_[j] += 0.75 * lost;
          scratch_[j - 1] += 0.25 * lost;
        }
      } else {
        scratch_[j] += 0.75 * lost;
        scratch_[j + 1] += 0.25 * lost;
      }
    }
  }
  const double atom_lost = kd > 0 ? atom_ * loss_fraction(kd * a * wmax * dt) : 0.0;
  const double atom_new = atom_ - atom_lost + carry;
  scratch_[n / 2 - 1] += 0.5 * atom_lost;
  scratch_[n / 2] += 0.5 * atom_lost;

  double f = atom_new * wmax, f2 = atom_new * wmax * wmax, total = atom_new;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = scratch_[i];
    if (m < -1e-12) throw Error(ErrorCode::Numerical, "negative density");
    const double w = (i + 0.5) * dw_;
    total += m;
    f += w * m;
    f2 += w * w * m;
  }
  if (!std::isfinite(f) || !(f > 0)) throw Error(ErrorCode::Numerical, "flight is not finite");

  // Sending rate from flight conservation, with dF taken from the windows.
  const double fdot = (f - state_.f) / dt;
  const double b_i = std::max(0.0, fdot + bod / (1 - kd));

  // Router.
  const double q = state_.q;
  const double k_aqm = std::clamp(router_loss(state_.avg_q), 0.0, 1.0);
  double accepted = b_i * (1 - k_aqm);
  double q_new = q + (accepted - c) / c * dt;
  double b_o = c;
  if (q_new < 0) {
    b_o = accepted + q * c / dt;  // empties during the step
    q_new = 0;
  }
  if (q_new > params_.buffer_delay) {
    accepted -= (q_new - params_.buffer_delay) * c / dt;
    q_new = params_.buffer_delay;
  }
  const double k_now = b_i > 0 ? std::clamp(1 - accepted / b_i, 0.0, 1.0) : k_aqm;

  hist_.push(t + 0.5 * dt, 0.5 * (q + q_new), k_now, 0.5 * (state_.f + f), b_o);

  double avg_q = q_new;
  if (auto* red = std::get_if<RedLoss>(&loss_);
      red && red->mode == RedMode::Ewma && red->cfg.w_q < 1) {
    const double lambda = -params_.n_users * b_i * std::log1p(-red->cfg.w_q);
    avg_q = state_.avg_q + (-std::expm1(-lambda * dt)) * (q_new - state_.avg_q);
  }

  mass_.swap(scratch_);
  atom_ = atom_new;
  state_.t = t + dt;
  state_.q = q_new;
  state_.avg_q = avg_q;
  state_.f = f;
  state_.f2 = f2;
  state_.b_i = b_i;
  state_.b_o = b_o;
  state_.k = k_now;
  state_.kappa = kd;
  state_.a_factor = a;
  state_.rtt = r;
  state_.mass_drift = total - 1;
  dist_stale_ = true;
  return dt;
}

RunSummary Simulator::run(const std::function<void(const SeriesRow&)>& on_sample) {
  RunSummary s;
  const double t_end = opts_.t_end, t0 = opts_.warmup;
  double next_out = state_.t;
  double acc_t = 0, acc_bo = 0, acc_q = 0, acc_q2 = 0, acc_k = 0, acc_util = 0;
  s.q_min = std::numeric_limits<double>::infinity();
  s.q_max = -s.q_min;

  auto emit = [&] {
    if (!on_sample) return;
    const double util = acc_t > 0 ? acc_util / acc_t : state_.b_o / params_.capacity_per_user;
    on_sample({state_.t, state_.q, state_.f, atom_, state_.b_i, state_.b_o, state_.k,
               state_.kappa, state_.a_factor, state_.rtt, util});
  };

  while (state_.t < t_end - 1e-12) {
    if (state_.t >= next_out) {
      emit();
      next_out += opts_.sample_interval > 0 ? opts_.sample_interval : 0;
      if (next_out <= state_.t) next_out = state_.t + opts_.sample_interval;
    }
    const double q_before = state_.q;
    const double t_before = state_.t;
    const double dt = step();
    ++s.steps;
    s.max_mass_drift = std::max(s.max_mass_drift, std::abs(state_.mass_drift));
    if (t_before >= t0) {
      acc_t += dt;
      acc_bo += state_.b_o * dt;
      acc_util += state_.b_o / params_.capacity_per_user * dt;
      acc_q += q_before * dt;
      acc_q2 += q_before * q_before * dt;
      acc_k += state_.k * dt;
      s.q_min = std::min(s.q_min, q_before);
      s.q_max = std::max(s.q_max, q_before);
    }
  }
  emit();
  if (acc_t > 0) {
    s.utilization = acc_bo / (params_.capacity_per_user * acc_t);
    s.q_mean = acc_q / acc_t;
    s.q_std = std::sqrt(std::max(0.0, acc_q2 / acc_t - s.q_mean * s.q_mean));
    s.k_mean = acc_k / acc_t;
  } else {
    s.q_min = s.q_max = state_.q;
  }
  return s;
}

const SimState& Simulator::state() const {
  if (dist_stale_) {
    state_.dist = WindowDistribution::unchecked(params_.w_max, mass_, atom_);
    dist_stale_ = false;
  }
  return state_;
}

OscillationStats queue_stats(const std::vector<SeriesRow>& rows, double t_from) {
  OscillationStats o;
  o.min = std::numeric_limits<double>::infinity();
  o.max = -o.min;
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.t < t_from) continue;
    o.min = std::min(o.min, r.q);
    o.max = std::max(o.max, r.q);
    sum += r.q;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "no samples after t_from");
  o.mean = sum / n;
  o.amplitude = o.max - o.min;
  return o;
}

}  // namespace redmf
