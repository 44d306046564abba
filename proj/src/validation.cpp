#include "redmf/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>

#include "redmf/equilibrium.hpp"
#include "redmf/mc_oracle.hpp"
#include "redmf/meanfield_sim.hpp"
#include "redmf/stability.hpp"
#include "redmf/steady_state.hpp"
#include "redmf/sweep.hpp"

namespace redmf {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Check {
  bool pass = true;
  std::string detail;
  void add(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAIL]");
  }
};

double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double eps,
               int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * eps)
    return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double eps) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), eps, 40);
}

Scenario with(const Scenario& base, int n, LossKind loss, double p_max) {
  Scenario s = base;
  s.n_users = n;
  s.loss_model = loss;
  s.red.p_max = p_max;
  s.red.w_q = 1;
  s.red_mode = RedMode::Instantaneous;
  return s;
}

Check fixed_point_mass() {
  Check c;
  const double m = solve_fixed_point(0.0015, 64).mass_at_wmax;
  c.add(m >= 0.030 && m <= 0.036, fmt("M(k=0.0015, W=64) = %.5f, want [0.030, 0.036]", m));
  return c;
}

Check taylor_law() {
  Check c;
  const double t = taylor_mass(0.0015, 64);
  c.add(std::abs(t - 0.046) < 0.001, fmt("Taylor estimate %.4f, want 0.046", t));
  double prev = 1;
  std::string ratios;
  bool tightening = true, in_band = false;
  for (double k : {1e-4, 3e-5, 1e-5, 3e-6}) {
    const double m = solve_fixed_point(k, 64).mass_at_wmax;
    const double r = std::log(m) / (-0.5 * k * 64 * 64);
    if (k == 1e-4) in_band = r >= 0.8 && r <= 1.2;
    tightening = tightening && std::abs(r - 1) < prev;
    prev = std::abs(r - 1);
    ratios += fmt("%s%.4f", ratios.empty() ? "" : ", ", r);
  }
  c.add(in_band, fmt("log-ratio at k=1e-4 in [0.8, 1.2]"));
  c.add(tightening, "ratios for k = 1e-4, 3e-5, 1e-5, 3e-6: " + ratios + " tighten toward 1");
  return c;
}

Check sqrt_regime() {
  Check c;
  for (double k : {0.002, 0.005, 0.01}) {
    const double f = solve_fixed_point(k, 64).mean;
    const double err = std::abs(f - 1.31 / std::sqrt(k)) / f;
    c.add(err < 0.05, fmt("k=%g: F=%.3f, sqrt law %.3f, err %.2f%%", k, f,
                          1.31 / std::sqrt(k), 100 * err));
  }
  return c;
}

Check oracle_equivalence(int threads) {
  Check c;
  for (double k : {0.0005, 0.0015, 0.005}) {
    const auto fp = solve_fixed_point(k, 64);
    OracleOptions o;
    o.k = k;
    o.n_events = 10'000'000;
    o.threads = threads;
    const auto r = run_oracle(o);
    const double tv = tv_distance(fp.distribution(), r.dist);
    const double f2 = 2 * (1 - fp.mass_at_wmax) / k;
    const double err = std::abs(r.second_moment / f2 - 1);
    c.add(tv < 0.02 && err < 0.03 && !r.insufficient_samples,
          fmt("k=%g: TV %.4f, F2 %.1f vs 2(1-M)/k %.1f (%.2f%%)", k, tv,
              r.second_moment, f2, 100 * err));
  }
  return c;
}

Check tuning(const Scenario& s) {
  Check c;
  const auto t = tune_red(s.prop_delay_s, s.buffer_delay_s, s.red.min_th, s.w_max);
  c.add(t.p_max_bound >= 0.00345 && t.p_max_bound <= 0.00365,
        fmt("p_max bound %.4f%%, want [0.345%%, 0.365%%]", 100 * t.p_max_bound));
  return c;
}

Check stability_boundary(const Scenario& base, int threads) {
  Check c;
  const Scenario s = with(base, 50, LossKind::Red, 0.005);
  const auto params = s.network();
  const auto eq = solve_equilibrium(params, s.red);
  if (!eq.state) {
    c.add(false, "no congested equilibrium at N=50");
    return c;
  }
  const auto rep = analyze_stability(*eq.state, params, s.red.epsilon(), params.buffer_delay);
  c.add(rep.roots_negative, fmt("N=50 p_max=0.5%%: max Re(root) %.3g /s", rep.roots.max_real()));
  Simulator sim(params, s.loss(), s.sim_options());
  const auto sum = sim.run();
  const double err = std::abs(sum.q_mean / eq.state->q_e - 1);
  const bool osc = is_oscillating(sum, params.buffer_delay, 0.02);
  c.add(err < 0.05 && !osc, fmt("simulated queue %.4f ms vs Q^e %.4f ms (%.2f%%), range %.1f us",
                                1e3 * sum.q_mean, 1e3 * eq.state->q_e, 100 * err,
                                1e6 * (sum.q_max - sum.q_min)));

  SweepOptions so;
  so.n_from = 20;
  so.n_to = 90;
  so.n_step = 5;
  so.p_max_grid = {0.0075};
  so.threads = threads;
  const auto rows = run_sweep(with(base, 50, LossKind::Red, 0.0075), so);
  std::string osc_n, unstable_n;
  double widest = 0;
  for (const auto& r : rows) {
    widest = std::max(widest, r.sim.q_max - r.sim.q_min);
    if (r.oscillating) osc_n += fmt(" %d", r.n_users);
    if (r.equilibrium == "congested" && !r.roots_stable) unstable_n += fmt(" %d", r.n_users);
  }
  c.add(!osc_n.empty(),
        fmt("p_max=0.75%%, N=20..90: oscillating N =%s (widest queue range %.1f us); roots unstable at N =%s",
            osc_n.empty() ? " none" : osc_n.c_str(), 1e6 * widest,
            unstable_n.empty() ? " none" : unstable_n.c_str()));
  return c;
}

Check droptail_and_sweeps(const Scenario& base, int threads) {
  Check c;
  {
    Scenario s = with(base, 35, LossKind::DropTail, base.red.p_max);
    s.t_end_s = 6;
    s.warmup_s = 3;
    s.sample_interval_s = 1e-3;
    Simulator sim(s.network(), s.loss(), s.sim_options());
    std::vector<SeriesRow> rows;
    sim.run([&](const SeriesRow& r) { rows.push_back(r); });
    const auto st = queue_stats(rows, 3.0);
    const double qmax = s.buffer_delay_s;
    c.add(st.min < 0.05 * qmax && st.max > 0.95 * qmax,
          fmt("drop-tail N=35 queue spans %.1f%%..%.1f%% of the buffer",
              100 * st.min / qmax, 100 * st.max / qmax));
  }

  // Below about 19 users the windows cannot fill the link, so the dip is
  // searched where the link can saturate.
  SweepOptions so;
  so.n_from = 20;
  so.n_to = 130;
  so.n_step = 5;
  so.threads = threads;
  const auto dt = run_sweep(with(base, 50, LossKind::DropTail, base.red.p_max), so);
  const auto worst = std::min_element(dt.begin(), dt.end(), [](const auto& a, const auto& b) {
    return a.sim.utilization < b.sim.utilization;
  });
  const double u_min = 100 * worst->sim.utilization;
  c.add(worst->n_users >= 30 && worst->n_users <= 50 && u_min >= 94 && u_min <= 98,
        fmt("drop-tail utilization minimum %.2f%% at N=%d, want ~96%% near N=40",
            u_min, worst->n_users));
  for (const auto& r : dt)
    if (r.n_users == 25)
      c.add(std::abs(100 * r.sim.utilization - 99) <= 2,
            fmt("drop-tail N=25 utilization %.2f%%, want ~99%%", 100 * r.sim.utilization));

  so.n_from = 25;
  const auto red = run_sweep(with(base, 50, LossKind::Red, base.red.p_max), so);
  std::string below;
  double lowest = 1;
  for (const auto& r : red) {
    lowest = std::min(lowest, r.sim.utilization);
    if (r.sim.utilization < 0.992) below += fmt(" %d(%.2f%%)", r.n_users, 100 * r.sim.utilization);
  }
  c.add(below.empty(), fmt("RED utilization over N=25..130 >= 99.2%%: lowest %.2f%%%s%s",
                           100 * lowest, below.empty() ? "" : ", below at N =", below.c_str()));
  return c;
}

Check property_suites(const Scenario& base) {
  Check c;
  {
    const double k = 0.0015;
    const auto fp = solve_fixed_point(k, 64);
    auto kvp = [&](double v) { return k * v * fp.density(v); };
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(fp.series.lower_edge(), 32.0);
    double worst = 0;
    for (int t = 0; t < 50;) {
      const double w = u(rng);
      if (fp.density(w) < 1e-9) continue;
      ++t;
      double rhs = 0, a = w;
      for (double brk : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        if (brk <= a) continue;
        const double b = std::min(brk, 2 * w);
        rhs += integrate(kvp, a, b - 1e-12 * b, 1e-18);
        a = b;
        if (a >= 2 * w) break;
      }
      worst = std::max(worst, std::abs(rhs / fp.density(w) - 1));
    }
    c.add(worst < 1e-4, fmt("integral identity at 50 points: worst rel err %.2g", worst));
  }
  {
    const Scenario s = with(base, 35, LossKind::DropTail, base.red.p_max);
    SimOptions o;
    o.sample_interval = 0;
    Simulator sim(s.network(), s.loss(), o);
    for (int i = 0; i < 10000; ++i) sim.step();
    const double drift = std::abs(sim.state().dist.total_mass() - 1);
    c.add(drift < 1e-6, fmt("mass drift over 1e4 steps %.2g", drift));
  }
  {
    int checked = 0;
    std::size_t violations = 0;
    for (int n = 25; n <= 90; n += 5) {
      const Scenario s = with(base, n, LossKind::Red, base.red.p_max);
      const auto params = s.network();
      const auto eq = solve_equilibrium(params, s.red);
      if (!eq.state) continue;
      ++checked;
      violations += check_invariants(*eq.state, params, &s.red).size();
    }
    c.add(checked > 0 && violations == 0,
          fmt("equilibrium invariants at %d states: %zu violations", checked, violations));
  }
  {
    Scenario s = with(base, 50, LossKind::Constant, base.red.p_max);
    auto params = s.network();
    params.capacity_per_user *= 100;  // the queue stays empty, so R = T
    SimOptions o;
    o.cells = 256;
    Simulator sim(params, ConstantLoss{0.0}, o);
    const double t_step = 0.05;
    sim.override_loss([&](double t) { return t >= t_step ? 0.01 : 0.0; });
    double switched = -1, seen = -1;
    while (sim.state().t < 0.1) {
      const double dt = sim.step();
      const auto& st = sim.state();
      if (switched < 0 && st.k > 0.005) switched = st.t - 0.5 * dt;
      if (seen < 0 && st.kappa > 0.005) seen = st.t - 0.5 * dt;
    }
    const double lag = seen - switched;
    c.add(switched >= 0 && std::abs(lag - params.prop_delay) <= sim.dt(),
          fmt("loss impulse seen %.4f ms after it, RTT %.4f ms", 1e3 * lag, 1e3 * params.prop_delay));
  }
  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10, 10);
    int checked = 0, bad = 0;
    while (checked < 10000) {
      const double a = u(rng), b = u(rng), q = u(rng);
      if (a == 0 || b * b - 4 * a * q >= 0) continue;
      ++checked;
      if (roots_and_verdict(a, b, q).stable != (b / a > 0)) ++bad;
    }
    c.add(bad == 0, fmt("conjugate-root sign rule on %d quadratics: %d mismatches", checked, bad));
  }
  {
    auto run = [&](LossKind lk, int n, std::size_t cells, double dt) {
      Scenario s = with(base, n, lk, base.red.p_max);
      s.cells = cells;
      s.dt_s = dt;
      s.t_end_s = 10;
      s.warmup_s = 5;
      s.sample_interval_s = 0;
      Simulator sim(s.network(), s.loss(), s.sim_options());
      return sim.run();
    };
    const auto a = run(LossKind::Red, 50, 512, 4e-4), b = run(LossKind::Red, 50, 1024, 2e-4);
    const auto d1 = run(LossKind::DropTail, 35, 512, 4e-4), d2 = run(LossKind::DropTail, 35, 1024, 2e-4);
    const double e = std::max({std::abs(a.q_mean / b.q_mean - 1),
                               std::abs(a.utilization / b.utilization - 1),
                               std::abs(d1.utilization / d2.utilization - 1)});
    c.add(e < 0.01, fmt("grid halving changes results by %.3f%%", 100 * e));
  }
  return c;
}

const char* kNames[kCriterionCount] = {
    "fixed-point mass",   "Taylor law",          "square-root regime",
    "oracle equivalence", "tuning formula",      "stability boundary",
    "drop-tail and sweeps", "property suites"};

// Runtime ceilings in seconds; 0 means none.
const double kLimits[kCriterionCount] = {1, 5, 0, 60, 0, 300, 1200, 0};

}  // namespace

CriterionResult run_criterion(int id, const ValidationOptions& opts) {
  if (id < 1 || id > kCriterionCount)
    throw Error(ErrorCode::InvalidArgument, "criterion id must be in 1..8");
  CriterionResult r;
  r.id = id;
  r.name = kNames[id - 1];
  const int threads = sweep_threads(opts.threads);
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  try {
    switch (id) {
      case 1: c = fixed_point_mass(); break;
      case 2: c = taylor_law(); break;
      case 3: c = sqrt_regime(); break;
      case 4: c = oracle_equivalence(threads); break;
      case 5: c = tuning(opts.scenario); break;
      case 6: c = stability_boundary(opts.scenario, threads); break;
      case 7: c = droptail_and_sweeps(opts.scenario, threads); break;
      case 8: c = property_suites(opts.scenario); break;
    }
  } catch (const std::exception& e) {
    c.add(false, std::string("error: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double limit = kLimits[id - 1];
  if (limit > 0) c.add(r.seconds < limit, fmt("runtime %.2f s (limit %g s)", r.seconds, limit));
  r.pass = c.pass;
  r.detail = c.detail;
  return r;
}

}  // namespace redmf
