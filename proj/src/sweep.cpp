#include "redmf/sweep.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>

#include "redmf/equilibrium.hpp"
#include "redmf/stability.hpp"

namespace redmf {

int sweep_threads(int requested) {
  int n = requested > 0 ? requested
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("REDMF_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

bool is_oscillating(const RunSummary& s, double buffer_delay, double fraction) {
  return s.q_max - s.q_min > fraction * buffer_delay;
}

std::vector<SweepRow> run_sweep(const Scenario& base, const SweepOptions& opts) {
  if (opts.n_from < 1 || opts.n_to < opts.n_from || opts.n_step < 1)
    throw Error(ErrorCode::InvalidArgument, "sweep needs 1 <= n_from <= n_to and n_step >= 1");
  std::vector<double> grid = opts.p_max_grid;
  if (base.loss_model != LossKind::Red) grid = {0.0};
  else if (grid.empty()) grid = {base.red.p_max};

  std::vector<SweepRow> rows;
  std::vector<Scenario> jobs;
  for (double p : grid)
    for (int n = opts.n_from; n <= opts.n_to; n += opts.n_step) {
      Scenario s = base;
      s.n_users = n;
      if (base.loss_model == LossKind::Red) s.red.p_max = p;
      // Validate up front so errors surface before any thread starts.
      s.network();
      s.loss();
      s.sim_options();
      jobs.push_back(s);
      rows.push_back({n, p, {}, false, "none", 0, false, 0});
    }

  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&](std::size_t i) {
    try {
      const Scenario& s = jobs[i];
      const auto params = s.network();
      SweepRow& r = rows[i];
      Simulator sim(params, s.loss(), s.sim_options());
      r.sim = sim.run();
      r.oscillating = is_oscillating(r.sim, params.buffer_delay, opts.oscillation_fraction);
      if (s.loss_model == LossKind::Red) {
        const auto eq = solve_equilibrium(params, s.red);
        r.equilibrium = to_string(eq.outcome);
        if (eq.state) {
          r.q_e = eq.state->q_e;
          const auto rep = analyze_stability(*eq.state, params, s.red.epsilon(),
                                             params.buffer_delay);
          r.roots_stable = rep.roots_negative;
          r.max_real_root = rep.roots.max_real();
        }
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int workers = std::min<int>(sweep_threads(opts.threads), static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

}  // namespace redmf
