#include "redmf/redmf.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include "redmf/equilibrium.hpp"
#include "redmf/mc_oracle.hpp"
#include "redmf/meanfield_sim.hpp"
#include "redmf/scenario.hpp"
#include "redmf/stability.hpp"
#include "redmf/steady_state.hpp"
#include "redmf/sweep.hpp"
#include "redmf/validation.hpp"

struct redmf_scenario {
  redmf::Scenario s;
};
struct redmf_distribution {
  redmf::WindowDistribution d;
};
struct redmf_sim {
  redmf::Simulator sim;
};

namespace {

thread_local std::string last_error;

redmf_status fail(redmf_status st, const char* what) {
  last_error = what;
  return st;
}

template <class Fn>
redmf_status guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return REDMF_OK;
  } catch (const redmf::Error& e) {
    return fail(static_cast<redmf_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(REDMF_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(REDMF_E_INTERNAL, e.what());
  }
}

void need(const void* p, const char* name) {
  if (!p)
    throw redmf::Error(redmf::ErrorCode::InvalidArgument,
                       std::string(name) + " must not be NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

redmf_sample to_c(const redmf::SeriesRow& r) {
  return {r.t, r.q, r.f, r.m, r.b_i, r.b_o, r.k, r.kappa, r.a_factor, r.rtt, r.utilization};
}

redmf_summary to_c(const redmf::RunSummary& s) {
  return {s.utilization, s.q_mean, s.q_min, s.q_max, s.q_std,
          s.k_mean, s.max_mass_drift, s.steps};
}

redmf_outcome to_c(redmf::EquilibriumOutcome o) {
  switch (o) {
    case redmf::EquilibriumOutcome::Congested: return REDMF_CONGESTED;
    case redmf::EquilibriumOutcome::NoCongestion: return REDMF_NO_CONGESTION;
    case redmf::EquilibriumOutcome::RampSaturated: return REDMF_RAMP_SATURATED;
  }
  return REDMF_NO_CONGESTION;
}

const redmf::REDConfig& red_of(const redmf::Scenario& s) {
  if (s.loss_model != redmf::LossKind::Red)
    throw redmf::Error(redmf::ErrorCode::InvalidArgument,
                       "this operation needs loss_model = red");
  s.red.validate();
  return s.red;
}

redmf::EquilibriumResult solve(const redmf::Scenario& s, redmf_equilibrium* out) {
  const auto params = s.network();
  const auto& red = red_of(s);
  auto r = redmf::solve_equilibrium(params, red);
  redmf_equilibrium e{};
  e.outcome = to_c(r.outcome);
  e.residual_at_min_th = r.residual_at_min_th;
  e.residual_at_max_th = r.residual_at_max_th;
  e.iterations = r.iterations;
  if (r.state) {
    const auto& st = *r.state;
    e.k_e = st.k_e;
    e.q_e = st.q_e;
    e.r_e = st.r_e;
    e.f_e = st.f_e;
    e.f2_e = st.f2_e;
    e.m_e = st.m_e;
    e.b_i_e = st.b_i_e;
    e.b_o_e = st.b_o_e;
    e.a_e = st.a_e;
    e.invariant_violations =
        static_cast<int>(redmf::check_invariants(st, params, &red).size());
  }
  if (out) *out = e;
  return r;
}

}  // namespace

extern "C" {

const char* redmf_last_error(void) { return last_error.c_str(); }
const char* redmf_version(void) { return "1.0.0"; }
void redmf_string_free(char* s) { std::free(s); }

redmf_status redmf_scenario_default(redmf_scenario** out) {
  return guard([&] {
    need(out, "out");
    *out = new redmf_scenario{};
  });
}

redmf_status redmf_scenario_load(const char* path, redmf_scenario** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new redmf_scenario{redmf::load_scenario(path)};
  });
}

redmf_status redmf_scenario_parse(const char* text, redmf_scenario** out) {
  return guard([&] {
    need(text, "text");
    need(out, "out");
    *out = new redmf_scenario{redmf::parse_scenario(text)};
  });
}

redmf_status redmf_scenario_set(redmf_scenario* s, const char* key, const char* value) {
  return guard([&] {
    need(s, "scenario");
    need(key, "key");
    need(value, "value");
    redmf::set_scenario_key(s->s, key, value);
  });
}

redmf_status redmf_scenario_get(const redmf_scenario* s, const char* key, char** value) {
  return guard([&] {
    need(s, "scenario");
    need(key, "key");
    need(value, "value");
    *value = dup(redmf::get_scenario_key(s->s, key));
  });
}

redmf_status redmf_scenario_emit(const redmf_scenario* s, char** text) {
  return guard([&] {
    need(s, "scenario");
    need(text, "text");
    *text = dup(redmf::emit_scenario(s->s));
  });
}

void redmf_scenario_free(redmf_scenario* s) { delete s; }

size_t redmf_distribution_cells(const redmf_distribution* d) { return d ? d->d.cells() : 0; }
double redmf_distribution_wmax(const redmf_distribution* d) { return d ? d->d.w_max() : 0; }
double redmf_distribution_atom(const redmf_distribution* d) {
  return d ? d->d.mass_at_wmax() : 0;
}

redmf_status redmf_distribution_cell(const redmf_distribution* d, size_t i, double* w,
                                     double* density) {
  return guard([&] {
    need(d, "distribution");
    if (i >= d->d.cells())
      throw redmf::Error(redmf::ErrorCode::InvalidArgument, "cell index out of range");
    if (w) *w = d->d.cell_center(i);
    if (density) *density = d->d.density(i);
  });
}

void redmf_distribution_free(redmf_distribution* d) { delete d; }

redmf_status redmf_steady_state_solve(double k, double w_max, size_t cells,
                                      redmf_steady_state* out, redmf_distribution** dist) {
  return guard([&] {
    need(out, "out");
    if (cells < 1) throw redmf::Error(redmf::ErrorCode::InvalidArgument, "cells must be >= 1");
    const auto fp = redmf::solve_fixed_point(k, w_max);
    *out = {k, w_max, fp.mass_at_wmax, fp.mean, fp.second_moment,
            redmf::taylor_mass(k, w_max), k > 0 ? redmf::sqrt_formula(k, w_max) : w_max};
    if (dist) *dist = new redmf_distribution{fp.distribution(cells)};
  });
}

redmf_status redmf_equilibrium_solve(const redmf_scenario* s, redmf_equilibrium* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    solve(s->s, out);
  });
}

redmf_status redmf_stability_analyze(const redmf_scenario* s, redmf_equilibrium* eq,
                                     redmf_stability* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    const auto r = solve(s->s, eq);
    if (!r.state)
      throw redmf::Error(redmf::ErrorCode::Domain,
                         std::string("no congested equilibrium (") +
                             redmf::to_string(r.outcome) + ")");
    const auto params = s->s.network();
    const auto rep = redmf::analyze_stability(*r.state, params, s->s.red.epsilon(),
                                              params.buffer_delay);
    redmf_stability o{};
    o.epsilon = rep.epsilon;
    o.a = rep.coeffs.a;
    o.b = rep.coeffs.b;
    o.c = rep.coeffs.c;
    o.u = rep.coeffs.u;
    o.y = rep.coeffs.y;
    for (int i = 0; i < 2; ++i) {
      o.root_re[i] = rep.roots.roots[i].real();
      o.root_im[i] = rep.roots.roots[i].imag();
    }
    o.degenerate = rep.roots.degenerate;
    o.stable = rep.roots.stable;
    o.sufficient_bound = rep.sufficient_bound;
    o.uncapped_bound = rep.uncapped_bound;
    o.universal_bound = rep.universal_bound;
    o.phi_r = rep.phi_r;
    o.sufficient_ok = rep.sufficient_ok;
    o.weak_u = rep.weak_u;
    o.uncapped_ok = rep.uncapped_ok;
    o.universal_ok = rep.universal_ok;
    o.small_phi_ok = rep.small_phi_ok;
    *out = o;
  });
}

redmf_status redmf_tune(const redmf_scenario* s, redmf_tuning* out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    const auto& sc = s->s;
    const auto t = redmf::tune_red(sc.prop_delay_s, sc.buffer_delay_s, sc.red.min_th, sc.w_max);
    *out = {t.beta, t.gamma, t.p_max_bound, t.epsilon_bound, t.alpha_sq};
  });
}

redmf_status redmf_simulate(const redmf_scenario* s, redmf_sample_fn on_sample, void* user,
                            redmf_summary* out) {
  return guard([&] {
    need(s, "scenario");
    redmf::Simulator sim(s->s.network(), s->s.loss(), s->s.sim_options());
    std::function<void(const redmf::SeriesRow&)> cb;
    if (on_sample)
      cb = [&](const redmf::SeriesRow& r) {
        const auto c = to_c(r);
        on_sample(&c, user);
      };
    const auto sum = sim.run(cb);
    if (out) *out = to_c(sum);
  });
}

redmf_status redmf_sim_create(const redmf_scenario* s, redmf_sim** out) {
  return guard([&] {
    need(s, "scenario");
    need(out, "out");
    *out = new redmf_sim{redmf::Simulator(s->s.network(), s->s.loss(), s->s.sim_options())};
  });
}

redmf_status redmf_sim_step(redmf_sim* sim, double* dt_taken) {
  return guard([&] {
    need(sim, "sim");
    const double dt = sim->sim.step();
    if (dt_taken) *dt_taken = dt;
  });
}

redmf_status redmf_sim_state(const redmf_sim* sim, redmf_sample* out) {
  return guard([&] {
    need(sim, "sim");
    need(out, "out");
    const auto& st = sim->sim.state();
    const double c = sim->sim.params().capacity_per_user;
    *out = {st.t, st.q, st.f, st.dist.mass_at_wmax(), st.b_i, st.b_o, st.k, st.kappa,
            st.a_factor, st.rtt, st.b_o / c};
  });
}

void redmf_sim_free(redmf_sim* sim) { delete sim; }

redmf_status redmf_sweep(const redmf_scenario* s, int n_from, int n_to, int n_step,
                         const double* p_max_grid, size_t n_grid, int threads,
                         redmf_sweep_row** rows, size_t* n_rows) {
  return guard([&] {
    need(s, "scenario");
    need(rows, "rows");
    need(n_rows, "n_rows");
    if (n_grid > 0) need(p_max_grid, "p_max_grid");
    redmf::SweepOptions o;
    o.n_from = n_from;
    o.n_to = n_to;
    o.n_step = n_step;
    o.threads = threads;
    o.p_max_grid.assign(p_max_grid, p_max_grid + n_grid);
    const auto res = redmf::run_sweep(s->s, o);
    auto* out = static_cast<redmf_sweep_row*>(std::calloc(res.size() + 1, sizeof(redmf_sweep_row)));
    if (!out) throw std::bad_alloc();
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto& r = res[i];
      int outcome = -1;
      if (r.equilibrium == "congested") outcome = REDMF_CONGESTED;
      else if (r.equilibrium == "no-congestion") outcome = REDMF_NO_CONGESTION;
      else if (r.equilibrium == "ramp-saturated") outcome = REDMF_RAMP_SATURATED;
      out[i] = {r.n_users, r.p_max, to_c(r.sim), r.oscillating, outcome,
                r.q_e, r.roots_stable, r.max_real_root};
    }
    *rows = out;
    *n_rows = res.size();
  });
}

void redmf_sweep_free(redmf_sweep_row* rows) { std::free(rows); }

void redmf_oracle_defaults(redmf_oracle_options* o) {
  if (!o) return;
  const redmf::OracleOptions d;
  *o = {d.k, d.w_max, d.n_flows, d.n_events, d.burn_in, d.seed, d.cells, d.threads};
}

redmf_status redmf_oracle_run(const redmf_oracle_options* o, redmf_oracle_result* out,
                              redmf_distribution** dist) {
  return guard([&] {
    need(o, "options");
    need(out, "out");
    redmf::OracleOptions ro;
    ro.k = o->k;
    ro.w_max = o->w_max;
    ro.n_flows = o->n_flows;
    ro.n_events = o->n_events;
    ro.burn_in = o->burn_in;
    ro.seed = o->seed;
    ro.cells = o->cells;
    ro.threads = o->threads;
    const auto r = redmf::run_oracle(ro);
    const auto fp = redmf::solve_fixed_point(o->k, o->w_max);
    *out = {r.mean, r.second_moment, r.mass_at_wmax, r.max_rel_se,
            redmf::tv_distance(fp.distribution(o->cells), r.dist), r.events,
            r.insufficient_samples};
    if (dist) *dist = new redmf_distribution{r.dist};
  });
}

int redmf_criterion_count(void) { return redmf::kCriterionCount; }

redmf_status redmf_validate(const redmf_scenario* s, int id, int threads, int* pass,
                            double* seconds, char** name, char** detail) {
  return guard([&] {
    need(pass, "pass");
    redmf::ValidationOptions o;
    if (s) o.scenario = s->s;
    o.threads = threads;
    const auto r = redmf::run_criterion(id, o);
    *pass = r.pass;
    if (seconds) *seconds = r.seconds;
    if (name) *name = dup(r.name);
    if (detail) *detail = dup(r.detail);
  });
}

}  // extern "C"
