#ifndef REDMF_H
#define REDMF_H

/* C interface to the mean-field TCP/RED model. Every function returns a
 * status; on failure redmf_last_error() holds a message for the calling
 * thread. Handles are opaque and owned by the caller. Strings and arrays
 * returned through out-parameters are freed with the matching *_free call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define REDMF_API __declspec(dllexport)
#else
#define REDMF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  REDMF_OK = 0,
  REDMF_E_INVALID_ARGUMENT = 1,
  REDMF_E_DOMAIN = 2,
  REDMF_E_NUMERICAL = 3,
  REDMF_E_PARSE = 4,
  REDMF_E_IO = 5,
  REDMF_E_INTERNAL = 99
} redmf_status;

REDMF_API const char* redmf_last_error(void);
REDMF_API const char* redmf_version(void);
REDMF_API void redmf_string_free(char* s);

/* Scenario (network, loss model and run controls). */
typedef struct redmf_scenario redmf_scenario;

REDMF_API redmf_status redmf_scenario_default(redmf_scenario** out);
REDMF_API redmf_status redmf_scenario_load(const char* path, redmf_scenario** out);
REDMF_API redmf_status redmf_scenario_parse(const char* text, redmf_scenario** out);
REDMF_API redmf_status redmf_scenario_set(redmf_scenario* s, const char* key,
                                          const char* value);
REDMF_API redmf_status redmf_scenario_get(const redmf_scenario* s, const char* key,
                                          char** value);
REDMF_API redmf_status redmf_scenario_emit(const redmf_scenario* s, char** text);
REDMF_API void redmf_scenario_free(redmf_scenario* s);

/* Window distribution on a uniform grid plus the atom at w_max. */
typedef struct redmf_distribution redmf_distribution;

REDMF_API size_t redmf_distribution_cells(const redmf_distribution* d);
REDMF_API double redmf_distribution_wmax(const redmf_distribution* d);
REDMF_API double redmf_distribution_atom(const redmf_distribution* d);
/* Cell centre (packets) and density (per packet) of cell i. */
REDMF_API redmf_status redmf_distribution_cell(const redmf_distribution* d, size_t i,
                                               double* w, double* density);
REDMF_API void redmf_distribution_free(redmf_distribution* d);

/* Fixed point for constant loss k. */
typedef struct {
  double k, w_max;
  double mass_at_wmax, mean, second_moment;
  double taylor_mass;   /* exp(-k w_max^2 / 2) */
  double sqrt_formula;  /* min(w_max, 1.31 / sqrt(k)) */
} redmf_steady_state;

/* dist may be NULL. */
REDMF_API redmf_status redmf_steady_state_solve(double k, double w_max, size_t cells,
                                                redmf_steady_state* out,
                                                redmf_distribution** dist);

/* Equilibrium of the scenario's router (RED only). */
typedef enum {
  REDMF_CONGESTED = 0,
  REDMF_NO_CONGESTION = 1,
  REDMF_RAMP_SATURATED = 2
} redmf_outcome;

typedef struct {
  redmf_outcome outcome;
  /* The state fields are zero unless outcome == REDMF_CONGESTED. */
  double k_e, q_e, r_e, f_e, f2_e, m_e, b_i_e, b_o_e, a_e;
  double residual_at_min_th, residual_at_max_th;
  int iterations;
  int invariant_violations;
} redmf_equilibrium;

REDMF_API redmf_status redmf_equilibrium_solve(const redmf_scenario* s,
                                               redmf_equilibrium* out);

/* Linear stability at the congested equilibrium, slope from the RED ramp. */
typedef struct {
  double epsilon;
  double a, b, c, u, y;
  double root_re[2], root_im[2];
  int degenerate, stable;
  double sufficient_bound, uncapped_bound, universal_bound, phi_r;
  int sufficient_ok, weak_u, uncapped_ok, universal_ok, small_phi_ok;
} redmf_stability;

REDMF_API redmf_status redmf_stability_analyze(const redmf_scenario* s,
                                               redmf_equilibrium* eq,
                                               redmf_stability* out);

typedef struct {
  double beta, gamma, p_max_bound, epsilon_bound, alpha_sq;
} redmf_tuning;

REDMF_API redmf_status redmf_tune(const redmf_scenario* s, redmf_tuning* out);

/* Time integration. */
typedef struct {
  double t, q, f, m, b_i, b_o, k, kappa, a_factor, rtt, utilization;
} redmf_sample;

typedef struct {
  double utilization, q_mean, q_min, q_max, q_std, k_mean, max_mass_drift;
  size_t steps;
} redmf_summary;

typedef void (*redmf_sample_fn)(const redmf_sample* sample, void* user);

/* Runs to t_end_s; on_sample may be NULL. */
REDMF_API redmf_status redmf_simulate(const redmf_scenario* s, redmf_sample_fn on_sample,
                                      void* user, redmf_summary* out);

typedef struct redmf_sim redmf_sim;

REDMF_API redmf_status redmf_sim_create(const redmf_scenario* s, redmf_sim** out);
REDMF_API redmf_status redmf_sim_step(redmf_sim* sim, double* dt_taken);
REDMF_API redmf_status redmf_sim_state(const redmf_sim* sim, redmf_sample* out);
REDMF_API void redmf_sim_free(redmf_sim* sim);

/* Runs over user counts and RED p_max values. */
typedef struct {
  int n_users;
  double p_max;
  redmf_summary sim;
  int oscillating;
  int outcome; /* redmf_outcome, or -1 without RED */
  double q_e;
  int roots_stable;
  double max_real_root;
} redmf_sweep_row;

/* p_max_grid may be NULL (n_grid 0) to use the scenario's p_max. threads 0
 * uses every core; REDMF_THREADS caps it. */
REDMF_API redmf_status redmf_sweep(const redmf_scenario* s, int n_from, int n_to,
                                   int n_step, const double* p_max_grid, size_t n_grid,
                                   int threads, redmf_sweep_row** rows, size_t* n_rows);
REDMF_API void redmf_sweep_free(redmf_sweep_row* rows);

/* Independent AIMD flows with per-packet loss. */
typedef struct {
  double k, w_max;
  int n_flows;
  uint64_t n_events; /* total after burn-in */
  uint64_t burn_in;  /* per flow; 0 picks 1000 w_max */
  uint64_t seed;
  size_t cells;
  int threads;
} redmf_oracle_options;

typedef struct {
  double mean, second_moment, mass_at_wmax, max_rel_se;
  double tv_to_fixed_point; /* unit-bin TV distance to the analytic density */
  uint64_t events;
  int insufficient_samples;
} redmf_oracle_result;

REDMF_API void redmf_oracle_defaults(redmf_oracle_options* o);
REDMF_API redmf_status redmf_oracle_run(const redmf_oracle_options* o,
                                        redmf_oracle_result* out,
                                        redmf_distribution** dist);

/* Acceptance checks 1..redmf_criterion_count(). s may be NULL for the
 * built-in reference scenario. name and detail are freed with
 * redmf_string_free. */
REDMF_API int redmf_criterion_count(void);
REDMF_API redmf_status redmf_validate(const redmf_scenario* s, int id, int threads,
                                      int* pass, double* seconds, char** name,
                                      char** detail);

#ifdef __cplusplus
}
#endif

#endif
