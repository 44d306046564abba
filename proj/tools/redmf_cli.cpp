// Command-line front end. Talks to the library only through redmf.h.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "redmf/redmf.h"

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string what;
};

void check(redmf_status st) {
  if (st == REDMF_OK) return;
  const bool usage = st == REDMF_E_INVALID_ARGUMENT || st == REDMF_E_PARSE || st == REDMF_E_IO;
  throw Failure{usage ? kExitUsage : kExitNumerical, redmf_last_error()};
}

using ScenarioPtr = std::unique_ptr<redmf_scenario, decltype(&redmf_scenario_free)>;

struct ScenarioArgs {
  std::string path;
  std::vector<std::string> sets;

  void add_to(CLI::App* cmd, bool required) {
    auto* o = cmd->add_option("--scenario", path, "scenario file (key = value lines)");
    if (required) o->required();
    cmd->add_option("--set", sets, "override a scenario key, key=value (repeatable)");
  }

  ScenarioPtr load() const {
    redmf_scenario* s = nullptr;
    check(path.empty() ? redmf_scenario_default(&s) : redmf_scenario_load(path.c_str(), &s));
    ScenarioPtr p(s, &redmf_scenario_free);
    for (const auto& kv : sets) set(p.get(), kv);
    return p;
  }

  static std::string get(const redmf_scenario* s, const char* key) {
    char* v = nullptr;
    check(redmf_scenario_get(s, key, &v));
    std::string out(v);
    redmf_string_free(v);
    return out;
  }

  static void set(redmf_scenario* s, const char* key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    check(redmf_scenario_set(s, key, buf));
  }

  static void set(redmf_scenario* s, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{kExitUsage, "--set expects key=value, got '" + kv + "'"};
    check(redmf_scenario_set(s, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
};

// CSV goes to `path`, or to stdout for "-". The summary then moves to stderr
// so stdout stays machine-readable.
class Output {
 public:
  explicit Output(const std::string& path) : to_stdout_(path == "-") {
    if (path.empty()) return;
    if (to_stdout_) {
      csv_ = stdout;
    } else {
      csv_ = std::fopen(path.c_str(), "wb");
      if (!csv_) throw Failure{kExitUsage, "cannot open '" + path + "' for writing"};
    }
  }
  ~Output() {
    if (csv_ && !to_stdout_) std::fclose(csv_);
  }
  Output(const Output&) = delete;
  Output& operator=(const Output&) = delete;

  FILE* csv() const { return csv_; }
  FILE* summary() const { return to_stdout_ ? stderr : stdout; }

 private:
  bool to_stdout_;
  FILE* csv_ = nullptr;
};

struct SampleSink {
  FILE* f;
};

void write_sample(const redmf_sample* r, void* user) {
  std::fprintf(static_cast<SampleSink*>(user)->f,
               "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r->t, r->q, r->f,
               r->m, r->b_i, r->b_o, r->k, r->kappa, r->a_factor, r->rtt, r->utilization);
}

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int n = std::stoi(s);
      return {n, n};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw Failure{kExitUsage, "--users expects a..b, got '" + s + "'"};
  }
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Failure{kExitUsage, "--pmax-grid expects comma-separated numbers, got '" + s + "'"};
    }
  }
  return out;
}

const char* outcome_name(int o) {
  switch (o) {
    case REDMF_CONGESTED: return "congested";
    case REDMF_NO_CONGESTION: return "no-congestion";
    case REDMF_RAMP_SATURATED: return "ramp-saturated";
  }
  return "none";
}

void print_equilibrium(FILE* f, const redmf_equilibrium& e) {
  std::fprintf(f, "outcome              %s\n", outcome_name(e.outcome));
  std::fprintf(f, "residual at min_th   %.6g packets\n", e.residual_at_min_th);
  std::fprintf(f, "residual at max_th   %.6g packets\n", e.residual_at_max_th);
  if (e.outcome != REDMF_CONGESTED) return;
  std::fprintf(f, "loss K              %.6g\n", e.k_e);
  std::fprintf(f, "queue Q             %.6g s\n", e.q_e);
  std::fprintf(f, "rtt R               %.6g s\n", e.r_e);
  std::fprintf(f, "mean window F       %.6g packets\n", e.f_e);
  std::fprintf(f, "second moment F2    %.6g packets^2\n", e.f2_e);
  std::fprintf(f, "mass at w_max M     %.6g\n", e.m_e);
  std::fprintf(f, "input rate B_i      %.6g packets/s per user\n", e.b_i_e);
  std::fprintf(f, "output rate B_o     %.6g packets/s per user\n", e.b_o_e);
  std::fprintf(f, "advance factor A    %.6g 1/s\n", e.a_e);
  std::fprintf(f, "bisection steps     %d\n", e.iterations);
  std::fprintf(f, "invariant failures  %d\n", e.invariant_violations);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field TCP Reno / RED fluid model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(redmf_version()));

  // steady-state
  double ss_k = 0, ss_wmax = 64;
  std::size_t ss_cells = 1024;
  std::string ss_out;
  auto* ss = app.add_subcommand("steady-state", "fixed-point window distribution for constant loss");
  ss->add_option("--k", ss_k, "loss probability per packet")->required();
  ss->add_option("--wmax", ss_wmax, "window cap, packets")->capture_default_str();
  ss->add_option("--cells", ss_cells, "grid cells over (0, wmax]")->capture_default_str();
  ss->add_option("--out", ss_out, "CSV path ('-' for stdout)");
  ss->footer("CSV columns: w (cell centre, packets), density (per packet); "
             "last row w = wmax carries the atom mass in the density column.");

  // equilibrium
  ScenarioArgs eq_sc;
  std::string eq_out;
  auto* eq = app.add_subcommand("equilibrium", "RED equilibrium of a scenario");
  eq_sc.add_to(eq, true);
  eq->add_option("--out", eq_out, "CSV path ('-' for stdout)");
  eq->footer("CSV columns: outcome, k_e, q_e_s, r_e_s, f_e, f2_e, m_e, b_i_e, b_o_e, a_e, "
             "residual_min_th, residual_max_th, invariant_failures.");

  // stability
  ScenarioArgs st_sc;
  double st_pmax = -1, st_eps = -1;
  auto* st = app.add_subcommand("stability", "linear stability report at the RED equilibrium");
  st_sc.add_to(st, true);
  auto* st_p = st->add_option("--pmax", st_pmax, "RED p_max override");
  st->add_option("--epsilon", st_eps, "ramp slope override, 1/s")->excludes(st_p);

  // tune
  ScenarioArgs tu_sc;
  auto* tu = app.add_subcommand("tune", "RED p_max bound from the stability rule");
  tu_sc.add_to(tu, true);

  // simulate
  ScenarioArgs si_sc;
  double si_tend = -1;
  std::string si_out;
  auto* si = app.add_subcommand("simulate", "integrate the delayed mean-field system");
  si_sc.add_to(si, true);
  si->add_option("--t-end", si_tend, "end time, s (overrides t_end_s)");
  si->add_option("--out", si_out, "CSV path ('-' for stdout); defaults to the scenario's out");
  si->footer("CSV columns: t_s, q_s, f, m, b_i, b_o, k, kappa, a_factor, rtt_s, utilization.");

  // sweep
  ScenarioArgs sw_sc;
  std::string sw_users = "10..130", sw_grid, sw_out;
  int sw_step = 5, sw_threads = 0;
  auto* sw = app.add_subcommand("sweep", "simulator runs over user counts and p_max values");
  sw_sc.add_to(sw, false);
  sw->add_option("--users", sw_users, "user range a..b")->capture_default_str();
  sw->add_option("--step", sw_step, "user count step")->capture_default_str();
  sw->add_option("--pmax-grid", sw_grid, "comma-separated RED p_max values");
  sw->add_option("--threads", sw_threads, "worker threads (0 = all cores, capped by REDMF_THREADS)");
  sw->add_option("--out", sw_out, "CSV path ('-' for stdout)");
  sw->footer("CSV columns: n_users, p_max, utilization, q_mean_s, q_min_s, q_max_s, q_std_s, "
             "k_mean, oscillating, equilibrium, q_e_s, roots_stable, max_real_root.");

  // oracle
  redmf_oracle_options or_opt;
  redmf_oracle_defaults(&or_opt);
  std::string or_out;
  auto* orc = app.add_subcommand("oracle", "Monte Carlo AIMD flows with constant loss");
  orc->add_option("--k", or_opt.k, "loss probability per packet")->required();
  orc->add_option("--wmax", or_opt.w_max, "window cap")->capture_default_str();
  orc->add_option("--flows", or_opt.n_flows, "independent flows")->capture_default_str();
  orc->add_option("--events", or_opt.n_events, "ACK events in total")->capture_default_str();
  orc->add_option("--burn-in", or_opt.burn_in, "events per flow discarded (0 = 1000 wmax)");
  orc->add_option("--seed", or_opt.seed, "random seed")->capture_default_str();
  orc->add_option("--cells", or_opt.cells, "histogram cells")->capture_default_str();
  orc->add_option("--threads", or_opt.threads, "worker threads")->capture_default_str();
  orc->add_option("--out", or_out, "CSV path ('-' for stdout)");
  orc->footer("CSV columns: w (cell centre, packets), density (per packet); "
              "last row w = wmax carries the atom mass.");

  // validate
  ScenarioArgs va_sc;
  std::vector<int> va_ids;
  int va_threads = 0;
  auto* va = app.add_subcommand("validate", "run the acceptance checks");
  va_sc.add_to(va, false);
  va->add_option("--criterion", va_ids, "criterion ids (default: all)");
  va->add_option("--threads", va_threads, "worker threads for the oracle and sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), app.help().c_str());
    return kExitUsage;
  }

  try {
    if (ss->parsed()) {
      redmf_steady_state r;
      redmf_distribution* d = nullptr;
      check(redmf_steady_state_solve(ss_k, ss_wmax, ss_cells, &r, ss_out.empty() ? nullptr : &d));
      std::unique_ptr<redmf_distribution, decltype(&redmf_distribution_free)> dist(
          d, &redmf_distribution_free);
      Output out(ss_out);
      if (out.csv()) {
        std::fprintf(out.csv(), "w,density\n");
        for (std::size_t i = 0; i < redmf_distribution_cells(d); ++i) {
          double w, p;
          check(redmf_distribution_cell(d, i, &w, &p));
          std::fprintf(out.csv(), "%.9g,%.9g\n", w, p);
        }
        std::fprintf(out.csv(), "%.9g,%.9g\n", redmf_distribution_wmax(d), redmf_distribution_atom(d));
      }
      std::fprintf(out.summary(),
                   "k=%g wmax=%g M=%.6f mean=%.6f second_moment=%.6f taylor_M=%.6f sqrt_formula=%.6f\n",
                   r.k, r.w_max, r.mass_at_wmax, r.mean, r.second_moment, r.taylor_mass,
                   r.sqrt_formula);
    } else if (eq->parsed()) {
      auto s = eq_sc.load();
      redmf_equilibrium e;
      check(redmf_equilibrium_solve(s.get(), &e));
      Output out(eq_out);
      print_equilibrium(out.summary(), e);
      if (out.csv()) {
        std::fprintf(out.csv(),
                     "outcome,k_e,q_e_s,r_e_s,f_e,f2_e,m_e,b_i_e,b_o_e,a_e,residual_min_th,"
                     "residual_max_th,invariant_failures\n");
        std::fprintf(out.csv(), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n",
                     outcome_name(e.outcome), e.k_e, e.q_e, e.r_e, e.f_e, e.f2_e, e.m_e, e.b_i_e,
                     e.b_o_e, e.a_e, e.residual_at_min_th, e.residual_at_max_th,
                     e.invariant_violations);
      }
    } else if (st->parsed()) {
      auto s = st_sc.load();
      if (st_pmax >= 0) ScenarioArgs::set(s.get(), "red.p_max", st_pmax);
      if (st_eps >= 0) {
        // Keep the ramp end points and set p_max to match the slope.
        const double lo = std::stod(ScenarioArgs::get(s.get(), "red.min_th_s"));
        const double hi = std::stod(ScenarioArgs::get(s.get(), "red.max_th_s"));
        ScenarioArgs::set(s.get(), "red.p_max", st_eps * (hi - lo));
      }
      redmf_equilibrium e;
      redmf_stability r;
      check(redmf_stability_analyze(s.get(), &e, &r));
      std::printf("epsilon             %.6g 1/s\n", r.epsilon);
      std::printf("equilibrium         K=%.6g Q=%.6g s R=%.6g s F=%.6g M=%.6g\n", e.k_e, e.q_e,
                  e.r_e, e.f_e, e.m_e);
      std::printf("coefficients        a=%.6g b=%.6g c=%.6g\n", r.a, r.b, r.c);
      std::printf("U, y                %.6g, %.6g s/packet\n", r.u, r.y);
      for (int i = 0; i < 2; ++i)
        std::printf("root %d              %.6g %+.6gi 1/s\n", i + 1, r.root_re[i], r.root_im[i]);
      std::printf("roots verdict       %s%s\n", r.stable ? "stable" : "unstable",
                  r.degenerate ? " (degenerate quadratic)" : "");
      std::printf("sufficient bound    epsilon < %.6g: %s\n", r.sufficient_bound, r.sufficient_ok ? "yes" : "no");
      std::printf("weak condition      U < 1: %s\n", r.weak_u ? "yes" : "no");
      std::printf("uncapped bound      epsilon < %.6g: %s\n", r.uncapped_bound, r.uncapped_ok ? "yes" : "no");
      std::printf("universal bound     epsilon < %.6g: %s\n", r.universal_bound, r.universal_ok ? "yes" : "no");
      std::printf("small phi R         %.6g: %s\n", r.phi_r, r.small_phi_ok ? "yes" : "no");
    } else if (tu->parsed()) {
      auto s = tu_sc.load();
      redmf_tuning t;
      check(redmf_tune(s.get(), &t));
      std::printf("beta = Q_max/T      %.6g\n", t.beta);
      std::printf("gamma = min_th/T    %.6g\n", t.gamma);
      std::printf("alpha^2             %.6g\n", t.alpha_sq);
      std::printf("epsilon bound       %.6g 1/s\n", t.epsilon_bound);
      std::printf("p_max bound         %.6g (%.4f%%)\n", t.p_max_bound, 100 * t.p_max_bound);
    } else if (si->parsed()) {
      auto s = si_sc.load();
      if (si_tend > 0) ScenarioArgs::set(s.get(), "t_end_s", si_tend);
      const std::string path = si_out.empty() ? ScenarioArgs::get(s.get(), "out") : si_out;
      Output out(path);
      SampleSink sink{out.csv()};
      if (out.csv())
        std::fprintf(out.csv(), "t_s,q_s,f,m,b_i,b_o,k,kappa,a_factor,rtt_s,utilization\n");
      redmf_summary sum;
      check(redmf_simulate(s.get(), out.csv() ? &write_sample : nullptr, &sink, &sum));
      std::fprintf(out.summary(),
                   "utilization=%.6f q_mean=%.6g q_min=%.6g q_max=%.6g q_std=%.6g k_mean=%.6g "
                   "steps=%zu max_mass_drift=%.3g\n",
                   sum.utilization, sum.q_mean, sum.q_min, sum.q_max, sum.q_std, sum.k_mean,
                   sum.steps, sum.max_mass_drift);
    } else if (sw->parsed()) {
      auto s = sw_sc.load();
      const auto [from, to] = parse_range(sw_users);
      const auto grid = parse_grid(sw_grid);
      redmf_sweep_row* rows = nullptr;
      std::size_t n = 0;
      check(redmf_sweep(s.get(), from, to, sw_step, grid.data(), grid.size(), sw_threads, &rows, &n));
      std::unique_ptr<redmf_sweep_row, decltype(&redmf_sweep_free)> keep(rows, &redmf_sweep_free);
      Output out(sw_out.empty() ? "-" : sw_out);
      std::fprintf(out.csv(),
                   "n_users,p_max,utilization,q_mean_s,q_min_s,q_max_s,q_std_s,k_mean,oscillating,"
                   "equilibrium,q_e_s,roots_stable,max_real_root\n");
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = rows[i];
        std::fprintf(out.csv(), "%d,%.6g,%.6f,%.6g,%.6g,%.6g,%.6g,%.6g,%d,%s,%.6g,%d,%.6g\n",
                     r.n_users, r.p_max, r.sim.utilization, r.sim.q_mean, r.sim.q_min, r.sim.q_max,
                     r.sim.q_std, r.sim.k_mean, r.oscillating, outcome_name(r.outcome), r.q_e,
                     r.roots_stable, r.max_real_root);
      }
    } else if (orc->parsed()) {
      redmf_oracle_result r;
      redmf_distribution* d = nullptr;
      check(redmf_oracle_run(&or_opt, &r, &d));
      std::unique_ptr<redmf_distribution, decltype(&redmf_distribution_free)> dist(
          d, &redmf_distribution_free);
      Output out(or_out);
      if (out.csv()) {
        std::fprintf(out.csv(), "w,density\n");
        for (std::size_t i = 0; i < redmf_distribution_cells(d); ++i) {
          double w, p;
          check(redmf_distribution_cell(d, i, &w, &p));
          std::fprintf(out.csv(), "%.9g,%.9g\n", w, p);
        }
        std::fprintf(out.csv(), "%.9g,%.9g\n", redmf_distribution_wmax(d), redmf_distribution_atom(d));
      }
      std::fprintf(out.summary(),
                   "k=%g events=%llu M=%.6f mean=%.6f second_moment=%.6f tv_to_fixed_point=%.5f "
                   "max_rel_se=%.4f%s\n",
                   or_opt.k, static_cast<unsigned long long>(r.events), r.mass_at_wmax, r.mean,
                   r.second_moment, r.tv_to_fixed_point, r.max_rel_se,
                   r.insufficient_samples ? " insufficient-samples" : "");
    } else if (va->parsed()) {
      auto s = va_sc.load();
      if (va_ids.empty())
        for (int i = 1; i <= redmf_criterion_count(); ++i) va_ids.push_back(i);
      int failed = 0;
      for (int id : va_ids) {
        int pass = 0;
        double secs = 0;
        char *name = nullptr, *detail = nullptr;
        check(redmf_validate(s.get(), id, va_threads, &pass, &secs, &name, &detail));
        std::printf("[%s] %d %s (%.1f s): %s\n", pass ? "PASS" : "FAIL", id, name, secs, detail);
        std::fflush(stdout);
        redmf_string_free(name);
        redmf_string_free(detail);
        failed += !pass;
      }
      return failed ? kExitNumerical : 0;
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.what.c_str());
    if (f.code == kExitUsage) {
      const auto subs = app.get_subcommands();
      std::fprintf(stderr, "\n%s", (subs.empty() ? &app : subs.front())->help().c_str());
    }
    return f.code;
  }
  return 0;
}
