#include <doctest.h>

#include <cmath>

#include "redmf/equilibrium.hpp"
#include "redmf/mc_oracle.hpp"
#include "redmf/meanfield_sim.hpp"
#include "redmf/steady_state.hpp"

using namespace redmf;

TEST_CASE("single events") {
  std::mt19937_64 rng(3);
  FlowState f{64, 64};
  ack_event(f, 0.0, rng);
  CHECK(f.window == 64);
  f.window = 2;
  ack_event(f, 1.0, rng);
  CHECK(f.window == 1);
  ack_event(f, 1.0, rng);
  CHECK(f.window == 1);
  f.window = 4;
  ack_event(f, 0.0, rng);
  CHECK(f.window == doctest::Approx(4.25));
}

TEST_CASE("time at the cap matches the analytic atom") {
  OracleOptions o;
  o.k = 0.0015;
  const auto r = run_oracle(o);
  CHECK(r.mass_at_wmax == doctest::Approx(0.033).epsilon(0.005 / 0.033));
  CHECK(std::abs(r.mass_at_wmax - solve_fixed_point(0.0015, 64).mass_at_wmax) < 0.003);
  CHECK(r.events == 10'000'000);
  CHECK_FALSE(r.insufficient_samples);
  CHECK(r.dist.is_normalized(1e-9));
}

TEST_CASE("oracle distribution matches the fixed point") {
  for (double k : {0.0005, 0.0015, 0.005}) {
    CAPTURE(k);
    OracleOptions o;
    o.k = k;
    const auto r = run_oracle(o);
    const auto fp = solve_fixed_point(k, 64);
    CHECK(tv_distance(r.dist, fp.distribution()) < 0.02);
    CHECK(std::abs(r.mean / fp.mean - 1) < 0.03);
    CHECK(std::abs(r.second_moment / (2 * (1 - fp.mass_at_wmax) / k) - 1) < 0.03);
  }
}

TEST_CASE("second moment at high loss follows the discrete balance") {
  // Growth and halving are exclusive per event, so the balance is
  // F2 = 2 (1 - k)(1 - M) / k; the fluid value 2 (1 - M) / k is O(k) higher.
  OracleOptions o;
  o.k = 0.05;
  const auto r = run_oracle(o);
  const double m = solve_fixed_point(0.05, 64).mass_at_wmax;
  CHECK(r.second_moment == doctest::Approx(2 * (1 - 0.05) * (1 - m) / 0.05).epsilon(0.03));
}

TEST_CASE("identical seeds give identical histograms") {
  OracleOptions o;
  o.k = 0.002;
  o.n_events = 200'000;
  o.seed = 42;
  const auto a = run_oracle(o);
  o.threads = 4;
  const auto b = run_oracle(o);
  const auto ca = a.dist.cell_mass(), cb = b.dist.cell_mass();
  CHECK(std::equal(ca.begin(), ca.end(), cb.begin()));
  CHECK(a.mean == b.mean);
  o.seed = 43;
  const auto c = run_oracle(o);
  CHECK(c.mean != a.mean);
}

TEST_CASE("TV distance shrinks with more events") {
  const auto fp = solve_fixed_point(0.0015, 64).distribution();
  double prev = 1;
  for (std::uint64_t n : {100'000ull, 1'000'000ull, 10'000'000ull}) {
    OracleOptions o;
    o.k = 0.0015;
    o.n_events = n;
    const double tv = tv_distance(run_oracle(o).dist, fp);
    CHECK(tv < prev);
    prev = tv;
  }
}

TEST_CASE("too few events raise the insufficient-samples flag") {
  OracleOptions o;
  o.k = 0.0015;
  o.n_events = 20'000;
  CHECK(run_oracle(o).insufficient_samples);
  o.n_flows = 1;
  o.n_events = 10'000'000;
  CHECK(run_oracle(o).insufficient_samples);  // no across-flow error estimate
}

TEST_CASE("oracle input errors") {
  OracleOptions o;
  o.k = 1.0;
  CHECK_THROWS_AS(run_oracle(o), Error);
  o.k = 0.01;
  o.n_flows = 0;
  CHECK_THROWS_AS(run_oracle(o), Error);
  o.n_flows = 4;
  o.n_events = 3;
  CHECK_THROWS_AS(run_oracle(o), Error);
  CHECK_THROWS_AS(coarse_bins(solve_fixed_point(0.01, 64).distribution(), 0.0), Error);
}

TEST_CASE("coarse bins keep the total") {
  const auto d = solve_fixed_point(0.003, 64).distribution();
  double s = 0;
  for (double b : coarse_bins(d, 4.0)) s += b;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coarse_bins(d, 4.0).size() == 17);
  CHECK(tv_distance(d, d) == 0);
}

TEST_CASE("window growth transient agrees with the integrator") {
  // Windows start from the fixed point of a heavier loss and grow; no queue.
  const double k = 0.0015;
  auto p = make_network_params(1e9, 1024, 40, 0.01, 2e-3, 50, 64);
  p.capacity_per_user *= 10;
  SimOptions o;
  o.warm_k = 0.02;
  o.t_end = 0.6;
  o.sample_interval = 0.05;
  Simulator s(p, ConstantLoss{k}, o);
  const auto initial = s.state().dist;
  std::vector<double> times, sim_f;
  s.run([&](const SeriesRow& r) {
    times.push_back(r.t);
    sim_f.push_back(r.f);
  });
  const auto mc = oracle_transient(initial, k, p.prop_delay, times, 20000, 5);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CAPTURE(times[i]);
    CHECK(std::abs(mc[i] / sim_f[i] - 1) < 0.05);
  }
  CHECK(sim_f.back() > 1.5 * sim_f.front());
}
