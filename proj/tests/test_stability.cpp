#include <doctest.h>

#include <cmath>
#include <random>

#include "redmf/stability.hpp"

using namespace redmf;

namespace {

NetworkParams isp(int n) { return make_network_params(1e9, 1024, 40, 0.01, 2e-3, n, 64); }
REDConfig isp_red(double p_max = 0.005) { return {0.4e-3, 2e-3, p_max, 1}; }

EquilibriumState isp_eq(int n, double p_max = 0.005) {
  auto r = solve_equilibrium(isp(n), isp_red(p_max));
  REQUIRE(r.state);
  return *r.state;
}

}  // namespace

TEST_CASE("coefficients without RED feedback") {
  const auto p = isp(50);
  const auto e = isp_eq(50);
  const auto l = linearized_coefficients(e, p, 0.0);
  CHECK(l.y == doctest::Approx((1 - e.k_e) / p.capacity_per_user));
  CHECK(l.u == 0);
  CHECK(l.a == doctest::Approx(e.r_e * e.r_e));
  CHECK(l.b == doctest::Approx(e.r_e * (e.k_e * e.f_e + e.k_e * 64 + e.m_e * 64)));
  CHECK(l.b > 0);
  CHECK(weak_condition_u(e, p, 0.0) == 0);
}

TEST_CASE("U = 1 makes the quadratic degenerate") {
  const auto p = isp(50);
  const auto e = isp_eq(50);
  // U = eps (1-K)(1-M) / (K (C + eps F)) = 1  =>  eps = K C / ((1-K)(1-M) - K F).
  const double eps =
      e.k_e * p.capacity_per_user / ((1 - e.k_e) * (1 - e.m_e) - e.k_e * e.f_e);
  REQUIRE(eps > 0);
  const auto l = linearized_coefficients(e, p, eps);
  CHECK(l.u == doctest::Approx(1).epsilon(1e-12));
  CHECK(std::abs(l.a) < 1e-12 * e.r_e * e.r_e);
  const auto roots = roots_and_verdict(0.0, l.b, l.c);
  CHECK(roots.degenerate);
  CHECK(roots.roots[0].real() == doctest::Approx(-l.c / l.b));
}

TEST_CASE("linearization needs a positive loss rate") {
  auto e = isp_eq(50);
  e.k_e = 0;
  CHECK_THROWS_AS(linearized_coefficients(e, isp(50), 1.0), Error);
  CHECK_THROWS_AS(linearized_coefficients(isp_eq(50), isp(50), -1.0), Error);
}

TEST_CASE("fifty users at half a percent are stable") {
  const auto p = isp(50);
  const auto red = isp_red();
  const auto e = isp_eq(50);
  const auto s = analyze_stability(e, p, red.epsilon(), red.max_th);
  CHECK(red.epsilon() == doctest::Approx(3.125));
  CHECK(s.coeffs.u < 1);
  CHECK(s.weak_u);
  CHECK(s.roots_negative);
  CHECK(s.roots.roots[0].real() < 0);
  CHECK(s.roots.roots[1].real() < 0);
  // The sufficient bound holds here and agrees with the roots.
  CHECK(s.sufficient_ok);
  CHECK(s.sufficient_bound > red.epsilon());
  // Each returned root satisfies the quadratic.
  for (const auto& phi : s.roots.roots) {
    const auto res = s.coeffs.a * phi * phi + s.coeffs.b * phi + s.coeffs.c;
    CHECK(std::abs(res) < 1e-9 * (std::abs(s.coeffs.b * phi) + std::abs(s.coeffs.c)));
  }
}

TEST_CASE("explicit roots") {
  auto r = roots_and_verdict(1, 2, 2);
  CHECK(r.stable);
  CHECK(r.max_real() == doctest::Approx(-1));
  CHECK(std::abs(r.roots[0].imag()) == doctest::Approx(1));
  r = roots_and_verdict(1, 2, -3);
  CHECK_FALSE(r.stable);
  const double lo = std::min(r.roots[0].real(), r.roots[1].real());
  CHECK(r.max_real() == doctest::Approx(1));
  CHECK(lo == doctest::Approx(-3));
  r = roots_and_verdict(1, 0, 1);
  CHECK_FALSE(r.stable);  // purely imaginary pair is not asymptotically stable
  CHECK_THROWS_AS(roots_and_verdict(0, 0, 1), Error);
  // Large b/a ratio: no cancellation in the small root.
  r = roots_and_verdict(1e-12, 1, 1);
  CHECK(r.max_real() == doctest::Approx(-1).epsilon(1e-9));
}

TEST_CASE("conjugate pairs: stable exactly when b and a share a sign") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10, 10);
  int checked = 0;
  while (checked < 10000) {
    const double a = u(rng), b = u(rng), c = u(rng);
    if (a == 0 || b * b - 4 * a * c >= 0) continue;
    ++checked;
    const auto r = roots_and_verdict(a, b, c);
    REQUIRE(r.roots[0] == std::conj(r.roots[1]));
    if (a > 0) REQUIRE(r.stable == (b > 0));
  }
  CHECK(checked == 10000);
}

TEST_CASE("sufficient bound implies the weak condition and positive a, b") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> users(20, 90);
  std::uniform_real_distribution<double> pm(0.002, 0.02);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  int used = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = isp(users(rng));
    const auto red = isp_red(pm(rng));
    const auto r = solve_equilibrium(p, red);
    if (!r.state) continue;
    const double bound = sufficient_epsilon_bound(*r.state, p);
    const double eps = frac(rng) * bound;
    const auto l = linearized_coefficients(*r.state, p, eps);
    CHECK(l.u < 1);
    CHECK(l.a > 0);
    CHECK(l.b > 0);
    ++used;
  }
  CHECK(used > 50);
}

TEST_CASE("sufficient bound limits") {
  const auto p = isp(50);
  auto e = isp_eq(50);
  CHECK(sufficient_epsilon_bound(e, p) ==
        doctest::Approx(e.k_e * p.capacity_per_user / (1 - e.m_e)));
  e.m_e = 0;
  CHECK(sufficient_epsilon_bound(e, p) == doctest::Approx(e.k_e * p.capacity_per_user));
  e.m_e = 1;
  CHECK(std::isinf(sufficient_epsilon_bound(e, p)));
}

TEST_CASE("uncapped-window bound") {
  CHECK(uncapped_epsilon_bound(0.01, 2340) == doctest::Approx(27.2).epsilon(2e-3));
  CHECK(uncapped_epsilon_bound(1e-8, 2340) == doctest::Approx(1e-8 * 2340).epsilon(1e-3));
  CHECK_THROWS_AS(uncapped_epsilon_bound(0.54, 2340), Error);
  CHECK_THROWS_AS(uncapped_epsilon_bound(0.3, 2340), Error);  // denominator already < 0
  CHECK_THROWS_AS(uncapped_epsilon_bound(0.0, 2340), Error);
}

TEST_CASE("tuning rule") {
  const auto t = tune_red(0.01, 2e-3, 0.4e-3, 64);
  CHECK(t.beta == doctest::Approx(0.2));
  CHECK(t.gamma == doctest::Approx(0.04));
  CHECK(t.alpha_sq == doctest::Approx(1.7161));
  CHECK(t.p_max_bound == doctest::Approx(0.00357).epsilon(2e-3));
  CHECK(t.p_max_bound > 0.00345);
  CHECK(t.p_max_bound < 0.00365);
  CHECK(t.epsilon_bound == doctest::Approx(2.234).epsilon(1e-3));
  CHECK(tune_red(0.01, 2e-3, 2e-3, 64).p_max_bound == 0);
  CHECK_THROWS_AS(tune_red(0.01, 1e-3, 2e-3, 64), Error);
  CHECK_THROWS_AS(tune_red(0.0, 1e-3, 0.5e-3, 64), Error);
}

TEST_CASE("bounds scale like a rate") {
  // Multiplying C by s and dividing every time constant by s leaves windows
  // and K unchanged and multiplies each epsilon bound by s.
  const double s = 3.0;
  const auto p1 = isp(50);
  auto p2 = p1;
  p2.capacity_per_user *= s;
  p2.prop_delay /= s;
  p2.buffer_delay /= s;
  const auto r1 = isp_red();
  REDConfig r2{r1.min_th / s, r1.max_th / s, r1.p_max, 1};
  const auto e1 = *solve_equilibrium(p1, r1).state;
  const auto e2 = *solve_equilibrium(p2, r2).state;
  CHECK(e2.k_e == doctest::Approx(e1.k_e).epsilon(1e-6));
  CHECK(sufficient_epsilon_bound(e2, p2) ==
        doctest::Approx(s * sufficient_epsilon_bound(e1, p1)).epsilon(1e-6));
  CHECK(tune_red(p2.prop_delay, p2.buffer_delay, r2.min_th, 64).epsilon_bound ==
        doctest::Approx(s * tune_red(p1.prop_delay, p1.buffer_delay, r1.min_th, 64)
                                .epsilon_bound));
  CHECK(uncapped_epsilon_bound(e2.k_e, p2.capacity_per_user) ==
        doctest::Approx(s * uncapped_epsilon_bound(e1.k_e, p1.capacity_per_user)).epsilon(1e-6));
  // U is dimensionless.
  CHECK(weak_condition_u(e2, p2, s * r1.epsilon()) ==
        doctest::Approx(weak_condition_u(e1, p1, r1.epsilon())).epsilon(1e-6));
}

TEST_CASE("second-moment growth rate") {
  for (double k : {1e-4, 0.0015, 0.01}) {
    const auto fp = solve_fixed_point(k, 64);
    CHECK(std::abs(second_moment_dynamics_check(fp.distribution(), k)) < 1e-4);
  }
  const auto pinned = WindowDistribution::degenerate_at_wmax(64, 1024);
  CHECK(second_moment_dynamics_check(pinned, 0.01) ==
        doctest::Approx(-0.5 * 0.01 * 64 * 64));
}

TEST_CASE("report fields are consistent") {
  const auto p = isp(50);
  const auto red = isp_red();
  const auto s = analyze_stability(isp_eq(50), p, red.epsilon(), red.max_th);
  CHECK(s.universal_bound == doctest::Approx(2.234).epsilon(1e-3));
  CHECK_FALSE(s.universal_ok);  // 3.125 /s exceeds the universal rule
  CHECK(std::isfinite(s.coeffs.c));
  CHECK(s.phi_r == doctest::Approx(s.coeffs.b / (2 * s.coeffs.a) * isp_eq(50).r_e));
}
