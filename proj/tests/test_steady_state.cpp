#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "redmf/steady_state.hpp"

using namespace redmf;

TEST_CASE("series anchor coefficients") {
  const double k = 0.0015, W = 64;
  const auto s = build_series(k, W, default_depth(W));
  CHECK(default_depth(64) == 6);
  const double a00 = k * W * std::exp(k * W * W / 2);
  CHECK(s.coefficient(0, 0) == doctest::Approx(a00).epsilon(1e-12));
  CHECK(s.coefficient(0, 0) == doctest::Approx(2.075).epsilon(2e-3));
  CHECK(s.coefficient(1, 1) == doctest::Approx(-4.0 / 3.0 * a00).epsilon(1e-12));
  // Continuity plus the +kW jump at W/2 give a_0^1 = a_0^0 + kW/3 e^{+kW^2/8}.
  CHECK(s.coefficient(1, 0) ==
        doctest::Approx(a00 + k * W / 3 * std::exp(k * W * W / 8)).epsilon(1e-12));
  // Off-diagonal rule.
  for (int n = 1; n <= s.depth; ++n)
    for (int i = 1; i <= n; ++i)
      CHECK(s.coefficient(n, i) ==
            doctest::Approx(off_diagonal_factor(i) * s.coefficient(n - i, 0)));
  for (int i = 1; i < 6; ++i)
    CHECK(off_diagonal_factor(i) * off_diagonal_factor(i + 1) < 0);
}

TEST_CASE("series errors") {
  CHECK_THROWS_AS(build_series(0.0, 64, 6), Error);
  CHECK_THROWS_AS(build_series(-1e-3, 64, 6), Error);
  CHECK_THROWS_AS(build_series(1e-3, 64, 0), Error);
  const auto s = build_series(1e-3, 64, 6);
  CHECK_THROWS_AS(eval_density(s, 0.0), Error);
  CHECK_THROWS_AS(eval_density(s, 64.5), Error);
  // e^{k W^2/2} = e^{1024}: coefficients stay representable, raw density not.
  const auto big = build_series(0.5, 64, 8);
  CHECK_THROWS_AS(eval_density(big, 10.0), Error);
}

TEST_CASE("unit-mass density matches backward ODE integration") {
  for (double k : {0.0005, 0.0015, 0.005}) {
    CAPTURE(k);
    const oracle::OdeFixedPoint ode(k, 64);
    const auto s = build_series(k, 64, 12);
    // Backward integration carries absolute, not relative, error into the
    // region where p is tiny.
    const double scale = eval_density(s, 32.0);
    for (double w : {63.9, 50.0, 33.0, 31.0, 20.0, 16.5, 12.0, 7.7, 3.1, 1.7}) {
      CAPTURE(w);
      CHECK(std::abs(eval_density(s, w) - ode.at(w)) < 1e-6 * scale);
    }
    const double m_ode = 1.0 / (1.0 + ode.integral());
    CHECK(normalize(s).mass_at_wmax() == doctest::Approx(m_ode).epsilon(1e-6));
  }
}

TEST_CASE("normalization at the reference loss rate") {
  const auto fp = solve_fixed_point(0.0015, 64);
  CHECK(fp.mass_at_wmax >= 0.030);
  CHECK(fp.mass_at_wmax <= 0.036);
  CHECK(fp.mass_at_wmax == doctest::Approx(0.033).epsilon(0.03));
  const auto d = fp.distribution();
  CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  // Boundary condition p(W) = M k W.
  CHECK(fp.density(64) == doctest::Approx(fp.mass_at_wmax * 0.0015 * 64));
  // Single-term region.
  const double w = 40;
  CHECK(fp.density(w) == doctest::Approx(fp.series.coefficient(0, 0) *
                                         std::exp(-0.0015 * w * w / 2)));
  // Vanishing at the origin.
  CHECK(d.density(0) < fp.density(16));
  CHECK(fp.density(0.25) < 1e-6);
}

TEST_CASE("closed-form integral agrees with adaptive quadrature") {
  for (double k : {1e-4, 0.0015, 0.02, 0.05}) {
    CAPTURE(k);
    const auto fp = solve_fixed_point(k, 64);
    double q = 0;
    double a = fp.series.lower_edge();
    while (a < 64) {
      const double b = std::min(64.0, 2 * a);
      q += oracle::integrate([&](double w) { return fp.density(w); }, a,
                             b - 1e-13 * b, 1e-13);
      a = b;
    }
    CHECK(q + fp.mass_at_wmax == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("jump at W/2 follows the Dirac source") {
  for (double k : {0.0005, 0.0015, 0.01}) {
    const auto fp = solve_fixed_point(k, 64);
    const double up = fp.density(32.0);
    const double down = fp.density(32.0 - 1e-9);
    CHECK(up - down == doctest::Approx(fp.mass_at_wmax * k * 64).epsilon(1e-5));
    // Continuous at deeper breakpoints.
    CHECK(fp.density(16.0) == doctest::Approx(fp.density(16.0 - 1e-9)).epsilon(1e-7));
    CHECK(fp.density(8.0) == doctest::Approx(fp.density(8.0 - 1e-9)).epsilon(1e-7));
  }
}

TEST_CASE("integral identity p(w) = int_w^{2w} k v dD(v)") {
  std::mt19937_64 rng(2024);
  for (double k : {0.0005, 0.0015, 0.005}) {
    const auto fp = solve_fixed_point(k, 64);
    auto kv_p = [&](double v) { return k * v * fp.density(v); };
    std::uniform_real_distribution<double> U(fp.series.lower_edge(), 32.0);
    for (int t = 0; t < 50;) {
      const double w = U(rng);
      double rhs = 0;
      double a = w;
      // Integrate piecewise between dyadic breakpoints.
      for (double brk : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
        if (brk <= a) continue;
        const double b = std::min(brk, 2 * w);
        rhs += oracle::integrate(kv_p, a, b - 1e-12 * b, 1e-18);
        a = b;
        if (a >= 2 * w) break;
      }
      CAPTURE(w);
      // Relative comparison only above the rounding floor of the series.
      if (fp.density(w) < 1e-9) {
        CHECK(std::abs(rhs - fp.density(w)) < 1e-13);
        continue;
      }
      ++t;
      CHECK(std::abs(rhs - fp.density(w)) / fp.density(w) < 1e-4);
    }
    // Above W/2 the atom contributes k W M.
    for (double w : {33.0, 45.0, 60.0}) {
      const double rhs =
          oracle::integrate(kv_p, w, 64, 1e-14) + k * 64 * fp.mass_at_wmax;
      CHECK(rhs == doctest::Approx(fp.density(w)).epsilon(1e-6));
    }
  }
}

TEST_CASE("positivity and monotonicity in k") {
  double prev_m = 1.0, prev_mean = 64.0;
  for (double k = 1e-5; k < 0.2; k *= 1.6) {
    CAPTURE(k);
    const auto fp = solve_fixed_point(k, 64);
    const double noise = 1e-14 * series_abs_bound(fp.series);
    for (double w = fp.series.lower_edge(); w <= 64; w *= 1.07) {
      if (std::abs(fp.density(w)) > noise)
        CHECK(fp.density(w) > 0);
      else
        CHECK(fp.density(w) > -noise);
    }
    CHECK(fp.mass_at_wmax < prev_m);
    CHECK(fp.mean <= prev_mean);
    prev_m = fp.mass_at_wmax;
    prev_mean = fp.mean;
  }
}

TEST_CASE("series terms stay bounded") {
  const double c = off_diagonal_sum();
  CHECK(std::isfinite(c));
  CHECK(c == doctest::Approx(4.0 / 3 + 16.0 / 45 + 64.0 / 2835 + 256.0 / 722925)
                 .epsilon(1e-4));
  for (double k : {1e-4, 0.0015, 0.05}) {
    const auto fp = solve_fixed_point(k, 64);
    double sup_a0 = 0;
    for (int n = 0; n <= fp.series.depth; ++n)
      sup_a0 = std::max(sup_a0, std::abs(fp.series.coefficient(n, 0)));
    const double bound = series_abs_bound(fp.series);
    CHECK(std::isfinite(bound));
    CHECK(bound <= sup_a0 * (1 + c) * (1 + 1e-12));
  }
}

TEST_CASE("taylor law for the mass at w_max") {
  CHECK(taylor_mass(0.0015, 64) == doctest::Approx(0.046).epsilon(0.02));
  CHECK(taylor_mass(0.0, 64) == 1.0);
  double prev = 1e9;
  for (double k : {1e-4, 3e-5, 1e-5}) {
    const double m = solve_fixed_point(k, 64).mass_at_wmax;
    const double ratio = std::log(taylor_mass(k, 64)) / std::log(m);
    CAPTURE(k);
    CHECK(ratio > 0.8);
    CHECK(ratio < 1.2);
    CHECK(std::abs(ratio - 1) < prev);
    prev = std::abs(ratio - 1);
  }
}

TEST_CASE("moments: grid quadrature, closed form and the second-moment law") {
  for (double k : {0.0005, 0.0015, 0.005, 0.05}) {
    CAPTURE(k);
    const auto fp = solve_fixed_point(k, 64);
    const auto d = fp.distribution();
    CHECK(mean_window(d) == doctest::Approx(fp.mean).epsilon(1e-5));
    CHECK(second_moment(d) == doctest::Approx(fp.second_moment).epsilon(1e-5));
    CHECK(fp.second_moment ==
          doctest::Approx(2 * (1 - fp.mass_at_wmax) / k).epsilon(1e-8));
  }
  const auto d15 = solve_fixed_point(0.0015, 64).distribution();
  CHECK(std::abs(mean_window(d15) - 1.31 / std::sqrt(0.0015)) / mean_window(d15) < 0.05);
  const auto d5 = solve_fixed_point(0.05, 64).distribution();
  CHECK(std::abs(mean_window(d5) - 1.31 / std::sqrt(0.05)) / mean_window(d5) < 0.05);
  const auto atom = WindowDistribution::degenerate_at_wmax(64, 1024);
  CHECK(mean_window(atom) == 64.0);
  CHECK(second_moment(atom) == 64.0 * 64.0);
  CHECK(solve_fixed_point(0.0, 64).mean == 64.0);
  CHECK_THROWS_AS(mean_window(WindowDistribution::unchecked(64, {0.5}, 0.2)), Error);
}

TEST_CASE("normalization holds for random loss rates and grids") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logk(std::log(1e-6), std::log(0.3));
  for (int t = 0; t < 40; ++t) {
    const double k = std::exp(logk(rng));
    const std::size_t cells = std::size_t{1} << (6 + t % 6);
    const auto d = solve_fixed_point(k, 64).distribution(cells);
    CAPTURE(k);
    CHECK(d.is_normalized());
  }
}
