#include <doctest.h>

#include <random>

#include "redmf/model.hpp"

using namespace redmf;

namespace {
REDConfig isp_red() { return {0.4e-3, 2e-3, 0.005, 1.0}; }
NetworkParams isp(int n) {
  return make_network_params(1e9, 1024, 40, 0.01, 2e-3, n, 64);
}
}  // namespace

TEST_CASE("red ramp end points and midpoint") {
  const auto cfg = isp_red();
  CHECK(red_drop_probability(cfg, 0.4e-3) == 0.0);
  CHECK(red_drop_probability(cfg, 2e-3) == doctest::Approx(0.005));
  CHECK(red_drop_probability(cfg, 1.2e-3) == doctest::Approx(0.0025));
  CHECK(red_drop_probability(cfg, 0.0) == 0.0);
  CHECK(red_drop_probability(cfg, 2.1e-3) == 1.0);
  CHECK(cfg.epsilon() == doctest::Approx(3.125));
}

TEST_CASE("red ramp is monotone and continuous below max_th") {
  const auto cfg = isp_red();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> q(0.0, 2.5e-3);
  for (int i = 0; i < 2000; ++i) {
    double a = q(rng), b = q(rng);
    if (a > b) std::swap(a, b);
    CHECK(red_drop_probability(cfg, a) <= red_drop_probability(cfg, b));
    if (b <= cfg.max_th) {
      // Lipschitz with constant epsilon on [0, max_th].
      CHECK(red_drop_probability(cfg, b) - red_drop_probability(cfg, a) <=
            cfg.epsilon() * (b - a) + 1e-15);
    }
  }
}

TEST_CASE("unit conversions for the ISP scenario") {
  const auto p = isp(50);
  CHECK(p.aggregate_capacity() == doctest::Approx(117481.2).epsilon(1e-6));
  const double buf = units_convert(p, 2e-3, Unit::Seconds, Unit::Packets);
  CHECK(buf >= 234.0);
  CHECK(buf <= 235.0);
  CHECK(units_convert(p, 0.4e-3, Unit::Seconds, Unit::Packets) ==
        doctest::Approx(47).epsilon(0.01));
  CHECK(units_convert(p, 0.0, Unit::Seconds, Unit::Packets) == 0.0);
  CHECK(units_convert(p, buf, Unit::Packets, Unit::Seconds) ==
        doctest::Approx(2e-3));
  CHECK(units_convert(p, 1e9, Unit::BitsPerSecond, Unit::PacketsPerSecond) ==
        doctest::Approx(p.aggregate_capacity()));
  CHECK_THROWS_AS(units_convert(p, 1.0, Unit::Seconds, Unit::BitsPerSecond),
                  Error);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(make_network_params(1e9, 1024, 40, 0.01, 2e-3, 0, 64), Error);
  CHECK_THROWS_AS(make_network_params(1e9, 1024, 40, 0.01, 2e-3, 10, 1), Error);
  CHECK_THROWS_AS((REDConfig{2e-3, 1e-3, 0.1, 1}.validate()), Error);
  CHECK_THROWS_AS((REDConfig{0, 1e-3, 0.0, 1}.validate()), Error);
  CHECK_NOTHROW(isp_red().validate());
}

TEST_CASE("window distribution constructors normalize") {
  CHECK(WindowDistribution::degenerate_at_wmax(64, 1024).is_normalized());
  const auto pm = WindowDistribution::point_mass(64, 1024, 1.0);
  CHECK(pm.is_normalized());
  CHECK(pm.mass_at_wmax() == 0.0);
  CHECK_THROWS_AS(WindowDistribution(64, std::vector<double>(8, 0.1), 0.0), Error);
  CHECK_THROWS_AS(WindowDistribution(64, {0.5, -0.1, 0.6}, 0.0), Error);
}
