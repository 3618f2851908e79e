#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ceff/dartu.hpp"
#include "ceff/transient.hpp"
#include "support/random_nets.hpp"

using namespace ceff;
using ceff::testing::rel_diff;

namespace {

RcNetwork lumped(double rd, double c, double slew) {
  RcNetwork net;
  net.name = "lumped";
  net.driver = {rd, slew, 1.0, 0.2, 0.8};
  net.nodes = {{0, NodeKind::Driver, 0.0, {}}, {1, NodeKind::Fanout, c, {}}};
  net.segments = {{0, 0, 1, 0.0, 0.0, {}}};
  return net;
}

RcNetwork pi_circuit(double rd, const PiModel& pi, double slew) {
  // driver pin carries C1 through a zero-ohm stub; the far pin carries C2
  RcNetwork net;
  net.name = "pi";
  net.driver = {rd, slew, 1.0, 0.2, 0.8};
  net.nodes = {{0, NodeKind::Driver, 0.0, {}},
               {1, NodeKind::Junction, 0.0, {}},
               {2, NodeKind::Fanout, pi.c1, {}},
               {3, NodeKind::Fanout, pi.c2, {}}};
  net.segments = {{0, 0, 1, 0.0, 0.0, {}}, {1, 1, 2, 0.0, 0.0, {}}, {2, 1, 3, pi.r_pi, 0.0, {}}};
  return net;
}

}  // namespace

TEST_CASE("single-capacitor ramp response") {
  CHECK(ramp_response_cap(1e3, 1e-14, 2e-11, 0.7, 1e-6) == doctest::Approx(0.7));
  // vanishing slew approaches the step response
  const double tau = 1e3 * 1e-14;
  CHECK(ramp_response_cap(1e3, 1e-14, 1e-22, 1.0, tau * std::numbers::ln2) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(ramp_t50_cap(1e3, 1e-14, 0.0, 1.0) == doctest::Approx(tau * std::numbers::ln2));

  // continuity at the end of the ramp
  const double slew = 3e-11;
  CHECK(rel_diff(ramp_response_cap(2e3, 5e-15, slew, 1.0, slew * (1 - 1e-12)),
                 ramp_response_cap(2e3, 5e-15, slew, 1.0, slew * (1 + 1e-12))) < 1e-9);

  // t50 inverts the response on both branches
  for (double s : {1e-12, 1e-11, 1e-10, 1e-9}) {
    const double t50 = ramp_t50_cap(1e3, 1e-14, s, 0.8);
    CHECK(ramp_response_cap(1e3, 1e-14, s, 0.8, t50) == doctest::Approx(0.4).epsilon(1e-10));
  }
}

TEST_CASE("single-capacitor closed form agrees with the simulator") {
  const RcNetwork net = lumped(1e3, 10e-15, 20e-12);
  const auto sim = simulate_fixed_step(net, 20e-12 / 2000, 200e-12);
  const double closed = ramp_response_cap(1e3, 10e-15, 20e-12, 1.0, 20e-12);
  // times[2000] is the end of the ramp
  CHECK(sim.times[2000] == doctest::Approx(20e-12));
  CHECK(rel_diff(sim.node_voltages[2000][1], closed) < 1e-3);
}

TEST_CASE("pi response") {
  const PiModel collapsed{3e-15, 5e-15, 0.0, false, false};
  for (double t : {1e-12, 1e-11, 5e-11}) {
    const auto [v1, v2] = ramp_response_pi(1e3, collapsed, 2e-11, 1.0, t);
    CHECK(v1 == ramp_response_cap(1e3, 8e-15, 2e-11, 1.0, t));
    CHECK(v2 == v1);
  }
  const PiModel pi{2e-15, 6e-15, 3e3, false, false};
  const auto [v1, v2] = ramp_response_pi(1e3, pi, 2e-11, 0.9, 1e-6);
  CHECK(v1 == doctest::Approx(0.9));
  CHECK(v2 == doctest::Approx(0.9));

  SUBCASE("matches the two-node simulation") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const PiModel p{0.2e-15 + 5e-15 * u(rng), 0.5e-15 + 20e-15 * u(rng), 100 + 5e3 * u(rng), false, false};
      const double rd = 200 + 3e3 * u(rng);
      const double slew = 2e-12 + 100e-12 * u(rng);
      const RcNetwork net = pi_circuit(rd, p, slew);
      const double horizon = default_horizon(net);
      const auto sim = simulate_fixed_step(net, std::min(slew, rd * (p.c1 + p.c2)) / 400, horizon);
      for (std::size_t k = 1; k < sim.times.size(); k += 97) {
        const auto [a, b] = ramp_response_pi(rd, p, slew, 1.0, sim.times[k]);
        if (a > 0.05) CHECK(rel_diff(sim.node_voltages[k][0], a) < 1e-3);
        if (b > 0.05) CHECK(rel_diff(sim.node_voltages[k][3], b) < 1e-3);
      }
    }
  }
  SUBCASE("c1 = 0 is the limit of small c1") {
    const PiModel zero{0.0, 6e-15, 3e3, false, true};
    const PiModel tiny{1e-24, 6e-15, 3e3, false, false};
    for (double t : {2e-12, 2e-11, 8e-11}) {
      const auto a = ramp_response_pi(1e3, zero, 2e-11, 1.0, t);
      const auto b = ramp_response_pi(1e3, tiny, 2e-11, 1.0, t);
      CHECK(a.first == doctest::Approx(b.first).epsilon(1e-6));
      CHECK(a.second == doctest::Approx(b.second).epsilon(1e-6));
    }
  }
}

TEST_CASE("dartu effective capacitance") {
  const DriverParams drv{1e3, 5e-12, 1.0, 0.2, 0.8};

  SUBCASE("no shielding") {
    const auto r = compute_ceff_dartu(PiModel{3e-15, 4e-15, 0.0, false, false}, drv);
    CHECK(r.ceff == 7e-15);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
  }
  SUBCASE("shielded load lies between c1 and c1 + c2") {
    const PiModel pi{1e-15, 9e-15, 5e3, false, false};
    const auto r = compute_ceff_dartu(pi, drv);
    CHECK_FALSE(r.failed);
    CHECK(r.ceff > pi.c1);
    CHECK(r.ceff < pi.total());
    // 1.4078 fF: bisection on the closed-form pi and single-capacitor delays
    const auto oracle = oracle_ceff(pi_circuit(drv.drive_resistance, pi, drv.input_slew));
    CHECK(rel_diff(oracle.ceff, 1.4078e-15) < 1e-3);
    // charge matching up to t50 underestimates this load by about 12%
    CHECK(r.ceff < oracle.ceff);
    CHECK(rel_diff(r.ceff, oracle.ceff) < 0.15);
  }
  SUBCASE("slow ramp sees the whole load") {
    // residual error of charge matching is about 2 (rpi c2 / slew) (c2 / ctotal)
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      const PiModel pi{0.1e-15 + 5e-15 * u(rng), 0.5e-15 + 10e-15 * u(rng), 100 + 1e4 * u(rng), false, false};
      DriverParams slow = drv;
      slow.drive_resistance = 100 + 2e3 * u(rng);
      slow.input_slew = 100.0 * pi.r_pi * pi.c2;
      const auto r = compute_ceff_dartu(pi, slow);
      CHECK(r.ceff > 0.98 * pi.total());
      if (pi.c2 <= pi.c1) CHECK(r.ceff > 0.99 * pi.total());
    }
  }
  SUBCASE("shielding never increases ceff") {
    for (double c1 : {0.5e-15, 2e-15}) {
      double previous = 1.0;
      for (double rpi = 10.0; rpi < 1e6; rpi *= 1.6) {
        const auto r = compute_ceff_dartu(PiModel{c1, 8e-15, rpi, false, false}, drv);
        if (r.failed) continue;
        CHECK(r.ceff <= previous * (1 + 1e-9));
        previous = r.ceff;
      }
    }
  }
  SUBCASE("limits") {
    const PiModel pi{1e-15, 9e-15, 5e3, false, false};
    DriverParams fast = drv;
    fast.input_slew = pi.r_pi * pi.c2 / 100.0;
    fast.drive_resistance = 100.0;
    const auto r = compute_ceff_dartu(pi, fast);
    if (!r.failed) CHECK(std::abs(r.ceff - pi.c1) < 0.02 * pi.total());

    const auto tiny = compute_ceff_dartu(PiModel{1e-15, 9e-15, 1e-3, false, false}, drv);
    CHECK(rel_diff(tiny.ceff, pi.total()) < 0.02);
  }
  SUBCASE("range and determinism") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
      const PiModel pi{5e-15 * u(rng), 1e-16 + 20e-15 * u(rng), 1e4 * u(rng) * u(rng), false, false};
      const DriverParams d{50 + 5e3 * u(rng), 1e-12 + 2e-10 * u(rng), 0.7, 0.2, 0.8};
      const auto a = compute_ceff_dartu(pi, d);
      const auto b = compute_ceff_dartu(pi, d);
      CHECK(a.ceff == b.ceff);
      CHECK(a.iterations == b.iterations);
      CHECK(a.ceff > 0.0);
      CHECK(a.ceff <= pi.total() + 1e-21);
      if (a.failed) {
        CHECK(a.method == CeffMethod::LumpedFallback);
        CHECK(a.ceff == pi.total());
      }
    }
  }
}
