#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ceff/dartu.hpp"
#include "ceff/error.hpp"
#include "ceff/pi_model.hpp"
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

}  // namespace

TEST_CASE("one-pole step limit") {
  const double rd = 1e3, c = 10e-15;
  const auto r = simulate(lumped(rd, c, 1e-16));
  CHECK(rel_diff(r.t50_root, rd * c * std::numbers::ln2) < 1e-3);
}

TEST_CASE("random nets settle, stay in range and conserve charge") {
  std::mt19937_64 rng(41);
  ceff::testing::RandomNetConfig cfg;
  cfg.coupling_probability = 0.2;
  for (int trial = 0; trial < 40; ++trial) {
    const RcNetwork net = ceff::testing::random_net(rng, cfg);
    const auto r = simulate(net);
    const double vdd = net.driver.vdd;
    double stored = 0.0;
    const auto derived = derive_node_quantities(net);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      CHECK(r.node_voltages.back()[i] == doctest::Approx(vdd).epsilon(0.01));
      stored += derived[i].node_ground_cap * r.node_voltages.back()[i];
    }
    CHECK(rel_diff(stored, r.delivered_charge) < 5e-3);
    double lo = 0.0, hi = 0.0;
    for (const auto& snap : r.node_voltages)
      for (double v : snap) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    CHECK(lo >= -1e-6 * vdd);
    CHECK(hi <= vdd * (1 + 1e-6));
  }
}

TEST_CASE("halving the final step barely moves t50") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const RcNetwork net = ceff::testing::random_net(rng);
    const auto r = simulate(net);
    const auto finer = simulate_fixed_step(net, 0.5 * r.step, r.horizon, false);
    CHECK(rel_diff(r.t50_root, finer.t50_root) < 1e-4);
  }
}

TEST_CASE("short horizon reports NoCrossing") {
  TransientOptions opts;
  opts.horizon = 1e-15;
  try {
    simulate(lumped(1e3, 1e-14, 1e-11), opts);
    FAIL("expected NoCrossing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoCrossing);
  }
}

TEST_CASE("oracle ceff") {
  SUBCASE("purely capacitive net sees its total") {
    std::mt19937_64 rng(43);
    ceff::testing::RandomNetConfig cfg;
    cfg.r_lo = cfg.r_hi = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const RcNetwork net = ceff::testing::random_net(rng, cfg);
      const auto r = oracle_ceff(net);
      CHECK(r.method == CeffMethod::Oracle);
      CHECK(rel_diff(r.ceff, total_capacitance(net)) < 1e-6);
    }
  }
  SUBCASE("heavy shielding") {
    RcNetwork net;
    net.name = "shielded";
    net.driver = {200.0, 2e-12, 1.0, 0.2, 0.8};
    net.nodes = {{0, NodeKind::Driver, 0.0, {}}, {1, NodeKind::Fanout, 20e-15, {}}};
    net.segments = {{0, 0, 1, 10e3, 2e-15, {}}};
    const auto r = oracle_ceff(net);
    CHECK(r.ceff / total_capacitance(net) < 0.5);
  }
  SUBCASE("tracks dartu ordering over a shielding sweep") {
    double prev_oracle = 1.0, prev_dartu = 1.0;
    for (double rpi : {100.0, 400.0, 1600.0, 6400.0}) {
      RcNetwork net;
      net.name = "pi";
      net.driver = {1e3, 10e-12, 1.0, 0.2, 0.8};
      net.nodes = {{0, NodeKind::Driver, 0.0, {}},
                   {1, NodeKind::Junction, 0.0, {}},
                   {2, NodeKind::Fanout, 2e-15, {}},
                   {3, NodeKind::Fanout, 8e-15, {}}};
      net.segments = {{0, 0, 1, 0.0, 0.0, {}}, {1, 1, 2, 0.0, 0.0, {}}, {2, 1, 3, rpi, 0.0, {}}};
      const auto o = oracle_ceff(net);
      const auto d = compute_ceff_dartu(PiModel{2e-15, 8e-15, rpi, false, false}, net.driver);
      CHECK(o.ceff < prev_oracle);
      CHECK(d.ceff < prev_dartu);
      prev_oracle = o.ceff;
      prev_dartu = d.ceff;
    }
  }
}

TEST_CASE("spice deck export") {
  std::mt19937_64 rng(44);
  const RcNetwork net = ceff::testing::random_net(rng);
  std::ostringstream os;
  write_spice_deck(net, os);
  const std::string deck = os.str();
  CHECK(deck.find("Vin src 0 PWL") != std::string::npos);
  CHECK(deck.find(".measure tran t50") != std::string::npos);
  CHECK(deck.rfind(".end\n") == deck.size() - 5);
  std::size_t resistors = 0;
  std::istringstream lines(deck);
  for (std::string line; std::getline(lines, line);)
    if (!line.empty() && line[0] == 'R') ++resistors;
  CHECK(resistors == net.segments.size() + 1);
}
