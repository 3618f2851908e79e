#include <doctest.h>

#include <random>

#include "ceff/error.hpp"
#include "ceff/pi_model.hpp"
#include "support/random_nets.hpp"

using namespace ceff;
using ceff::testing::rel_diff;

namespace {

RcNetwork far_end_cap(double r, double c) {
  RcNetwork net;
  net.name = "far";
  net.driver = {1e3, 10e-12, 0.7, 0.2, 0.8};
  net.nodes = {{0, NodeKind::Driver, 0.0, {}}, {1, NodeKind::Fanout, c, {}}};
  net.segments = {{0, 0, 1, r, 0.0, {}}};
  return net;
}

}  // namespace

TEST_CASE("moments of simple loads") {
  SUBCASE("lumped") {
    const auto m = admittance_moments(far_end_cap(0.0, 3e-15));
    CHECK(m.y1 == doctest::Approx(3e-15));
    CHECK(m.y2 == 0.0);
    CHECK(m.y3 == 0.0);
  }
  SUBCASE("single pole") {
    const double r = 2e3, c = 5e-15;
    const auto m = admittance_moments(far_end_cap(r, c));
    CHECK(rel_diff(m.y1, c) < 1e-15);
    CHECK(rel_diff(m.y2, -r * c * c) < 1e-15);
    CHECK(rel_diff(m.y3, r * r * c * c * c) < 1e-15);
  }
}

TEST_CASE("recursion moments match the nodal-analysis expansion") {
  std::mt19937_64 rng(21);
  ceff::testing::RandomNetConfig cfg;
  cfg.max_nodes = 10;
  cfg.coupling_probability = 0.2;
  for (int trial = 0; trial < 200; ++trial) {
    const RcNetwork net = ceff::testing::random_net(rng, cfg);
    const auto fast = admittance_moments(net);
    const auto mna = ceff::testing::mna_moments(net);
    CHECK(rel_diff(fast.y1, mna.y1) < 1e-9);
    CHECK(rel_diff(fast.y2, mna.y2) < 1e-9);
    CHECK(rel_diff(fast.y3, mna.y3) < 1e-9);
    CHECK(fast.y2 <= 0.0);
    CHECK(fast.y3 >= 0.0);
  }
}

TEST_CASE("pi reduction") {
  SUBCASE("exact single pole") {
    const double r = 750.0, c = 8e-15;
    const PiModel pi = reduce_to_pi({c, -r * c * c, r * r * c * c * c}, c);
    CHECK_FALSE(pi.degenerate);
    CHECK(pi.c1 == doctest::Approx(0.0).epsilon(1e-9 * c));
    CHECK(rel_diff(pi.c2, c) < 1e-9);
    CHECK(rel_diff(pi.r_pi, r) < 1e-9);
  }
  SUBCASE("lumped load is degenerate") {
    const PiModel pi = reduce_to_pi({4e-15, 0.0, 0.0}, 4e-15);
    CHECK(pi.degenerate);
    CHECK(pi.c1 == 4e-15);
    CHECK(pi.c2 == 0.0);
    CHECK(pi.r_pi == 0.0);
  }
  SUBCASE("non-physical moments raise") {
    CHECK_THROWS_AS(reduce_to_pi({1e-15, 1e-25, 1e-36}, 1e-15), Error);
    CHECK_THROWS_AS(reduce_to_pi({1e-15, -1e-25, -1e-36}, 1e-15), Error);
    // far more C2 than y1 allows
    CHECK_THROWS_AS(reduce_to_pi({1e-15, -1e-24, 1e-35}, 1e-15), Error);
  }
  SUBCASE("rounding-level negative C1 is clamped") {
    const double r = 750.0, c = 8e-15;
    AdmittanceMoments m{c, -r * c * c, r * r * c * c * c};
    m.y3 *= 1.0 - 1e-11;  // C2 grows by ~1e-11 relative
    const PiModel pi = reduce_to_pi(m, c);
    CHECK(pi.clamped);
    CHECK(pi.c1 == 0.0);
    CHECK(pi.c2 == c);
  }
}

TEST_CASE("pi model reproduces the network moments") {
  std::mt19937_64 rng(22);
  ceff::testing::RandomNetConfig cfg;
  cfg.max_nodes = 10;
  for (int trial = 0; trial < 300; ++trial) {
    const RcNetwork net = ceff::testing::random_net(rng, cfg);
    const auto m = admittance_moments(net);
    const PiModel pi = reduce_to_pi(m, total_capacitance(net));
    REQUIRE_FALSE(pi.degenerate);
    CHECK(pi.c1 >= 0.0);
    CHECK(pi.c2 >= 0.0);
    CHECK(pi.r_pi >= 0.0);
    CHECK(rel_diff(pi.c1 + pi.c2, total_capacitance(net)) < 1e-9);
    const auto back = pi_moments(pi);
    CHECK(rel_diff(back.y1, m.y1) < 1e-9);
    CHECK(rel_diff(back.y2, m.y2) < 1e-9);
    CHECK(rel_diff(back.y3, m.y3) < 1e-9);
  }
}

TEST_CASE("extra series resistance increases |y2|") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    RcNetwork net = ceff::testing::random_net(rng);
    const double before = std::abs(admittance_moments(net).y2);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(0, net.segments.size() - 1)(rng);
    net.segments[s].resistance *= 1.5;
    CHECK(std::abs(admittance_moments(net).y2) > before);
  }
}
