// Acceptance suite: one PASS/FAIL line per criterion.
//
//   ceff_acceptance [--only NAME] [--cli PATH_TO_CEFFGNN]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "ceff/dartu.hpp"
#include "ceff/gat.hpp"
#include "ceff/gnn_graph.hpp"
#include "ceff/net_io.hpp"
#include "ceff/netgen.hpp"
#include "ceff/pi_model.hpp"
#include "ceff/transient.hpp"
#include "ceff/weights.hpp"
#include "support/golden.hpp"
#include "support/random_nets.hpp"

using namespace ceff;
using namespace ceff::testing;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double limit_s;  // wall-clock budget, 0 for none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo * std::pow(hi / lo, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
}

RcNetwork far_end_cap(double rd, double r, double c) {
  RcNetwork net;
  net.name = "far";
  net.driver = {rd, 10e-12, 0.7, 0.2, 0.8};
  net.nodes = {{0, NodeKind::Driver, 0.0, {}}, {1, NodeKind::Fanout, c, {}}};
  net.segments = {{0, 0, 1, r, 0.0, {}}};
  return net;
}

RcNetwork pi_circuit(double rd, double slew, double c1, double c2, double rpi) {
  RcNetwork net;
  net.name = "pi";
  net.driver = {rd, slew, 1.0, 0.2, 0.8};
  net.nodes = {{0, NodeKind::Driver, 0.0, {}},
               {1, NodeKind::Junction, 0.0, {}},
               {2, NodeKind::Fanout, c1, {}},
               {3, NodeKind::Fanout, c2, {}}};
  net.segments = {{0, 0, 1, 0.0, 0.0, {}}, {1, 1, 2, 0.0, 0.0, {}}, {2, 1, 3, rpi, 0.0, {}}};
  return net;
}

/// Two-node ramp response by modal decomposition of x' = A x + b u(t).
class PiClosedForm {
 public:
  PiClosedForm(double rd, double slew, double vdd, double c1, double c2, double rpi) : slew_(slew), vdd_(vdd) {
    a_ << -(1.0 / rd + 1.0 / rpi) / c1, 1.0 / (rpi * c1), 1.0 / (rpi * c2), -1.0 / (rpi * c2);
    b_ << 1.0 / (rd * c1), 0.0;
    const Eigen::EigenSolver<Eigen::Matrix2d> es(a_);
    v_ = es.eigenvectors().real();
    lambda_ = es.eigenvalues().real();
    v_inv_ = v_.inverse();
    const double k = vdd / slew;
    p_ = -a_.inverse() * b_ * k;
    q_ = a_.inverse() * p_;
    x_end_ = ramp(slew);
  }

  Eigen::Vector2d operator()(double t) const {
    if (t <= slew_) return ramp(t);
    const Eigen::Vector2d inf(vdd_, vdd_);
    return inf + expm(t - slew_) * (x_end_ - inf);
  }

 private:
  Eigen::Matrix2d expm(double t) const {
    return v_ * Eigen::Vector2d(std::exp(lambda_[0] * t), std::exp(lambda_[1] * t)).asDiagonal() * v_inv_;
  }
  Eigen::Vector2d ramp(double t) const { return p_ * t + q_ - expm(t) * q_; }

  double slew_, vdd_;
  Eigen::Matrix2d a_, v_, v_inv_;
  Eigen::Vector2d b_, lambda_, p_, q_, x_end_;
};

Outcome pi_exactness() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const double r = log_uniform(rng, 10.0, 1e5), c = log_uniform(rng, 0.1e-15, 100e-15);
    const PiModel pi = reduce_network(far_end_cap(log_uniform(rng, 100.0, 5e3), r, c));
    const double err = std::max({std::abs(pi.c1) / c, rel_diff(pi.c2, c), rel_diff(pi.r_pi, r)});
    worst = std::max(worst, err);
    bad += pi.degenerate || err > 1e-9;
  }
  RandomNetConfig lumped;
  lumped.r_lo = lumped.r_hi = 0.0;
  lumped.coupling_probability = 0.3;
  int lumped_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const json doc = random_net_document(rng, lumped);
    const PiModel pi = reduce_network(network_from_json(doc));
    lumped_bad += !(pi.degenerate && rel_diff(pi.c1, brute_total_cap(doc)) <= 1e-9 && pi.c2 == 0.0 && pi.r_pi == 0.0);
  }
  return {bad == 0 && lumped_bad == 0,
          fmt("far-end worst rel %.2e (%d bad); lumped %d/100 not degenerate (Ctotal,0,0)", worst, bad, lumped_bad)};
}

Outcome moment_oracle() {
  std::mt19937_64 rng(102);
  RandomNetConfig cfg;
  cfg.max_nodes = 12;
  cfg.coupling_probability = 0.3;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const RcNetwork net = random_net(rng, cfg);
    const AdmittanceMoments got = admittance_moments(net);
    const AdmittanceMoments want = mna_moments(net);
    worst = std::max({worst, rel_diff(got.y1, want.y1), rel_diff(got.y2, want.y2), rel_diff(got.y3, want.y3)});
  }
  return {worst <= 1e-6, fmt("500 trees, worst relative moment error %.2e", worst)};
}

Outcome simulator_fidelity() {
  std::mt19937_64 rng(103);
  double worst_t50 = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double rd = log_uniform(rng, 100.0, 5e3), c = log_uniform(rng, 0.5e-15, 50e-15);
    const double tau = rd * c;
    RcNetwork net = far_end_cap(rd, 0.0, c);
    // t50 shifts by about slew/2, well inside the tolerance
    net.driver.input_slew = 1e-4 * tau;
    worst_t50 = std::max(worst_t50, rel_diff(simulate(net).t50_root, tau * std::numbers::ln2));
  }

  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rel = 0.0, worst_abs = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double c1 = 0.2e-15 + 5e-15 * u(rng), c2 = 0.5e-15 + 20e-15 * u(rng), rpi = 100 + 5e3 * u(rng);
    const double rd = 200 + 3e3 * u(rng), slew = 2e-12 + 100e-12 * u(rng);
    const RcNetwork net = pi_circuit(rd, slew, c1, c2, rpi);
    const PiClosedForm exact(rd, slew, net.driver.vdd, c1, c2, rpi);
    // fixed step resolving the fast pole, the ramp and the lumped time constant
    const double fast = rd * rpi / (rd + rpi) * c1;
    const double step = std::min({slew, fast, rd * (c1 + c2)}) / 100.0;
    const TransientResult sim = simulate_fixed_step(net, step, default_horizon(net));
    for (std::size_t k = 1; k < sim.times.size(); ++k) {
      const Eigen::Vector2d x = exact(sim.times[k]);
      const double got[2] = {sim.node_voltages[k][2], sim.node_voltages[k][3]};
      for (int n = 0; n < 2; ++n) {
        const double err = std::abs(got[n] - x[n]);
        worst_abs = std::max(worst_abs, err / net.driver.vdd);
        if (x[n] >= 0.05 * net.driver.vdd) worst_rel = std::max(worst_rel, err / x[n]);
      }
    }
  }
  return {worst_t50 <= 1e-3 && worst_rel <= 1e-3 && worst_abs <= 1e-3,
          fmt("one-pole t50 worst %.2e; pi voltages worst rel %.2e (v >= 5%% vdd), worst |dv|/vdd %.2e", worst_t50,
              worst_rel, worst_abs)};
}

Outcome oracle_dartu() {
  // corpus agreement
  GenSpec spec;
  spec.seed = 104;
  const TechProfile tech = default_tech_profile();
  std::vector<double> gaps;
  int corpus_failed = 0;
  for (int i = 0; i < 1000; ++i) {
    const RcNetwork net = generate_net(spec, tech, 3 + i % 28, i / 28);
    const CeffResult d = compute_ceff_dartu(net);
    if (d.failed) {
      ++corpus_failed;
      continue;
    }
    gaps.push_back(std::abs(d.ceff - oracle_ceff(net).ceff) / total_capacitance(net));
  }
  std::sort(gaps.begin(), gaps.end());
  const double median = gaps.empty() ? INFINITY : gaps[gaps.size() / 2];

  // shielding sweep
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int dartu_rises = 0, oracle_rises = 0;
  for (int i = 0; i < 20; ++i) {
    const double c1 = 0.5e-15 + 5e-15 * u(rng), c2 = 1e-15 + 20e-15 * u(rng), rpi0 = 200 + 3e3 * u(rng);
    const double rd = 200 + 2e3 * u(rng), slew = 5e-12 + 50e-12 * u(rng);
    double prev_d = INFINITY, prev_o = INFINITY;
    for (int k = -8; k <= 8; ++k) {
      const double rpi = rpi0 * std::pow(10.0, k / 4.0);
      const RcNetwork net = pi_circuit(rd, slew, c1, c2, rpi);
      const CeffResult d = compute_ceff_dartu(PiModel{c1, c2, rpi, false, false}, net.driver);
      const double o = oracle_ceff(net).ceff;
      if (!d.failed) {
        dartu_rises += d.ceff > prev_d * (1 + 1e-9);
        prev_d = d.ceff;
      }
      // oracle resolution is its t50 tolerance
      oracle_rises += o > prev_o + 1e-4 * (c1 + c2);
      prev_o = std::min(prev_o, o);
    }
  }

  // high-shielding stress family: tiny near-end cap, rpi*c2 far above the slew
  int stress_failed = 0;
  const int stress = 2000;
  for (int i = 0; i < stress; ++i) {
    const double ct = log_uniform(rng, 1e-15, 50e-15), slew = log_uniform(rng, 1e-13, 1e-10);
    const double c1 = ct * log_uniform(rng, 1e-6, 0.05), c2 = ct - c1;
    const double rpi = log_uniform(rng, 1e2, 1e6) * slew / c2;
    const double rd = log_uniform(rng, 1e-2, 1e2) * slew / ct;
    stress_failed += compute_ceff_dartu(PiModel{c1, c2, rpi, false, false}, DriverParams{rd, slew, 0.7, 0.2, 0.8}).failed;
  }

  return {median < 0.05 && dartu_rises == 0 && oracle_rises == 0 && stress_failed >= 1,
          fmt("median |dCeff|/Ctotal %.4f over %zu non-failed (%d failed); sweep rises dartu %d oracle %d; "
              "stress failures %d/%d",
              median, gaps.size(), corpus_failed, dartu_rises, oracle_rises, stress_failed, stress)};
}

Outcome graph_construction() {
  GenSpec spec;
  spec.seed = 106;
  TechProfile tech = default_tech_profile();
  tech.coupling_probability = 0.3;
  const double eps = std::numeric_limits<double>::epsilon();
  int bad_pre = 0, bad_post = 0, bad_cap = 0;
  for (int i = 0; i < 10000; ++i) {
    const RcNetwork net = generate_net(spec, tech, 3 + i % 8, i / 8);
    const GnnGraph g = to_gnn_graph(net);
    const int n = static_cast<int>(net.nodes.size());
    int fanouts = 0;
    for (const auto& node : net.nodes) fanouts += node.kind == NodeKind::Fanout;
    const int expect_rows = 1 + fanouts + static_cast<int>(net.coupling.size()) + static_cast<int>(net.segments.size());
    bad_pre += g.meta.pre_trim_nodes != 2 * n - 1;
    bad_post += static_cast<int>(g.rows()) != expect_rows;

    const double brute = brute_total_cap(network_to_json(net));
    double cols = 0.0;
    for (std::size_t r = 0; r < g.rows(); ++r) cols += g.at(r, kWireCap) + g.at(r, kPinCap);
    const double ulps = static_cast<double>(g.rows()) * eps * brute;
    bad_cap += std::abs(cols - brute) > ulps || std::abs(g.meta.c_total - brute) > ulps;
  }
  return {bad_pre == 0 && bad_post == 0 && bad_cap == 0,
          fmt("10000 nets: pre-trim violations %d, post-trim violations %d, capacitance violations %d", bad_pre,
              bad_post, bad_cap)};
}

Outcome inference_parity() {
  const GatModel model(load_weights(golden_path("golden.bundle")));
  const GnnGraph golden = read_graphs(golden_path("golden_graph.jsonl")).at(0);
  const GatTrace t = model.trace(golden);
  const json ref = golden_reference();
  double layer = max_abs_diff(t.input, ref["input"]);
  for (std::size_t l = 0; l < t.conv.size(); ++l) layer = std::max(layer, max_abs_diff(t.conv[l], ref["conv"][l]));
  layer = std::max(layer, max_abs_diff(t.pooled, ref["pooled"]));
  for (std::size_t m = 0; m < t.mlp.size(); ++m) layer = std::max(layer, max_abs_diff(t.mlp[m], ref["mlp"][m]));
  layer = std::max(layer, std::abs(t.ratio - ref["ratio"].get<double>()));
  const bool shape_ok = t.conv.size() == ref["conv"].size() && t.mlp.size() == ref["mlp"].size();

  GenSpec spec;
  spec.seed = 107;
  const TechProfile tech = default_tech_profile();
  std::vector<GnnGraph> graphs;
  for (int i = 0; i < 1000; ++i) graphs.push_back(to_gnn_graph(generate_net(spec, tech, 3 + i % 10, i)));
  PredictOptions big;
  big.batch_graphs = 1000;
  const auto batch = model.predict(graphs, big);
  double batch_gap = 0.0;
  for (std::size_t i = 0; i < graphs.size(); ++i)
    batch_gap = std::max(batch_gap, std::abs(model.predict(std::span(&graphs[i], 1))[0].ratio - batch[i].ratio));

  std::mt19937 rng(108);
  double perm_gap = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const GnnGraph p = permuted(graphs[i], rng);
    perm_gap = std::max(perm_gap, std::abs(model.predict(std::span(&p, 1))[0].ratio - batch[i].ratio));
  }
  return {shape_ok && layer <= 1e-5 && batch_gap <= 1e-6 && perm_gap <= 1e-9,
          fmt("golden layer-by-layer max %.2e; batch-of-1 vs batch-of-1000 max %.2e; permutation max %.2e", layer,
              batch_gap, perm_gap)};
}

Outcome throughput(const std::string& cli) {
  if (cli.empty()) return {false, "no ceffgnn executable given (--cli)"};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / fmt("ceff_acceptance_%d", static_cast<int>(::getpid()));
  fs::create_directories(dir);
  const std::string corpus = (dir / "corpus.jsonl").string(), report = (dir / "bench.json").string();
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  const std::string gen = "\"" + cli + "\" gen --degrees 3:6 --per-degree 2500 --out \"" + corpus + "\" > /dev/null";
  const std::string bench = "\"" + cli + "\" --workers " + std::to_string(workers) + " bench --corpus \"" + corpus +
                            "\" --weights \"" + golden_path("golden.bundle") + "\" --out \"" + report + "\" > /dev/null";
  if (std::system(gen.c_str()) != 0 || std::system(bench.c_str()) != 0) {
    fs::remove_all(dir);
    return {false, "ceffgnn gen/bench exited with an error"};
  }
  std::ifstream in(report);
  const json r = json::parse(in);
  fs::remove_all(dir);
  const double gnn = r["nets_per_s"]["gnn_batch"].get<double>();
  const double dartu = r["nets_per_s"]["dartu_serial"].get<double>();
  const auto nets = r["nets"].get<std::size_t>();
  return {nets >= 10000 && gnn > dartu,
          fmt("%zu graphs: gnn-batch %.0f nets/s (workers %u), dartu-serial %.0f nets/s, ratio %.3f", nets, gnn,
              workers, dartu, gnn / dartu)};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only, cli;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = argv[i + 1];
    else if (flag == "--cli") cli = argv[i + 1];
  }

  const std::vector<Criterion> criteria = {
      {"pi-reduction-exactness", 1.0, pi_exactness},
      {"moment-oracle", 30.0, moment_oracle},
      {"simulator-fidelity", 60.0, simulator_fidelity},
      {"oracle-dartu-consistency", 600.0, oracle_dartu},
      {"graph-construction", 120.0, graph_construction},
      {"inference-parity", 0.0, inference_parity},
      {"throughput", 0.0, [&] { return throughput(cli); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_s <= 0.0 || s < c.limit_s;
    if (!in_time) o.detail += fmt("; over the %.0f s budget", c.limit_s);
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %s (%.2f s): %s\n", pass ? "PASS" : "FAIL", c.name, s, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
