#include "ceff/transient.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ceff/error.hpp"

namespace ceff {

namespace {

/// Grounded-capacitor RC tree with zero-ohm segments merged. Node 0 is the
/// driver output; every node's parent has a smaller index.
struct TreeCircuit {
  std::vector<int> parent;      // -1 at the root
  std::vector<double> g_up;     // conductance to parent
  std::vector<double> cap;
  std::vector<std::size_t> of_original;  // original node index -> circuit node
  double g_drive = 0.0;

  std::size_t size() const { return cap.size(); }

  static TreeCircuit from_network(const RcNetwork& net) {
    const Topology topo = build_topology(net);
    TreeCircuit c;
    c.g_drive = 1.0 / net.driver.drive_resistance;
    c.of_original.assign(net.nodes.size(), 0);
    for (const std::size_t v : topo.preorder) {
      if (topo.parent[v] < 0) {
        c.of_original[v] = c.add(-1, 0.0);
      } else {
        const auto p = static_cast<std::size_t>(topo.parent[v]);
        const double r = net.segments[static_cast<std::size_t>(topo.parent_segment[v])].resistance;
        c.of_original[v] = r > 0.0 ? c.add(static_cast<int>(c.of_original[p]), 1.0 / r) : c.of_original[p];
      }
      c.cap[c.of_original[v]] += topo.ground_cap[v];
    }
    return c;
  }

  static TreeCircuit single_cap(double drive_resistance, double capacitance) {
    TreeCircuit c;
    c.g_drive = 1.0 / drive_resistance;
    c.add(-1, 0.0);
    c.cap[0] = capacitance;
    c.of_original = {0};
    return c;
  }

 private:
  std::size_t add(int p, double g) {
    parent.push_back(p);
    g_up.push_back(g);
    cap.push_back(0.0);
    return cap.size() - 1;
  }
};

/// Factored (C/h + theta*G) for one step size and integration rule.
class TreeSolver {
 public:
  TreeSolver(const TreeCircuit& c, double h, double theta) : c_(c), h_(h), theta_(theta) {
    const std::size_t n = c.size();
    diag_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) diag_[i] = c.cap[i] / h;
    diag_[0] += theta * c.g_drive;
    for (std::size_t i = 1; i < n; ++i) {
      diag_[i] += theta * c.g_up[i];
      diag_[static_cast<std::size_t>(c.parent[i])] += theta * c.g_up[i];
    }
    mult_.assign(n, 0.0);
    for (std::size_t i = n; i-- > 1;) {
      const double off = -theta * c.g_up[i];
      mult_[i] = off / diag_[i];
      diag_[static_cast<std::size_t>(c.parent[i])] -= off * mult_[i];
    }
  }

  double step() const { return h_; }
  double theta() const { return theta_; }

  /// Solves in place.
  void solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    for (std::size_t i = n; i-- > 1;) rhs[static_cast<std::size_t>(c_.parent[i])] -= mult_[i] * rhs[i];
    rhs[0] /= diag_[0];
    for (std::size_t i = 1; i < n; ++i) {
      const double off = -theta_ * c_.g_up[i];
      rhs[i] = (rhs[i] - off * rhs[static_cast<std::size_t>(c_.parent[i])]) / diag_[i];
    }
  }

 private:
  const TreeCircuit& c_;
  double h_;
  double theta_;
  std::vector<double> diag_;
  std::vector<double> mult_;
};

/// out = G*v (internal branches only) + g_drive*v_root at the root.
void apply_conductance(const TreeCircuit& c, const std::vector<double>& v, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  out[0] = c.g_drive * v[0];
  for (std::size_t i = 1; i < c.size(); ++i) {
    const auto p = static_cast<std::size_t>(c.parent[i]);
    const double i_branch = c.g_up[i] * (v[i] - v[p]);
    out[i] += i_branch;
    out[p] -= i_branch;
  }
}

struct RunResult {
  double t50 = -1.0;
  double delivered_charge = 0.0;
  double step = 0.0;
};

/// Fixed-step run on a grid that puts the end of the ramp on a step boundary.
/// The first step after each source breakpoint is taken as two backward-Euler
/// half steps to damp stiff modes; every other step is trapezoidal.
RunResult run(const TreeCircuit& c, const DriverParams& drv, double step, double horizon, bool stop_at_crossing,
              TransientResult* record) {
  const double slew = drv.input_slew;
  const long ramp_steps = std::max(1L, static_cast<long>(std::ceil(slew / step - 1e-9)));
  const double h = slew / static_cast<double>(ramp_steps);
  const long total_steps = std::max(ramp_steps, static_cast<long>(std::ceil(horizon / h - 1e-9)));
  const auto source = [&](double t) { return t >= slew ? drv.vdd : drv.vdd * t / slew; };

  const TreeSolver trap(c, h, 0.5);
  const TreeSolver euler(c, 0.5 * h, 1.0);

  const std::size_t n = c.size();
  std::vector<double> v(n, 0.0), rhs(n), gv(n);
  const double half = 0.5 * drv.vdd;

  RunResult out;
  out.step = h;
  if (record) {
    record->times.assign(1, 0.0);
    record->node_voltages.assign(1, std::vector<double>(c.of_original.size(), 0.0));
  }

  double t = 0.0;
  for (long k = 0; k < total_steps; ++k) {
    const double v_root_prev = v[0];
    const double t_next = static_cast<double>(k + 1) * h;
    if (k == 0 || k == ramp_steps) {
      for (int sub = 1; sub <= 2; ++sub) {
        const double ts = t + 0.5 * h * sub;
        for (std::size_t i = 0; i < n; ++i) rhs[i] = c.cap[i] / euler.step() * v[i];
        rhs[0] += c.g_drive * source(ts);
        euler.solve(rhs);
        v.swap(rhs);
        out.delivered_charge += euler.step() * c.g_drive * (source(ts) - v[0]);
      }
    } else {
      apply_conductance(c, v, gv);
      const double i_prev = c.g_drive * (source(t) - v[0]);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = c.cap[i] / h * v[i] - 0.5 * gv[i];
      rhs[0] += 0.5 * c.g_drive * (source(t) + source(t_next));
      trap.solve(rhs);
      v.swap(rhs);
      out.delivered_charge += 0.5 * h * (i_prev + c.g_drive * (source(t_next) - v[0]));
    }
    t = t_next;

    if (record) {
      record->times.push_back(t);
      std::vector<double> snap(c.of_original.size());
      for (std::size_t i = 0; i < snap.size(); ++i) snap[i] = v[c.of_original[i]];
      record->node_voltages.push_back(std::move(snap));
    }
    if (out.t50 < 0.0 && v[0] >= half) {
      const double frac = (half - v_root_prev) / (v[0] - v_root_prev);
      out.t50 = t - h + frac * h;
      if (stop_at_crossing) break;
    }
  }
  return out;
}

double max_elmore(const RcNetwork& net) {
  const auto d = elmore_delay(net);
  return *std::max_element(d.begin(), d.end());
}

double initial_step(const RcNetwork& net, const TransientOptions& options) {
  return std::max(max_elmore(net), net.driver.input_slew) / options.initial_steps;
}

}  // namespace

double default_horizon(const RcNetwork& net) { return std::max(20.0 * max_elmore(net), 5.0 * net.driver.input_slew); }

TransientResult simulate_fixed_step(const RcNetwork& net, double step, double horizon, bool record) {
  const TreeCircuit circuit = TreeCircuit::from_network(net);
  TransientResult result;
  const RunResult r = run(circuit, net.driver, step, horizon, false, record ? &result : nullptr);
  if (r.t50 < 0.0)
    throw Error(ErrorKind::NoCrossing, "net '" + net.name + "': driver output never reaches vdd/2");
  result.t50_root = r.t50;
  result.step = r.step;
  result.horizon = horizon;
  result.delivered_charge = r.delivered_charge;
  return result;
}

TransientResult simulate(const RcNetwork& net, const TransientOptions& options) {
  const double horizon = options.horizon > 0.0 ? options.horizon : default_horizon(net);
  const TreeCircuit circuit = TreeCircuit::from_network(net);

  double step = initial_step(net, options);
  RunResult prev = run(circuit, net.driver, step, horizon, true, nullptr);
  if (prev.t50 < 0.0)
    throw Error(ErrorKind::NoCrossing, "net '" + net.name + "': driver output never reaches vdd/2");
  for (int r = 0; r < options.max_refinements; ++r) {
    step = 0.5 * prev.step;
    const RunResult cur = run(circuit, net.driver, step, horizon, true, nullptr);
    const bool settled = std::abs(cur.t50 - prev.t50) < options.t50_tolerance * cur.t50;
    prev = cur;
    if (settled) break;
  }

  TransientResult result;
  const RunResult final_run =
      run(circuit, net.driver, prev.step, horizon, false, options.record_waveforms ? &result : nullptr);
  result.t50_root = final_run.t50;
  result.step = final_run.step;
  result.horizon = horizon;
  result.delivered_charge = final_run.delivered_charge;
  return result;
}

double simulate_cap_t50(const DriverParams& driver, double cap, double step, double horizon) {
  const TreeCircuit circuit = TreeCircuit::single_cap(driver.drive_resistance, cap);
  const RunResult r = run(circuit, driver, step, horizon, true, nullptr);
  if (r.t50 < 0.0) throw Error(ErrorKind::NoCrossing, "single-capacitor load never reaches vdd/2");
  return r.t50;
}

CeffResult oracle_ceff(const RcNetwork& net, const TransientOptions& options) {
  TransientOptions opts = options;
  opts.record_waveforms = false;
  const TransientResult full = simulate(net, opts);
  const double c_total = total_capacitance(net);
  const auto delay_gap = [&](double c) {
    return simulate_cap_t50(net.driver, c, full.step, full.horizon) - full.t50_root;
  };

  CeffResult result;
  result.method = CeffMethod::Oracle;
  result.converged = true;
  double lo = 0.0;
  double hi = c_total;
  if (delay_gap(hi) <= 0.0) {
    lo = hi;
  } else {
    // t50 grows strictly with the load, so the bracket keeps one sign change
    while (hi - lo > 1e-6 * c_total) {
      ++result.iterations;
      const double mid = 0.5 * (lo + hi);
      (delay_gap(mid) < 0.0 ? lo : hi) = mid;
    }
  }
  result.ceff = std::max(0.5 * (lo + hi), 1e-6 * c_total);
  result.t50 = full.t50_root;
  return result;
}

void write_spice_deck(const RcNetwork& net, std::ostream& out, double horizon) {
  if (horizon <= 0.0) horizon = default_horizon(net);
  const Topology topo = build_topology(net);
  const auto node_name = [&](std::size_t i) { return "n" + std::to_string(net.nodes[i].id); };
  const DriverParams& d = net.driver;

  out << "* effective capacitance deck for net " << net.name << "\n";
  out << "Vin src 0 PWL(0 0 " << d.input_slew << " " << d.vdd << ")\n";
  out << "Rdrv src " << node_name(topo.root) << " " << d.drive_resistance << "\n";
  for (std::size_t v = 0; v < net.nodes.size(); ++v) {
    if (topo.parent[v] < 0) continue;
    const WireSegment& w = net.segments[static_cast<std::size_t>(topo.parent_segment[v])];
    // SPICE rejects zero-ohm resistors
    out << "R" << w.id << " " << node_name(static_cast<std::size_t>(topo.parent[v])) << " " << node_name(v) << " "
        << std::max(w.resistance, 1e-6) << "\n";
  }
  for (std::size_t v = 0; v < net.nodes.size(); ++v)
    if (topo.ground_cap[v] > 0.0) out << "C" << net.nodes[v].id << " " << node_name(v) << " 0 " << topo.ground_cap[v] << "\n";
  out << ".tran " << horizon / 10000.0 << " " << horizon << "\n";
  out << ".measure tran t50 when v(" << node_name(topo.root) << ")=" << 0.5 * d.vdd << " rise=1\n";
  out << ".end\n";
}

}  // namespace ceff
