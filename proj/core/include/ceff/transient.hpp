#pragma once

#include <iosfwd>
#include <vector>

#include "ceff/dartu.hpp"
#include "ceff/rc_network.hpp"

namespace ceff {

struct TransientOptions {
  /// Simulated interval; non-positive selects max(20 x max Elmore, 5 x slew).
  double horizon = 0.0;
  /// Step halving stops once the driver-output t50 moves less than this (relative).
  double t50_tolerance = 1e-4;
  /// Initial step count per max(Elmore, slew) interval before any halving.
  int initial_steps = 16;
  int max_refinements = 16;
  bool record_waveforms = true;
};

struct TransientResult {
  std::vector<double> times;
  /// node_voltages[k][i]: voltage of node index i (position in RcNetwork::nodes) at times[k].
  std::vector<std::vector<double>> node_voltages;
  double t50_root = 0.0;
  double step = 0.0;
  double horizon = 0.0;
  /// Charge delivered through the drive resistance over [0, horizon].
  double delivered_charge = 0.0;
};

double default_horizon(const RcNetwork& net);

/// Full-network transient response to the ramp source behind R_d.
/// Throws NoCrossing if the driver output never reaches vdd/2 within the horizon.
TransientResult simulate(const RcNetwork& net, const TransientOptions& options = {});

/// Same, with the step fixed (no refinement).
TransientResult simulate_fixed_step(const RcNetwork& net, double step, double horizon, bool record = true);

/// Simulated 50% crossing of a single capacitor behind the net's driver, on a fixed step.
double simulate_cap_t50(const DriverParams& driver, double cap, double step, double horizon);

/// Ceff whose single-capacitor delay matches the full network's simulated delay.
CeffResult oracle_ceff(const RcNetwork& net, const TransientOptions& options = {});

/// SPICE deck equivalent to the simulated circuit (export only).
void write_spice_deck(const RcNetwork& net, std::ostream& out, double horizon = 0.0);

}  // namespace ceff
