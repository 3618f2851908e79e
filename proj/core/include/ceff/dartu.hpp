#pragma once

#include <string_view>
#include <utility>

#include "ceff/pi_model.hpp"
#include "ceff/rc_network.hpp"

namespace ceff {

enum class CeffMethod { Dartu, GnnCeff, Oracle, LumpedFallback };

std::string_view to_string(CeffMethod method) noexcept;

struct CeffResult {
  double ceff = 0.0;
  CeffMethod method = CeffMethod::Dartu;
  bool converged = false;
  bool failed = false;
  int iterations = 0;
  double t50 = 0.0;  // 50% crossing of the driver output under `ceff`
};

struct DartuOptions {
  double relative_tolerance = 1e-6;
  int max_iterations = 100;
};

/// Output of a ramp source (0 -> vdd over `slew`) driving `c` through `rd`.
/// A zero slew is treated as a step.
double ramp_response_cap(double rd, double c, double slew, double vdd, double t);

/// Time at which ramp_response_cap crosses vdd/2.
double ramp_t50_cap(double rd, double c, double slew, double vdd);

/// Near-end (v1) and far-end (v2) voltages of a pi load under the same source.
std::pair<double, double> ramp_response_pi(double rd, const PiModel& pi, double slew, double vdd, double t);

/// Iterative effective capacitance: match the charge drawn by the pi load and by
/// a single capacitor up to the capacitor's 50% crossing. Failure is reported,
/// never thrown; a failed run falls back to the lumped load c1 + c2.
CeffResult compute_ceff_dartu(const PiModel& pi, const DriverParams& driver, const DartuOptions& options = {});
CeffResult compute_ceff_dartu(const RcNetwork& net, const DartuOptions& options = {});

}  // namespace ceff
