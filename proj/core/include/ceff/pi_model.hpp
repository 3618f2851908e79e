#pragma once

#include "ceff/rc_network.hpp"

namespace ceff {

/// Taylor coefficients of the driving-point admittance,
/// Y(s) = y1*s + y2*s^2 + y3*s^3 + ...
struct AdmittanceMoments {
  double y1 = 0.0;  // F
  double y2 = 0.0;  // F*s, non-positive for RC trees
  double y3 = 0.0;  // F*s^2, non-negative for RC trees
};

/// C1 -- Rpi -- C2 reduced load seen by the driver.
struct PiModel {
  double c1 = 0.0;
  double c2 = 0.0;
  double r_pi = 0.0;
  bool degenerate = false;
  bool clamped = false;

  double total() const { return c1 + c2; }
};

/// Time scale of the degeneracy test (1 ps) and its relative threshold.
inline constexpr double kMomentTimeRef = 1e-12;
inline constexpr double kMomentEpsilon = 1e-12;
/// Largest negative C1 (relative to y1) treated as rounding noise.
inline constexpr double kClampTolerance = 1e-9;

/// Bottom-up moment recursion over the segment tree (driver resistance excluded).
AdmittanceMoments admittance_moments(const RcNetwork& net);

/// Three-moment match. Throws NonPhysicalMoments for moments no RC tree can produce.
PiModel reduce_to_pi(const AdmittanceMoments& m, double c_total);

/// Convenience: admittance_moments followed by reduce_to_pi.
PiModel reduce_network(const RcNetwork& net);

/// Moments of the pi-model itself; the inverse of reduce_to_pi for non-degenerate input.
AdmittanceMoments pi_moments(const PiModel& pi);

}  // namespace ceff
