#include "ceff/dartu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>

namespace ceff {

namespace {

/// x - (1 - e^-x), evaluated without cancellation for small x.
double ramp_kernel(double x) {
  if (x < 1e-2) {
    const double x2 = x * x;
    return x2 * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x * (1.0 / 120.0 - x * (1.0 / 720.0)))));
  }
  return x + std::expm1(-x);
}

/// Modal decomposition of the two-node pi circuit driven through rd.
struct PiModes {
  double a11, a12;
  double lambda[2];  // fast, slow (both negative)
  double beta[2];    // source coupling into each mode
  double p10, p11;   // second row of the eigenvector matrix; first row is (a12, a12)

  PiModes(double rd, const PiModel& pi) {
    const double gd = 1.0 / rd;
    const double gp = 1.0 / pi.r_pi;
    a11 = -(gd + gp) / pi.c1;
    a12 = gp / pi.c1;
    const double a21 = gp / pi.c2;
    const double a22 = -gp / pi.c2;
    const double tr = a11 + a22;
    const double det = a11 * a22 - a12 * a21;
    const double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a21);
    lambda[0] = 0.5 * (tr - disc);
    lambda[1] = det / lambda[0];
    p10 = lambda[0] - a11;
    p11 = lambda[1] - a11;
    const double b1 = gd / pi.c1;
    const double det_p = a12 * (p11 - p10);
    beta[0] = b1 * p11 / det_p;
    beta[1] = -b1 * p10 / det_p;
  }

  /// Modal coordinates of a state vector (v1, v2).
  void to_modal(double v1, double v2, double z[2]) const {
    const double det_p = a12 * (p11 - p10);
    z[0] = (p11 * v1 - a12 * v2) / det_p;
    z[1] = (-p10 * v1 + a12 * v2) / det_p;
  }

  std::pair<double, double> from_modal(const double z[2]) const {
    return {a12 * (z[0] + z[1]), p10 * z[0] + p11 * z[1]};
  }
};

}  // namespace

std::string_view to_string(CeffMethod method) noexcept {
  switch (method) {
    case CeffMethod::Dartu: return "dartu";
    case CeffMethod::GnnCeff: return "gnn";
    case CeffMethod::Oracle: return "oracle";
    case CeffMethod::LumpedFallback: return "lumped_fallback";
  }
  return "dartu";
}

double ramp_response_cap(double rd, double c, double slew, double vdd, double t) {
  if (t <= 0.0) return 0.0;
  const double tau = rd * c;
  if (tau <= 0.0) return slew > 0.0 ? vdd * std::min(t, slew) / slew : vdd;
  if (slew <= 0.0) return -vdd * std::expm1(-t / tau);
  if (t <= slew) return vdd / slew * tau * ramp_kernel(t / tau);
  const double gap_at_slew = -vdd / slew * tau * std::expm1(-slew / tau);  // vdd - v(slew)
  return vdd - gap_at_slew * std::exp(-(t - slew) / tau);
}

double ramp_t50_cap(double rd, double c, double slew, double vdd) {
  const double tau = rd * c;
  if (tau <= 0.0) return 0.5 * slew;
  if (slew <= 0.0) return tau * std::numbers::ln2;
  const double gap_at_slew = -vdd / slew * tau * std::expm1(-slew / tau);
  if (gap_at_slew < 0.5 * vdd) {
    // crossing during the ramp: solve kernel(x) = slew / (2 tau), x = t / tau
    const double k = 0.5 * slew / tau;
    const auto f = [k](double x) { return std::make_pair(ramp_kernel(x) - k, -std::expm1(-x)); };
    const double guess = k < 1.0 ? std::sqrt(2.0 * k) : k + 1.0;
    std::uintmax_t iters = 100;
    const double x = boost::math::tools::newton_raphson_iterate(f, std::min(guess, k + 1.0), 0.0, k + 1.0,
                                                                std::numeric_limits<double>::digits - 4, iters);
    return std::min(x * tau, slew);
  }
  return slew + tau * std::log(gap_at_slew / (0.5 * vdd));
}

std::pair<double, double> ramp_response_pi(double rd, const PiModel& pi, double slew, double vdd, double t) {
  if (pi.degenerate || pi.r_pi <= 0.0 || pi.c2 <= 0.0) {
    const double v = ramp_response_cap(rd, pi.c1 + pi.c2, slew, vdd, t);
    return {v, v};
  }
  if (t <= 0.0) return {0.0, 0.0};
  if (pi.c1 <= 0.0) {
    // near end is algebraic: single pole through rd + rpi
    const double v2 = ramp_response_cap(rd + pi.r_pi, pi.c2, slew, vdd, t);
    const double e = slew > 0.0 ? vdd * std::min(t, slew) / slew : vdd;
    return {(e * pi.r_pi + v2 * rd) / (rd + pi.r_pi), v2};
  }

  const PiModes m(rd, pi);
  double z[2];
  if (slew <= 0.0) {
    for (int k = 0; k < 2; ++k) z[k] = m.beta[k] * vdd * std::expm1(m.lambda[k] * t) / m.lambda[k];
    return m.from_modal(z);
  }
  const double slope = vdd / slew;
  const double t_ramp = std::min(t, slew);
  for (int k = 0; k < 2; ++k)
    z[k] = m.beta[k] * slope * ramp_kernel(-m.lambda[k] * t_ramp) / (m.lambda[k] * m.lambda[k]);
  if (t <= slew) return m.from_modal(z);

  double z_ss[2];
  m.to_modal(vdd, vdd, z_ss);
  for (int k = 0; k < 2; ++k) z[k] = z_ss[k] + (z[k] - z_ss[k]) * std::exp(m.lambda[k] * (t - slew));
  return m.from_modal(z);
}

CeffResult compute_ceff_dartu(const PiModel& pi, const DriverParams& driver, const DartuOptions& options) {
  const double rd = driver.drive_resistance;
  const double slew = driver.input_slew;
  const double vdd = driver.vdd;
  const double c_total = pi.c1 + pi.c2;

  CeffResult result;
  result.method = CeffMethod::Dartu;
  if (pi.degenerate || pi.r_pi <= 0.0 || pi.c2 <= 0.0) {
    result.ceff = c_total;
    result.converged = true;
    result.iterations = 1;
    result.t50 = ramp_t50_cap(rd, c_total, slew, vdd);
    return result;
  }

  const auto charge = [&](double c, double t) { return c * ramp_response_cap(rd, c, slew, vdd, t); };
  const double floor = 1e-12 * c_total;

  double ceff = c_total;
  bool left_range = false;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    const double t50 = ramp_t50_cap(rd, ceff, slew, vdd);
    const auto [v1, v2] = ramp_response_pi(rd, pi, slew, vdd, t50);
    const double q_pi = pi.c1 * v1 + pi.c2 * v2;

    // charge drawn by a single capacitor by t50 grows with its value
    const double q_max = charge(c_total, t50);
    if (!(q_pi > 0.0) || q_pi > q_max * (1.0 + 1e-12)) {
      left_range = true;
      break;
    }
    double lo = 0.0;
    double hi = c_total;
    while (hi - lo > floor) {
      const double mid = 0.5 * (lo + hi);
      (charge(mid, t50) < q_pi ? lo : hi) = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (hi <= floor) {
      left_range = true;
      break;
    }
    const double step = std::abs(next - ceff);
    ceff = next;
    if (step <= options.relative_tolerance * c_total) {
      result.converged = true;
      break;
    }
  }

  if (left_range || !result.converged) {
    result.method = CeffMethod::LumpedFallback;
    result.failed = true;
    result.converged = false;
    ceff = c_total;
  }
  result.ceff = ceff;
  result.t50 = ramp_t50_cap(rd, ceff, slew, vdd);
  return result;
}

CeffResult compute_ceff_dartu(const RcNetwork& net, const DartuOptions& options) {
  return compute_ceff_dartu(reduce_network(net), net.driver, options);
}

}  // namespace ceff
