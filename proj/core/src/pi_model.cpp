#include "ceff/pi_model.hpp"

#include <cmath>
#include <sstream>

#include "ceff/error.hpp"

namespace ceff {

namespace {

AdmittanceMoments through_resistor(const AdmittanceMoments& m, double r) {
  // Y' = Y / (1 + r*Y), truncated after s^3.
  return {m.y1, m.y2 - r * m.y1 * m.y1, m.y3 - 2.0 * r * m.y1 * m.y2 + r * r * m.y1 * m.y1 * m.y1};
}

}  // namespace

AdmittanceMoments admittance_moments(const RcNetwork& net) {
  const Topology topo = build_topology(net);
  std::vector<AdmittanceMoments> at(net.nodes.size());
  for (auto it = topo.preorder.rbegin(); it != topo.preorder.rend(); ++it) {
    const std::size_t v = *it;
    at[v].y1 += topo.ground_cap[v];
    if (topo.parent[v] < 0) continue;
    const double r = net.segments[static_cast<std::size_t>(topo.parent_segment[v])].resistance;
    const AdmittanceMoments up = through_resistor(at[v], r);
    AdmittanceMoments& p = at[static_cast<std::size_t>(topo.parent[v])];
    p.y1 += up.y1;
    p.y2 += up.y2;
    p.y3 += up.y3;
  }
  return at[topo.root];
}

PiModel reduce_to_pi(const AdmittanceMoments& m, double c_total) {
  if (!(m.y1 > 0.0)) throw Error(ErrorKind::NonPhysicalMoments, "y1 must be positive");
  const double y2_floor = kMomentEpsilon * m.y1 * kMomentTimeRef;
  const double y3_floor = kMomentEpsilon * m.y1 * kMomentTimeRef * kMomentTimeRef;
  if (m.y2 > y2_floor || m.y3 < -y3_floor) {
    std::ostringstream os;
    os << "moments (" << m.y1 << ", " << m.y2 << ", " << m.y3 << ") violate y2 <= 0 <= y3";
    throw Error(ErrorKind::NonPhysicalMoments, os.str());
  }

  PiModel pi;
  if (m.y3 < y3_floor || std::abs(m.y2) < y2_floor) {
    pi.c1 = c_total;
    pi.degenerate = true;
    return pi;
  }

  pi.c2 = m.y2 * m.y2 / m.y3;
  pi.r_pi = -(m.y3 * m.y3) / (m.y2 * m.y2 * m.y2);
  pi.c1 = m.y1 - pi.c2;
  if (pi.c1 < 0.0) {
    if (-pi.c1 >= kClampTolerance * m.y1) {
      std::ostringstream os;
      os << "reduction gives C1 = " << pi.c1 << " F for y1 = " << m.y1 << " F";
      throw Error(ErrorKind::NonPhysicalMoments, os.str());
    }
    pi.c1 = 0.0;
    pi.c2 = m.y1;
    pi.clamped = true;
  }
  return pi;
}

PiModel reduce_network(const RcNetwork& net) { return reduce_to_pi(admittance_moments(net), total_capacitance(net)); }

AdmittanceMoments pi_moments(const PiModel& pi) {
  AdmittanceMoments far = through_resistor({pi.c2, 0.0, 0.0}, pi.r_pi);
  far.y1 += pi.c1;
  return far;
}

}  // namespace ceff
