#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ceff {

// All electrical values are SI (ohms, farads, seconds, volts). Geometry is in nanometers.

enum class NodeKind { Driver, Fanout, Junction, CouplingVirtual };

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct RcNode {
  int id = 0;
  NodeKind kind = NodeKind::Junction;
  double pin_capacitance = 0.0;
  std::optional<Point> position;
  friend bool operator==(const RcNode&, const RcNode&) = default;
};

struct WireSegment {
  int id = 0;
  int from_node = 0;
  int to_node = 0;
  double resistance = 0.0;
  double capacitance = 0.0;
  std::optional<std::string> layer;
  friend bool operator==(const WireSegment&, const WireSegment&) = default;
};

/// Thevenin driver: a ramp source behind a fixed resistance.
struct DriverParams {
  double drive_resistance = 0.0;
  double input_slew = 0.0;  // V_L-to-V_H transition time
  double vdd = 1.0;
  double v_low_frac = 0.2;
  double v_high_frac = 0.8;
  friend bool operator==(const DriverParams&, const DriverParams&) = default;
};

/// Grounded coupling capacitance attached to a wire segment.
struct CouplingCap {
  int segment = 0;
  double capacitance = 0.0;
  friend bool operator==(const CouplingCap&, const CouplingCap&) = default;
};

struct RcNetwork {
  std::string name;
  std::vector<RcNode> nodes;
  std::vector<WireSegment> segments;
  DriverParams driver;
  std::vector<CouplingCap> coupling;
  friend bool operator==(const RcNetwork&, const RcNetwork&) = default;
};

/// Rooted view of a network's segment tree. Indices are positions in
/// `RcNetwork::nodes` / `RcNetwork::segments`, not ids.
struct Topology {
  std::size_t root = 0;
  std::vector<int> parent;          // -1 for the root
  std::vector<int> parent_segment;  // segment index joining node to parent, -1 for the root
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::size_t> preorder;  // root first; every parent precedes its children
  std::vector<double> ground_cap;     // node_ground_cap per node index
};

struct NodeDerived {
  double upstream_resistance = 0.0;
  double downstream_capacitance = 0.0;
  int hops_from_driver = 0;
  double node_ground_cap = 0.0;
};

/// Checks every structural and electrical invariant; throws ceff::Error.
void validate(const RcNetwork& net);

/// Builds the rooted tree. Assumes `net` is valid.
Topology build_topology(const RcNetwork& net);

/// Relabels nodes densely in depth-first preorder from the driver (children
/// visited by ascending original id), orients every segment parent->child,
/// gives segment i the child node i+1, and sorts coupling by segment.
RcNetwork canonicalize(const RcNetwork& net);

bool is_canonical(const RcNetwork& net);

/// Sum of wire, pin and coupling capacitance.
double total_capacitance(const RcNetwork& net);

/// Indexed by node position in `net.nodes`.
std::vector<NodeDerived> derive_node_quantities(const RcNetwork& net);

/// Elmore delay to every node, including the drive resistance at the root.
std::vector<double> elmore_delay(const RcNetwork& net);

int fanout_count(const RcNetwork& net);

}  // namespace ceff
