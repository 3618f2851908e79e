#include "ceff/rc_network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "ceff/error.hpp"

namespace ceff {

namespace {

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

std::unordered_map<int, std::size_t> index_by_id(const RcNetwork& net) {
  std::unordered_map<int, std::size_t> index;
  index.reserve(net.nodes.size());
  for (std::size_t i = 0; i < net.nodes.size(); ++i) index.emplace(net.nodes[i].id, i);
  return index;
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedDocument: return "MalformedDocument";
    case ErrorKind::NonTreeTopology: return "NonTreeTopology";
    case ErrorKind::NoDriver: return "NoDriver";
    case ErrorKind::MultipleDrivers: return "MultipleDrivers";
    case ErrorKind::NegativeElement: return "NegativeElement";
    case ErrorKind::NonPhysicalMoments: return "NonPhysicalMoments";
    case ErrorKind::NoCrossing: return "NoCrossing";
    case ErrorKind::MissingLabel: return "MissingLabel";
    case ErrorKind::OutOfRangeLabel: return "OutOfRangeLabel";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::FeatureOrderMismatch: return "FeatureOrderMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

void validate(const RcNetwork& net) {
  const auto fail = [&](ErrorKind kind, const std::string& what) {
    throw Error(kind, "net '" + net.name + "': " + what);
  };

  const DriverParams& d = net.driver;
  if (!std::isfinite(d.drive_resistance) || d.drive_resistance < 0.0 || !std::isfinite(d.input_slew) ||
      d.input_slew < 0.0 || !std::isfinite(d.vdd) || d.vdd < 0.0)
    fail(ErrorKind::NegativeElement, "driver parameters must be finite and non-negative");
  if (d.drive_resistance == 0.0 || d.input_slew == 0.0 || d.vdd == 0.0)
    fail(ErrorKind::MalformedDocument, "drive resistance, slew and vdd must be positive");
  if (!(d.v_low_frac > 0.0 && d.v_low_frac < 0.5 && d.v_high_frac > 0.5 && d.v_high_frac < 1.0))
    fail(ErrorKind::MalformedDocument, "slew thresholds must satisfy 0 < vlo < 0.5 < vhi < 1");

  if (net.nodes.empty()) fail(ErrorKind::NoDriver, "no nodes");

  std::unordered_map<int, std::size_t> index;
  int drivers = 0;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const RcNode& n = net.nodes[i];
    if (!index.emplace(n.id, i).second) fail(ErrorKind::MalformedDocument, "duplicate node id " + std::to_string(n.id));
    if (n.kind == NodeKind::CouplingVirtual)
      fail(ErrorKind::MalformedDocument, "coupling capacitance belongs in the coupling list, not the node list");
    if (!finite_non_negative(n.pin_capacitance))
      fail(ErrorKind::NegativeElement, "node " + std::to_string(n.id) + " has invalid pin capacitance");
    if (n.kind == NodeKind::Junction && n.pin_capacitance != 0.0)
      fail(ErrorKind::MalformedDocument, "junction node " + std::to_string(n.id) + " carries pin capacitance");
    if (n.kind == NodeKind::Driver) ++drivers;
  }
  if (drivers == 0) fail(ErrorKind::NoDriver, "no driver node");
  if (drivers > 1) fail(ErrorKind::MultipleDrivers, std::to_string(drivers) + " driver nodes");

  std::unordered_map<int, std::size_t> seg_index;
  std::vector<int> degree(net.nodes.size(), 0);
  DisjointSet components(net.nodes.size());
  for (std::size_t s = 0; s < net.segments.size(); ++s) {
    const WireSegment& w = net.segments[s];
    if (!seg_index.emplace(w.id, s).second)
      fail(ErrorKind::MalformedDocument, "duplicate segment id " + std::to_string(w.id));
    auto from = index.find(w.from_node);
    auto to = index.find(w.to_node);
    if (from == index.end() || to == index.end())
      fail(ErrorKind::MalformedDocument, "segment " + std::to_string(w.id) + " references an unknown node");
    if (!finite_non_negative(w.resistance) || !finite_non_negative(w.capacitance))
      fail(ErrorKind::NegativeElement, "segment " + std::to_string(w.id) + " has invalid R or C");
    if (!components.unite(from->second, to->second))
      fail(ErrorKind::NonTreeTopology, "segment " + std::to_string(w.id) + " closes a loop");
    ++degree[from->second];
    ++degree[to->second];
  }
  if (net.segments.size() + 1 != net.nodes.size())
    fail(ErrorKind::NonTreeTopology, "network is disconnected");

  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    if (net.nodes[i].kind == NodeKind::Fanout && degree[i] != 1)
      fail(ErrorKind::MalformedDocument, "fanout node " + std::to_string(net.nodes[i].id) + " is not a leaf");

  for (const CouplingCap& cc : net.coupling) {
    if (!seg_index.contains(cc.segment))
      fail(ErrorKind::MalformedDocument, "coupling references unknown segment " + std::to_string(cc.segment));
    if (!finite_non_negative(cc.capacitance))
      fail(ErrorKind::NegativeElement, "coupling on segment " + std::to_string(cc.segment) + " is invalid");
  }

  if (!(total_capacitance(net) > 0.0)) fail(ErrorKind::MalformedDocument, "total capacitance is zero");
}

Topology build_topology(const RcNetwork& net) {
  const std::size_t n = net.nodes.size();
  const auto index = index_by_id(net);

  // adjacency: (neighbor index, segment index)
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);
  for (std::size_t s = 0; s < net.segments.size(); ++s) {
    const std::size_t a = index.at(net.segments[s].from_node);
    const std::size_t b = index.at(net.segments[s].to_node);
    adj[a].emplace_back(b, s);
    adj[b].emplace_back(a, s);
  }
  for (auto& nbrs : adj)
    std::sort(nbrs.begin(), nbrs.end(),
              [&](const auto& l, const auto& r) { return net.nodes[l.first].id < net.nodes[r.first].id; });

  Topology topo;
  topo.parent.assign(n, -1);
  topo.parent_segment.assign(n, -1);
  topo.children.assign(n, {});
  topo.preorder.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (net.nodes[i].kind == NodeKind::Driver) topo.root = i;

  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{topo.root};
  seen[topo.root] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    topo.preorder.push_back(u);
    for (const auto& [v, s] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      topo.parent[v] = static_cast<int>(u);
      topo.parent_segment[v] = static_cast<int>(s);
      topo.children[u].push_back(v);
    }
    // push in reverse so the smallest id is visited first
    for (auto it = topo.children[u].rbegin(); it != topo.children[u].rend(); ++it) stack.push_back(*it);
  }

  topo.ground_cap.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) topo.ground_cap[i] = net.nodes[i].pin_capacitance;
  std::unordered_map<int, std::size_t> seg_child;
  seg_child.reserve(net.segments.size());
  for (std::size_t v = 0; v < n; ++v) {
    if (topo.parent_segment[v] < 0) continue;
    const WireSegment& w = net.segments[static_cast<std::size_t>(topo.parent_segment[v])];
    topo.ground_cap[v] += 0.5 * w.capacitance;
    topo.ground_cap[static_cast<std::size_t>(topo.parent[v])] += 0.5 * w.capacitance;
    seg_child.emplace(w.id, v);
  }
  for (const CouplingCap& cc : net.coupling) topo.ground_cap[seg_child.at(cc.segment)] += cc.capacitance;
  return topo;
}

RcNetwork canonicalize(const RcNetwork& net) {
  const Topology topo = build_topology(net);
  const std::size_t n = net.nodes.size();

  std::vector<int> new_id(n);
  for (std::size_t k = 0; k < n; ++k) new_id[topo.preorder[k]] = static_cast<int>(k);

  RcNetwork out;
  out.name = net.name;
  out.driver = net.driver;
  out.nodes.reserve(n);
  out.segments.reserve(n > 0 ? n - 1 : 0);
  std::unordered_map<int, int> seg_id_map;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t old = topo.preorder[k];
    RcNode node = net.nodes[old];
    node.id = static_cast<int>(k);
    out.nodes.push_back(std::move(node));
    if (k == 0) continue;
    WireSegment w = net.segments[static_cast<std::size_t>(topo.parent_segment[old])];
    seg_id_map.emplace(w.id, static_cast<int>(k) - 1);
    w.id = static_cast<int>(k) - 1;
    w.from_node = new_id[static_cast<std::size_t>(topo.parent[old])];
    w.to_node = static_cast<int>(k);
    out.segments.push_back(std::move(w));
  }
  out.coupling.reserve(net.coupling.size());
  for (const CouplingCap& cc : net.coupling) out.coupling.push_back({seg_id_map.at(cc.segment), cc.capacitance});
  std::stable_sort(out.coupling.begin(), out.coupling.end(),
                   [](const CouplingCap& a, const CouplingCap& b) { return a.segment < b.segment; });
  return out;
}

bool is_canonical(const RcNetwork& net) { return canonicalize(net) == net; }

double total_capacitance(const RcNetwork& net) {
  double total = 0.0;
  for (const WireSegment& w : net.segments) total += w.capacitance;
  for (const RcNode& n : net.nodes) total += n.pin_capacitance;
  for (const CouplingCap& cc : net.coupling) total += cc.capacitance;
  return total;
}

std::vector<NodeDerived> derive_node_quantities(const RcNetwork& net) {
  const Topology topo = build_topology(net);
  std::vector<NodeDerived> out(net.nodes.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].node_ground_cap = topo.ground_cap[i];

  for (const std::size_t v : topo.preorder) {
    if (topo.parent[v] < 0) continue;
    const auto p = static_cast<std::size_t>(topo.parent[v]);
    const WireSegment& w = net.segments[static_cast<std::size_t>(topo.parent_segment[v])];
    out[v].upstream_resistance = out[p].upstream_resistance + w.resistance;
    out[v].hops_from_driver = out[p].hops_from_driver + 1;
  }
  for (auto it = topo.preorder.rbegin(); it != topo.preorder.rend(); ++it) {
    const std::size_t v = *it;
    out[v].downstream_capacitance += out[v].node_ground_cap;
    if (topo.parent[v] >= 0)
      out[static_cast<std::size_t>(topo.parent[v])].downstream_capacitance += out[v].downstream_capacitance;
  }
  return out;
}

std::vector<double> elmore_delay(const RcNetwork& net) {
  const Topology topo = build_topology(net);
  const std::vector<NodeDerived> derived = derive_node_quantities(net);
  std::vector<double> delay(net.nodes.size(), 0.0);
  for (const std::size_t v : topo.preorder) {
    if (topo.parent[v] < 0) {
      delay[v] = net.driver.drive_resistance * derived[v].downstream_capacitance;
      continue;
    }
    const WireSegment& w = net.segments[static_cast<std::size_t>(topo.parent_segment[v])];
    delay[v] = delay[static_cast<std::size_t>(topo.parent[v])] + w.resistance * derived[v].downstream_capacitance;
  }
  return delay;
}

int fanout_count(const RcNetwork& net) {
  return static_cast<int>(
      std::count_if(net.nodes.begin(), net.nodes.end(), [](const RcNode& n) { return n.kind == NodeKind::Fanout; }));
}

}  // namespace ceff
