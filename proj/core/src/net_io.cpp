#include "ceff/net_io.hpp"

#include <fstream>
#include <initializer_list>
#include <istream>

#include "ceff/error.hpp"

namespace ceff {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorKind::MalformedDocument, what); }

void require_object(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) malformed(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || key == a;
    if (!known) malformed("unknown field '" + key + "' in " + std::string(where));
  }
}

double number(const json& j, const char* key, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) malformed("missing '" + std::string(key) + "' in " + std::string(where));
  if (!it->is_number()) malformed("'" + std::string(key) + "' in " + std::string(where) + " must be a number");
  return it->get<double>();
}

double number_or(const json& j, const char* key, double fallback, std::string_view where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

int integer(const json& j, const char* key, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end()) malformed("missing '" + std::string(key) + "' in " + std::string(where));
  if (!it->is_number_integer()) malformed("'" + std::string(key) + "' in " + std::string(where) + " must be an integer");
  return it->get<int>();
}

NodeKind parse_kind(const json& j) {
  if (!j.is_string()) malformed("node kind must be a string");
  const auto s = j.get<std::string>();
  if (s == "driver") return NodeKind::Driver;
  if (s == "fanout") return NodeKind::Fanout;
  if (s == "junction") return NodeKind::Junction;
  if (s == "coupling_virtual") return NodeKind::CouplingVirtual;
  malformed("unknown node kind '" + s + "'");
}

const json& array_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) malformed(std::string("missing '") + key + "'");
  if (!it->is_array()) malformed(std::string("'") + key + "' must be an array");
  return *it;
}

}  // namespace

std::string_view to_string(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Driver: return "driver";
    case NodeKind::Fanout: return "fanout";
    case NodeKind::Junction: return "junction";
    case NodeKind::CouplingVirtual: return "coupling_virtual";
  }
  return "junction";
}

RcNetwork network_from_json(const json& doc) {
  require_object(doc, "net", {"name", "driver", "nodes", "segments", "coupling"});
  RcNetwork net;
  auto name = doc.find("name");
  if (name == doc.end() || !name->is_string()) malformed("missing string 'name'");
  net.name = name->get<std::string>();

  auto drv = doc.find("driver");
  if (drv == doc.end()) malformed("missing 'driver'");
  require_object(*drv, "driver", {"rd_ohm", "slew_s", "vdd_v", "vlo", "vhi"});
  net.driver.drive_resistance = number(*drv, "rd_ohm", "driver");
  net.driver.input_slew = number(*drv, "slew_s", "driver");
  net.driver.vdd = number(*drv, "vdd_v", "driver");
  net.driver.v_low_frac = number_or(*drv, "vlo", 0.2, "driver");
  net.driver.v_high_frac = number_or(*drv, "vhi", 0.8, "driver");

  for (const json& jn : array_field(doc, "nodes")) {
    require_object(jn, "node", {"id", "kind", "cp_f", "x_nm", "y_nm"});
    RcNode n;
    n.id = integer(jn, "id", "node");
    auto kind = jn.find("kind");
    if (kind == jn.end()) malformed("missing 'kind' in node");
    n.kind = parse_kind(*kind);
    n.pin_capacitance = number_or(jn, "cp_f", 0.0, "node");
    const bool has_x = jn.contains("x_nm");
    if (has_x != jn.contains("y_nm")) malformed("node " + std::to_string(n.id) + " has only one coordinate");
    if (has_x) n.position = Point{number(jn, "x_nm", "node"), number(jn, "y_nm", "node")};
    net.nodes.push_back(std::move(n));
  }

  for (const json& js : array_field(doc, "segments")) {
    require_object(js, "segment", {"id", "from", "to", "r_ohm", "c_f", "layer"});
    WireSegment w;
    w.id = integer(js, "id", "segment");
    w.from_node = integer(js, "from", "segment");
    w.to_node = integer(js, "to", "segment");
    w.resistance = number(js, "r_ohm", "segment");
    w.capacitance = number(js, "c_f", "segment");
    if (auto layer = js.find("layer"); layer != js.end()) {
      if (!layer->is_string()) malformed("segment layer must be a string");
      w.layer = layer->get<std::string>();
    }
    net.segments.push_back(std::move(w));
  }

  if (doc.contains("coupling")) {
    for (const json& jc : array_field(doc, "coupling")) {
      require_object(jc, "coupling", {"seg", "c_f"});
      net.coupling.push_back({integer(jc, "seg", "coupling"), number(jc, "c_f", "coupling")});
    }
  }

  validate(net);
  return canonicalize(net);
}

RcNetwork parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return network_from_json(doc);
}

json network_to_json(const RcNetwork& net) {
  json doc;
  doc["name"] = net.name;
  doc["driver"] = {{"rd_ohm", net.driver.drive_resistance},
                   {"slew_s", net.driver.input_slew},
                   {"vdd_v", net.driver.vdd},
                   {"vlo", net.driver.v_low_frac},
                   {"vhi", net.driver.v_high_frac}};
  json nodes = json::array();
  for (const RcNode& n : net.nodes) {
    json jn = {{"id", n.id}, {"kind", to_string(n.kind)}, {"cp_f", n.pin_capacitance}};
    if (n.position) {
      jn["x_nm"] = n.position->x;
      jn["y_nm"] = n.position->y;
    }
    nodes.push_back(std::move(jn));
  }
  doc["nodes"] = std::move(nodes);
  json segments = json::array();
  for (const WireSegment& w : net.segments) {
    json js = {{"id", w.id}, {"from", w.from_node}, {"to", w.to_node}, {"r_ohm", w.resistance}, {"c_f", w.capacitance}};
    if (w.layer) js["layer"] = *w.layer;
    segments.push_back(std::move(js));
  }
  doc["segments"] = std::move(segments);
  json coupling = json::array();
  for (const CouplingCap& cc : net.coupling) coupling.push_back({{"seg", cc.segment}, {"c_f", cc.capacitance}});
  doc["coupling"] = std::move(coupling);
  return doc;
}

std::string serialize_network(const RcNetwork& net) { return network_to_json(net).dump(); }

void for_each_network(std::istream& in, const std::function<void(RcNetwork&&)>& sink) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RcNetwork net;
    try {
      net = parse_network(line);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
    }
    sink(std::move(net));
  }
}

std::vector<RcNetwork> read_network_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<RcNetwork> nets;
  for_each_network(in, [&](RcNetwork&& n) { nets.push_back(std::move(n)); });
  return nets;
}

}  // namespace ceff
