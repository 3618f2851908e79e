#include "ceff/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include "ceff/error.hpp"
#include "ceff/hash.hpp"
#include "ceff/net_io.hpp"
#include "ceff/parallel.hpp"
#include "ceff/version.hpp"

namespace ceff {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSplitStream = 1;

[[noreturn]] void bad_profile(const std::string& what) { throw Error(ErrorKind::MalformedDocument, what); }

void check_range(const Range& r, const char* what, bool positive) {
  if (!(std::isfinite(r.lo) && std::isfinite(r.hi)) || r.lo > r.hi || r.lo < 0.0 || (positive && r.lo <= 0.0))
    bad_profile(std::string("invalid range for ") + what);
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const char* key, Range fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array() || it->size() != 2) bad_profile(std::string("'") + key + "' must be [lo, hi]");
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

const char* group_name(LayerGroup g) {
  switch (g) {
    case LayerGroup::Lower: return "lower";
    case LayerGroup::Middle: return "middle";
    case LayerGroup::Upper: return "upper";
  }
  return "lower";
}

LayerGroup group_from(const std::string& s) {
  if (s == "lower") return LayerGroup::Lower;
  if (s == "middle") return LayerGroup::Middle;
  if (s == "upper") return LayerGroup::Upper;
  bad_profile("unknown layer group '" + s + "'");
}

const Layer& pick_layer(const TechProfile& tech, double length_nm, KeyedRng& rng) {
  const LayerGroup wanted = length_nm < tech.short_max_nm    ? LayerGroup::Lower
                            : length_nm < tech.medium_max_nm ? LayerGroup::Middle
                                                             : LayerGroup::Upper;
  // nearest non-empty group if the profile leaves one out
  for (int distance = 0; distance < 3; ++distance) {
    std::vector<const Layer*> pool;
    for (const Layer& l : tech.layers)
      if (std::abs(static_cast<int>(l.group) - static_cast<int>(wanted)) == distance) pool.push_back(&l);
    if (!pool.empty()) return *pool[rng.below(pool.size())];
  }
  bad_profile("technology profile has no layers");
}

}  // namespace

TechProfile default_tech_profile() {
  TechProfile t;
  t.name = "illustrative-7nm";
  t.layers = {
      {"M2", LayerGroup::Lower, 0.050, 0.20e-18},  {"M3", LayerGroup::Lower, 0.045, 0.20e-18},
      {"M4", LayerGroup::Middle, 0.025, 0.18e-18}, {"M5", LayerGroup::Middle, 0.022, 0.18e-18},
      {"M6", LayerGroup::Upper, 0.010, 0.16e-18},  {"M7", LayerGroup::Upper, 0.008, 0.16e-18},
  };
  t.via_resistance = 20.0;
  t.slew = {5e-12, 150e-12};
  t.rd = {50.0, 3000.0};
  t.cp = {0.3e-15, 3e-15};
  t.vdd = 0.7;
  t.coupling = {0.05e-15, 1e-15};
  return t;
}

void validate(const TechProfile& tech) {
  if (tech.layers.empty()) bad_profile("technology profile has no layers");
  for (const Layer& l : tech.layers)
    if (!(l.r_per_nm > 0.0 && l.c_per_nm > 0.0 && std::isfinite(l.r_per_nm) && std::isfinite(l.c_per_nm)))
      bad_profile("layer '" + l.name + "' needs positive per-unit values");
  check_range(tech.slew, "slew", true);
  check_range(tech.rd, "rd", true);
  check_range(tech.cp, "cp", false);
  check_range(tech.coupling, "coupling", false);
  if (!(tech.vdd > 0.0)) bad_profile("vdd must be positive");
  if (!(tech.v_low_frac > 0.0 && tech.v_low_frac < 0.5 && tech.v_high_frac > 0.5 && tech.v_high_frac < 1.0))
    bad_profile("thresholds must satisfy 0 < vlo < 0.5 < vhi < 1");
  if (tech.via_resistance < 0.0) bad_profile("via resistance must be non-negative");
  if (!(tech.short_max_nm > 0.0 && tech.medium_max_nm >= tech.short_max_nm)) bad_profile("invalid length classes");
  if (!(tech.coupling_probability >= 0.0 && tech.coupling_probability <= 1.0))
    bad_profile("coupling probability must lie in [0, 1]");
}

json tech_to_json(const TechProfile& t) {
  json layers = json::array();
  for (const Layer& l : t.layers)
    layers.push_back({{"name", l.name}, {"group", group_name(l.group)}, {"r_per_nm", l.r_per_nm}, {"c_per_nm", l.c_per_nm}});
  return {{"name", t.name},
          {"layers", layers},
          {"via_ohm", t.via_resistance},
          {"use_vias", t.use_vias},
          {"short_max_nm", t.short_max_nm},
          {"medium_max_nm", t.medium_max_nm},
          {"slew_s", range_json(t.slew)},
          {"rd_ohm", range_json(t.rd)},
          {"cp_f", range_json(t.cp)},
          {"vdd_v", t.vdd},
          {"vlo", t.v_low_frac},
          {"vhi", t.v_high_frac},
          {"coupling_probability", t.coupling_probability},
          {"coupling_f", range_json(t.coupling)}};
}

TechProfile tech_from_json(const json& j) {
  if (!j.is_object()) bad_profile("technology profile must be an object");
  static const std::set<std::string> known{"name",   "layers", "via_ohm", "use_vias", "short_max_nm", "medium_max_nm",
                                           "slew_s", "rd_ohm", "cp_f",    "vdd_v",    "vlo",          "vhi",
                                           "coupling_probability", "coupling_f"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) bad_profile("unknown field '" + key + "' in technology profile");
  const TechProfile d = default_tech_profile();
  TechProfile t;
  try {
    t.name = j.value("name", d.name);
    if (j.contains("layers")) {
      for (const json& l : j.at("layers"))
        t.layers.push_back({l.at("name").get<std::string>(), group_from(l.at("group").get<std::string>()),
                            l.at("r_per_nm").get<double>(), l.at("c_per_nm").get<double>()});
    } else {
      t.layers = d.layers;
    }
    t.via_resistance = j.value("via_ohm", d.via_resistance);
    t.use_vias = j.value("use_vias", d.use_vias);
    t.short_max_nm = j.value("short_max_nm", d.short_max_nm);
    t.medium_max_nm = j.value("medium_max_nm", d.medium_max_nm);
    t.slew = range_from(j, "slew_s", d.slew);
    t.rd = range_from(j, "rd_ohm", d.rd);
    t.cp = range_from(j, "cp_f", d.cp);
    t.vdd = j.value("vdd_v", d.vdd);
    t.v_low_frac = j.value("vlo", d.v_low_frac);
    t.v_high_frac = j.value("vhi", d.v_high_frac);
    t.coupling_probability = j.value("coupling_probability", d.coupling_probability);
    t.coupling = range_from(j, "coupling_f", d.coupling);
  } catch (const json::exception& e) {
    bad_profile(std::string("technology profile: ") + e.what());
  }
  validate(t);
  return t;
}

TechProfile load_tech_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open technology profile " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    bad_profile(path + ": " + e.what());
  }
  return tech_from_json(j);
}

json genspec_to_json(const GenSpec& s) {
  return {{"degrees", json::array({s.degree_min, s.degree_max})},
          {"nets_per_degree", s.nets_per_degree},
          {"bbox_long_side_nm", range_json(s.bbox_long_side)},
          {"coord_grid", s.coord_grid},
          {"seed", s.seed},
          {"train_fraction", s.train_fraction}};
}

GenSpec genspec_from_json(const json& j) {
  GenSpec s;
  try {
    if (j.contains("degrees")) {
      s.degree_min = j.at("degrees").at(0).get<int>();
      s.degree_max = j.at("degrees").at(1).get<int>();
    }
    s.nets_per_degree = j.value("nets_per_degree", s.nets_per_degree);
    s.bbox_long_side = range_from(j, "bbox_long_side_nm", s.bbox_long_side);
    s.coord_grid = j.value("coord_grid", s.coord_grid);
    s.seed = j.value("seed", s.seed);
    s.train_fraction = j.value("train_fraction", s.train_fraction);
  } catch (const json::exception& e) {
    bad_profile(std::string("generation spec: ") + e.what());
  }
  validate(s);
  return s;
}

void validate(const GenSpec& s) {
  if (s.degree_min < 3 || s.degree_max < s.degree_min) bad_profile("degrees must satisfy 3 <= min <= max");
  if (s.nets_per_degree < 1) bad_profile("nets_per_degree must be positive");
  check_range(s.bbox_long_side, "bbox_long_side", true);
  if (s.coord_grid < 1) bad_profile("coord_grid must be positive");
  if (!(s.train_fraction >= 0.0 && s.train_fraction <= 1.0)) bad_profile("train_fraction must lie in [0, 1]");
}

std::vector<Point> generate_terminals(const GenSpec& spec, int degree, KeyedRng& rng) {
  const auto span = static_cast<std::uint64_t>(spec.coord_grid) + 1;
  if (static_cast<double>(span) * static_cast<double>(span) < degree)
    throw Error(ErrorKind::MalformedDocument, "coordinate grid too small for the requested degree");
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  while (static_cast<int>(raw.size()) < degree) {
    const auto x = static_cast<std::int64_t>(rng.below(span));
    const auto y = static_cast<std::int64_t>(rng.below(span));
    if (seen.insert({x, y}).second) raw.emplace_back(x, y);
  }
  std::int64_t x0 = raw[0].first, x1 = x0, y0 = raw[0].second, y1 = y0;
  for (auto [x, y] : raw) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  const double long_side = static_cast<double>(std::max(x1 - x0, y1 - y0));
  const double target = rng.log_uniform(spec.bbox_long_side.lo, spec.bbox_long_side.hi);
  const double scale = target / long_side;
  std::vector<Point> points;
  points.reserve(raw.size());
  for (auto [x, y] : raw) points.push_back({static_cast<double>(x - x0) * scale, static_cast<double>(y - y0) * scale});
  return points;
}

RcNetwork realize_rc(const SteinerTree& tree, const TechProfile& tech, KeyedRng& rng, std::size_t driver_terminal,
                     const std::string& name) {
  if (driver_terminal >= tree.terminal_count) throw Error(ErrorKind::MalformedDocument, "driver terminal out of range");
  RcNetwork net;
  net.name = name;
  net.driver.drive_resistance = rng.uniform(tech.rd.lo, tech.rd.hi);
  net.driver.input_slew = rng.uniform(tech.slew.lo, tech.slew.hi);
  net.driver.vdd = tech.vdd;
  net.driver.v_low_frac = tech.v_low_frac;
  net.driver.v_high_frac = tech.v_high_frac;

  std::vector<int> degree(tree.points.size(), 0);
  for (auto [a, b] : tree.edges) {
    ++degree[a];
    ++degree[b];
  }
  int next_id = static_cast<int>(tree.points.size());
  for (std::size_t i = 0; i < tree.points.size(); ++i) {
    RcNode node;
    node.id = static_cast<int>(i);
    node.position = tree.points[i];
    const bool terminal = i < tree.terminal_count;
    if (i == driver_terminal) {
      node.kind = NodeKind::Driver;
    } else if (terminal && degree[i] == 1) {
      node.kind = NodeKind::Fanout;
      node.pin_capacitance = rng.uniform(tech.cp.lo, tech.cp.hi);
    } else {
      node.kind = NodeKind::Junction;
    }
    net.nodes.push_back(node);
  }
  int seg_id = 0;
  for (auto [a, b] : tree.edges) {
    const double length = manhattan(tree.points[a], tree.points[b]);
    const Layer& layer = pick_layer(tech, length, rng);
    WireSegment w;
    w.id = seg_id++;
    w.from_node = static_cast<int>(a);
    w.to_node = static_cast<int>(b);
    w.resistance = length * layer.r_per_nm + (tech.use_vias ? 2.0 * tech.via_resistance : 0.0);
    w.capacitance = length * layer.c_per_nm;
    w.layer = layer.name;
    net.segments.push_back(w);
    if (tech.coupling_probability > 0.0 && rng.uniform() < tech.coupling_probability)
      net.coupling.push_back({w.id, rng.uniform(tech.coupling.lo, tech.coupling.hi)});
  }
  // terminals in the middle of the tree get a stub to a leaf pin
  for (std::size_t i = 0; i < tree.terminal_count; ++i) {
    if (i == driver_terminal || degree[i] == 1) continue;
    RcNode pin;
    pin.id = next_id++;
    pin.kind = NodeKind::Fanout;
    pin.position = tree.points[i];
    pin.pin_capacitance = rng.uniform(tech.cp.lo, tech.cp.hi);
    net.nodes.push_back(pin);
    net.segments.push_back({seg_id++, static_cast<int>(i), pin.id, 0.0, 0.0, {}});
  }
  validate(net);
  return canonicalize(net);
}

std::string synthetic_net_name(int degree, std::int64_t index) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "syn_d%d_%06lld", degree, static_cast<long long>(index));
  return buf;
}

RcNetwork generate_net(const GenSpec& spec, const TechProfile& tech, int degree, std::int64_t index) {
  KeyedRng rng(spec.seed, static_cast<std::uint64_t>(degree), static_cast<std::uint64_t>(index));
  const std::vector<Point> terminals = generate_terminals(spec, degree, rng);
  return realize_rc(build_rsmt(terminals), tech, rng, 0, synthetic_net_name(degree, index));
}

std::vector<std::int64_t> train_indices(const GenSpec& spec, int degree) {
  const std::int64_t n = spec.nets_per_degree;
  const auto k = static_cast<std::int64_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  KeyedRng rng(spec.seed, static_cast<std::uint64_t>(degree), 0, kSplitStream);
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

json generate_dataset(const GenSpec& spec, const TechProfile& tech, std::ostream& corpus, unsigned workers) {
  validate(spec);
  validate(tech);
  const json config = {{"genspec", genspec_to_json(spec)}, {"tech", tech_to_json(tech)}};
  json per_degree = json::array();
  std::int64_t total = 0, train_total = 0;
  for (int degree = spec.degree_min; degree <= spec.degree_max; ++degree) {
    parallel_for_ordered(
        static_cast<std::size_t>(spec.nets_per_degree), workers,
        [&](std::size_t i) { return serialize_network(generate_net(spec, tech, degree, static_cast<std::int64_t>(i))); },
        [&](std::size_t, std::string&& line) { corpus << line << '\n'; }, 1024);
    if (!corpus) throw Error(ErrorKind::Io, "failed writing corpus");
    const auto train = train_indices(spec, degree);
    per_degree.push_back({{"degree", degree}, {"count", spec.nets_per_degree}, {"train", train}});
    total += spec.nets_per_degree;
    train_total += static_cast<std::int64_t>(train.size());
  }
  return {{"format_version", 1},
          {"kind", "rc_corpus"},
          {"tool_version", kToolVersion},
          {"seed", spec.seed},
          {"config", config},
          {"config_hash", sha256_hex(config.dump())},
          {"counts", {{"total", total}, {"train", train_total}, {"test", total - train_total}}},
          {"split",
           {{"rule", "per degree, round(train_fraction * count) indices drawn without replacement; the rest are test"},
            {"per_degree", per_degree}}}};
}

}  // namespace ceff
