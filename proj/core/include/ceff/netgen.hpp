#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ceff/rc_network.hpp"
#include "ceff/rng.hpp"
#include "ceff/rsmt.hpp"

namespace ceff {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class LayerGroup { Lower, Middle, Upper };

struct Layer {
  std::string name;
  LayerGroup group = LayerGroup::Lower;
  double r_per_nm = 0.0;  // ohm / nm
  double c_per_nm = 0.0;  // F / nm
};

struct TechProfile {
  std::string name = "default";
  std::vector<Layer> layers;
  double via_resistance = 0.0;
  bool use_vias = false;  // adds two vias per segment when set
  // segments shorter than short_max_nm use Lower layers, shorter than medium_max_nm Middle, else Upper
  double short_max_nm = 2000.0;
  double medium_max_nm = 20000.0;
  Range slew;  // s
  Range rd;    // ohm
  Range cp;    // F
  double vdd = 0.7;
  double v_low_frac = 0.2;
  double v_high_frac = 0.8;
  double coupling_probability = 0.0;
  Range coupling;  // F per coupled segment
};

/// Built-in illustrative profile; per-unit values have the magnitude of a 7 nm
/// class stack but are not taken from any foundry kit.
TechProfile default_tech_profile();
TechProfile tech_from_json(const nlohmann::json& j);
nlohmann::json tech_to_json(const TechProfile& tech);
TechProfile load_tech_profile(const std::string& path);
void validate(const TechProfile& tech);

struct GenSpec {
  int degree_min = 3;
  int degree_max = 50;
  std::int64_t nets_per_degree = 100;
  Range bbox_long_side{30.0, 100000.0};  // nm
  std::int64_t coord_grid = 1000000;
  std::uint64_t seed = 1;
  double train_fraction = 0.1;
};

nlohmann::json genspec_to_json(const GenSpec& spec);
GenSpec genspec_from_json(const nlohmann::json& j);
void validate(const GenSpec& spec);

/// `degree` distinct integer grid points, translated to the origin and scaled so
/// the longer bounding-box side is log-uniform in spec.bbox_long_side.
std::vector<Point> generate_terminals(const GenSpec& spec, int degree, KeyedRng& rng);

/// RC realization of a Steiner tree. Terminal `driver_terminal` becomes the
/// driver; other terminals become fanouts. A terminal with tree degree > 1 is
/// a junction with a zero-length stub to its fanout pin.
RcNetwork realize_rc(const SteinerTree& tree, const TechProfile& tech, KeyedRng& rng, std::size_t driver_terminal = 0,
                     const std::string& name = "net");

std::string synthetic_net_name(int degree, std::int64_t index);

/// One synthetic net, fully determined by (spec.seed, degree, index).
RcNetwork generate_net(const GenSpec& spec, const TechProfile& tech, int degree, std::int64_t index);

/// Training indices for one degree: round(train_fraction * n) distinct
/// indices, ascending.
std::vector<std::int64_t> train_indices(const GenSpec& spec, int degree);

/// Streams the corpus as JSONL (one canonical net per line, degree-major) and
/// returns the manifest. Nets are produced in windows so memory stays bounded.
nlohmann::json generate_dataset(const GenSpec& spec, const TechProfile& tech, std::ostream& corpus,
                                unsigned workers = 1);

}  // namespace ceff
