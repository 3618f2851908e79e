#pragma once

#include <vector>

#include "ceff/netgen.hpp"

namespace ceff::bench {

/// Deterministic synthetic nets of a single degree.
inline std::vector<RcNetwork> nets_of_degree(int degree, int count) {
  GenSpec spec;
  spec.seed = 99;
  const TechProfile tech = default_tech_profile();
  std::vector<RcNetwork> nets;
  for (int i = 0; i < count; ++i) nets.push_back(generate_net(spec, tech, degree, i));
  return nets;
}

}  // namespace ceff::bench
