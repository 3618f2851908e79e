#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ceff/rc_network.hpp"

namespace ceff {

/// Rectilinear tree: the first `terminal_count` points are the terminals in
/// input order, the rest are Steiner points. Edge length is the Manhattan
/// distance between its endpoints (an L-shaped route).
struct SteinerTree {
  std::vector<Point> points;
  std::size_t terminal_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

double manhattan(const Point& a, const Point& b);
double tree_length(const SteinerTree& tree);

/// Rectilinear minimum spanning tree length (Prim, O(n^2)).
double rmst_length(const std::vector<Point>& points);

/// Minimum spanning tree edges over `points` in the Manhattan metric.
std::vector<std::pair<std::size_t, std::size_t>> rectilinear_mst(const std::vector<Point>& points);

/// Terminal counts up to this use the exact Hanan-grid dynamic program.
inline constexpr std::size_t kExactSteinerLimit = 9;

/// Exact Steiner tree by Dreyfus-Wagner on the Hanan grid; cost grows as 3^k.
SteinerTree exact_rsmt(const std::vector<Point>& terminals);

/// Batched iterated 1-Steiner over Hanan candidates.
SteinerTree iterated_one_steiner(const std::vector<Point>& terminals);

/// Exact below kExactSteinerLimit terminals, iterated 1-Steiner above.
/// Steiner points of degree < 3 are removed. Terminals must be distinct.
SteinerTree build_rsmt(const std::vector<Point>& terminals);

}  // namespace ceff
