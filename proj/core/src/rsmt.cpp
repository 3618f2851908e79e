#include "ceff/rsmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>

namespace ceff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Dsu {
  std::vector<std::size_t> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

struct WeightedEdge {
  double w;
  std::size_t a, b;
};

// MST length of points + {extra} given an MST of points: only MST edges and
// edges touching the new point can appear in the new tree.
double mst_length_with(const std::vector<Point>& points, const std::vector<std::pair<std::size_t, std::size_t>>& mst,
                       const Point& extra) {
  const std::size_t n = points.size();
  std::vector<WeightedEdge> edges;
  edges.reserve(mst.size() + n);
  for (auto [a, b] : mst) edges.push_back({manhattan(points[a], points[b]), a, b});
  for (std::size_t i = 0; i < n; ++i) edges.push_back({manhattan(points[i], extra), i, n});
  std::sort(edges.begin(), edges.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  Dsu dsu(n + 1);
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& e : edges) {
    if (!dsu.unite(e.a, e.b)) continue;
    total += e.w;
    if (++used == n) break;
  }
  return total;
}

// Drops Steiner points of degree < 3 until none remain and returns the MST
// over what is left. Each removal cannot lengthen the tree.
SteinerTree finalize(const std::vector<Point>& terminals, std::vector<Point> steiner) {
  for (;;) {
    std::vector<Point> points = terminals;
    points.insert(points.end(), steiner.begin(), steiner.end());
    auto edges = rectilinear_mst(points);
    std::vector<int> degree(points.size(), 0);
    for (auto [a, b] : edges) {
      ++degree[a];
      ++degree[b];
    }
    std::vector<Point> kept;
    for (std::size_t s = 0; s < steiner.size(); ++s)
      if (degree[terminals.size() + s] >= 3) kept.push_back(steiner[s]);
    if (kept.size() == steiner.size()) {
      SteinerTree tree;
      tree.points = std::move(points);
      tree.terminal_count = terminals.size();
      tree.edges = std::move(edges);
      return tree;
    }
    steiner = std::move(kept);
  }
}

std::vector<Point> hanan_points(const std::vector<Point>& terminals, std::vector<double>& xs, std::vector<double>& ys) {
  xs.clear();
  ys.clear();
  for (const Point& p : terminals) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::vector<Point> grid;
  grid.reserve(xs.size() * ys.size());
  for (double x : xs)
    for (double y : ys) grid.push_back({x, y});
  return grid;
}

}  // namespace

double manhattan(const Point& a, const Point& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

double tree_length(const SteinerTree& tree) {
  double total = 0.0;
  for (auto [a, b] : tree.edges) total += manhattan(tree.points[a], tree.points[b]);
  return total;
}

std::vector<std::pair<std::size_t, std::size_t>> rectilinear_mst(const std::vector<Point>& points) {
  const std::size_t n = points.size();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (n < 2) return edges;
  std::vector<double> best(n, kInf);
  std::vector<std::size_t> from(n, 0);
  std::vector<bool> in_tree(n, false);
  in_tree[0] = true;
  for (std::size_t v = 1; v < n; ++v) best[v] = manhattan(points[0], points[v]);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in_tree[v] && (pick == n || best[v] < best[pick])) pick = v;
    in_tree[pick] = true;
    edges.emplace_back(from[pick], pick);
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double d = manhattan(points[pick], points[v]);
      if (d < best[v]) {
        best[v] = d;
        from[v] = pick;
      }
    }
  }
  return edges;
}

double rmst_length(const std::vector<Point>& points) {
  double total = 0.0;
  for (auto [a, b] : rectilinear_mst(points)) total += manhattan(points[a], points[b]);
  return total;
}

SteinerTree exact_rsmt(const std::vector<Point>& terminals) {
  const std::size_t k = terminals.size();
  if (k <= 2) return finalize(terminals, {});
  std::vector<double> xs, ys;
  const std::vector<Point> grid = hanan_points(terminals, xs, ys);
  const std::size_t nv = grid.size();
  auto vertex_of = [&](const Point& p) {
    const auto ix = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), p.x) - xs.begin());
    const auto iy = static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), p.y) - ys.begin());
    return ix * ys.size() + iy;
  };
  std::vector<std::size_t> term(k);
  for (std::size_t i = 0; i < k; ++i) term[i] = vertex_of(terminals[i]);

  // Dreyfus-Wagner over subsets of the first k-1 terminals; the last one is the root.
  const std::size_t m = k - 1;
  const std::size_t full = (std::size_t{1} << m) - 1;
  std::vector<double> dp((full + 1) * nv, kInf);
  std::vector<std::uint32_t> from((full + 1) * nv, 0);   // vertex the subtree hangs from
  std::vector<std::uint32_t> split((full + 1) * nv, 0);  // subset split at a merge vertex
  std::vector<double> merged(nv);
  for (std::size_t s = 1; s <= full; ++s) {
    std::fill(merged.begin(), merged.end(), kInf);
    if ((s & (s - 1)) == 0) {
      merged[term[static_cast<std::size_t>(__builtin_ctzll(s))]] = 0.0;
    } else {
      const std::size_t low = s & (~s + 1);
      for (std::size_t d = (s - 1) & s; d > 0; d = (d - 1) & s) {
        if (!(d & low)) continue;
        const double* a = &dp[d * nv];
        const double* b = &dp[(s ^ d) * nv];
        for (std::size_t v = 0; v < nv; ++v) {
          const double c = a[v] + b[v];
          if (c < merged[v]) {
            merged[v] = c;
            split[s * nv + v] = static_cast<std::uint32_t>(d);
          }
        }
      }
    }
    for (std::size_t v = 0; v < nv; ++v) {
      double best = kInf;
      std::size_t arg = v;
      for (std::size_t u = 0; u < nv; ++u) {
        const double c = merged[u] + manhattan(grid[u], grid[v]);
        if (c < best) {
          best = c;
          arg = u;
        }
      }
      dp[s * nv + v] = best;
      from[s * nv + v] = static_cast<std::uint32_t>(arg);
    }
  }

  std::set<std::size_t> used;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{full, term[m]}};
  while (!stack.empty()) {
    const auto [s, v] = stack.back();
    stack.pop_back();
    const std::size_t u = from[s * nv + v];
    used.insert(u);
    used.insert(v);
    if ((s & (s - 1)) == 0) continue;
    const std::size_t d = split[s * nv + u];
    stack.push_back({d, u});
    stack.push_back({s ^ d, u});
  }
  std::set<std::size_t> terminal_vertices(term.begin(), term.end());
  std::vector<Point> steiner;
  for (std::size_t v : used)
    if (!terminal_vertices.count(v)) steiner.push_back(grid[v]);
  return finalize(terminals, std::move(steiner));
}

SteinerTree iterated_one_steiner(const std::vector<Point>& terminals) {
  std::vector<double> xs, ys;
  const std::vector<Point> grid = hanan_points(terminals, xs, ys);
  auto key = [](const Point& p) { return std::pair{p.x, p.y}; };

  SteinerTree tree = finalize(terminals, {});
  for (std::size_t round = 0; round < 4 * terminals.size() + 4; ++round) {
    std::set<std::pair<double, double>> present;
    for (const Point& p : tree.points) present.insert(key(p));
    const double cost = tree_length(tree);
    const double eps = 1e-12 * cost;

    std::vector<std::pair<double, std::size_t>> gains;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      if (present.count(key(grid[c]))) continue;
      const double gain = cost - mst_length_with(tree.points, tree.edges, grid[c]);
      if (gain > eps) gains.emplace_back(-gain, c);
    }
    if (gains.empty()) break;
    std::sort(gains.begin(), gains.end());

    // batch: accept candidates in gain order while each still helps
    std::vector<Point> points = tree.points;
    auto edges = tree.edges;
    double current = cost;
    for (const auto& [neg_gain, c] : gains) {
      const double next = mst_length_with(points, edges, grid[c]);
      if (current - next <= eps) continue;
      points.push_back(grid[c]);
      edges = rectilinear_mst(points);
      current = next;
    }
    std::vector<Point> steiner(points.begin() + static_cast<std::ptrdiff_t>(terminals.size()), points.end());
    SteinerTree next = finalize(terminals, std::move(steiner));
    if (tree_length(next) >= cost - eps) break;
    tree = std::move(next);
  }
  return tree;
}

SteinerTree build_rsmt(const std::vector<Point>& terminals) {
  if (terminals.size() <= kExactSteinerLimit) return exact_rsmt(terminals);
  return iterated_one_steiner(terminals);
}

}  // namespace ceff
