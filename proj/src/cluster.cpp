#include "collabperf/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "collabperf/error.hpp"

namespace collabperf {

Dendrogram average_linkage(const Table& distance) {
  const std::size_t n = distance.size();
  for (const auto& row : distance)
    if (row.size() != n) throw InputError("distance table must be square");
  Dendrogram tree;
  tree.n = n;
  if (n < 2) return tree;

  Table d = distance;
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> id(n), size(n, 1), rep(n);
  std::iota(id.begin(), id.end(), 0);
  std::iota(rep.begin(), rep.end(), 0);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!alive[j]) continue;
        // Slot i always holds the cluster whose smallest leaf is i, so slot
        // order is the representative order used for tie-breaking.
        if (d[i][j] < best) {
          best = d[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == n) {
      // Only infinite/NaN distances remain; merge the first two live slots.
      for (std::size_t i = 0; i < n && bj == n; ++i)
        if (alive[i]) (bi == n ? bi : bj) = i;
      best = std::numeric_limits<double>::infinity();
    }
    tree.merges.push_back({std::min(id[bi], id[bj]), std::max(id[bi], id[bj]), best, size[bi] + size[bj]});
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      const double v = (static_cast<double>(size[bi]) * d[bi][k] + static_cast<double>(size[bj]) * d[bj][k]) /
                       static_cast<double>(size[bi] + size[bj]);
      d[bi][k] = d[k][bi] = v;
    }
    size[bi] += size[bj];
    id[bi] = n + step;
    alive[bj] = false;
  }
  return tree;
}

std::vector<std::vector<std::size_t>> cut_tree(const Dendrogram& tree, double height) {
  const std::size_t n = tree.n;
  std::vector<std::size_t> parent(n + tree.merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t k = 0; k < tree.merges.size(); ++k) {
    const auto& m = tree.merges[k];
    if (!(m.height <= height)) continue;
    parent[find(m.left)] = n + k;
    parent[find(m.right)] = n + k;
  }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(parent.size(), SIZE_MAX);
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    const std::size_t root = find(leaf);
    if (slot[root] == SIZE_MAX) {
      slot[root] = groups.size();
      groups.emplace_back();
    }
    groups[slot[root]].push_back(leaf);
  }
  return groups;
}

Clustering hierarchical_cluster(const Table& correlation, double cut_height) {
  Table dist = correlation;
  for (std::size_t i = 0; i < dist.size(); ++i)
    for (std::size_t j = 0; j < dist[i].size(); ++j) dist[i][j] = i == j ? 0.0 : 1.0 - correlation[i][j];
  Clustering c;
  c.tree = average_linkage(dist);
  c.clusters = cut_tree(c.tree, cut_height);
  return c;
}

}  // namespace collabperf
