#pragma once

#include <vector>

namespace collabperf {

using Table = std::vector<std::vector<double>>;

/// Leaves are 0..n-1; merge k creates cluster n+k.
struct Merge {
  std::size_t left = 0, right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;
};

/// Average-linkage agglomeration. Among equally close pairs the one with the
/// smallest (min leaf of first, min leaf of second) is merged first.
Dendrogram average_linkage(const Table& distance);

/// Flat clusters after applying every merge with height <= `height`; each
/// cluster lists its leaves ascending, clusters ordered by first leaf.
std::vector<std::vector<std::size_t>> cut_tree(const Dendrogram& tree, double height);

struct Clustering {
  Dendrogram tree;
  std::vector<std::vector<std::size_t>> clusters;
};

/// distance = 1 - correlation.
Clustering hierarchical_cluster(const Table& correlation, double cut_height = 0.5);

}  // namespace collabperf
