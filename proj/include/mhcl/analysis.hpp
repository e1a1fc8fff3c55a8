#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "mhcl/hetgraph.hpp"

namespace mhcl::analysis {

using Distance = std::uint16_t;
inline constexpr Distance kUnreachable = std::numeric_limits<Distance>::max();

/// Row-major n x n hop distances.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<Distance> d;

  Distance operator()(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

/// One breadth-first search per source.
DistanceMatrix bfs_apsp(const HeteroGraph& g);

struct DeltaMode {
  enum class Kind { exact, sampled };
  Kind kind = Kind::sampled;
  long long quadruples = 100000;
  std::uint64_t seed = 0;

  static DeltaMode exact() { return {Kind::exact, 0, 0}; }
  static DeltaMode sampled(long long q, std::uint64_t seed = 0) { return {Kind::sampled, q, seed}; }
};

struct Delta {
  double max = 0.0;
  double avg = 0.0;
  long long quadruples = 0;
};

/// Four-point delta over the nodes `members`, which must be pairwise reachable
/// in `dist`. Fewer than four members gives zero. Sampled mode falls back to
/// exact enumeration when there are no more than q quadruples.
Delta delta_of(const DistanceMatrix& dist, const std::vector<std::size_t>& members, const DeltaMode& mode);

/// Delta of every connected component with at least four nodes, combined by a
/// node-count-weighted mean (avg) and the maximum (max).
Delta gromov_delta(const HeteroGraph& g, const DeltaMode& mode);

/// Connected components as sorted node lists, ordered by smallest member.
std::vector<std::vector<NodeId>> connected_components(const HeteroGraph& g);

struct MetapathDelta {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  Delta delta;
};

MetapathDelta metapath_delta(const HeteroGraph& g, const Metapath& metapath, const DeltaMode& mode);

}  // namespace mhcl::analysis
