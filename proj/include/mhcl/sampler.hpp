#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mhcl/hetgraph.hpp"

namespace mhcl {

using TargetInstances = std::map<Metapath, std::vector<MetapathInstance>>;
using SampledInstances = std::map<NodeId, TargetInstances>;

struct SamplerOptions {
  /// Per (target, metapath) cap; 0 disables subsampling.
  std::size_t instance_cap = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Breadth-first enumeration of every simple path with 2..max_length nodes
/// starting at each target, grouped by node-type sequence. Instance lists are
/// sorted lexicographically by node id.
SampledInstances enumerate_instances(const HeteroGraph& g, const std::vector<NodeId>& targets,
                                     int max_length, const SamplerOptions& options = {});

std::map<Metapath, std::size_t> instance_counts(const SampledInstances& sampled);

std::size_t total_instances(const SampledInstances& sampled);

}  // namespace mhcl
