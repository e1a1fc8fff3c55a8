#include "mhcl/sampler.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <thread>

namespace mhcl {
namespace {

TargetInstances enumerate_from(const HeteroGraph& g, NodeId start, int max_length,
                               const SamplerOptions& options) {
  TargetInstances out;
  std::vector<MetapathInstance> frontier{{start}};
  for (int len = 2; len <= max_length && !frontier.empty(); ++len) {
    std::vector<MetapathInstance> next;
    for (const auto& path : frontier) {
      for (NodeId w : g.neighbors(path.back())) {
        if (std::find(path.begin(), path.end(), w) != path.end()) continue;
        auto extended = path;
        extended.push_back(w);
        next.push_back(std::move(extended));
      }
    }
    for (const auto& path : next) {
      Metapath m;
      m.types.reserve(path.size());
      for (NodeId v : path) m.types.push_back(g.node_type(v));
      out[std::move(m)].push_back(path);
    }
    frontier = std::move(next);
  }

  for (auto& [metapath, list] : out) {
    std::sort(list.begin(), list.end());
    if (options.instance_cap > 0 && list.size() > options.instance_cap) {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(start)};
      std::mt19937_64 rng(seq);
      std::vector<std::size_t> index(list.size());
      for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
      // Partial Fisher-Yates: first `cap` entries form a uniform subset.
      for (std::size_t i = 0; i < options.instance_cap; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, index.size() - 1);
        std::swap(index[i], index[pick(rng)]);
      }
      index.resize(options.instance_cap);
      std::sort(index.begin(), index.end());
      std::vector<MetapathInstance> kept;
      kept.reserve(index.size());
      for (auto i : index) kept.push_back(std::move(list[i]));
      list = std::move(kept);
    }
  }
  return out;
}

}  // namespace

SampledInstances enumerate_instances(const HeteroGraph& g, const std::vector<NodeId>& targets,
                                     int max_length, const SamplerOptions& options) {
  if (max_length < 2) throw std::invalid_argument("maximum metapath length must be >= 2");
  if (targets.empty()) throw std::invalid_argument("no target nodes");
  for (NodeId v : targets) {
    if (v < 0 || v >= g.num_nodes()) throw std::invalid_argument("target node out of range");
  }

  std::vector<TargetInstances> per_target(targets.size());
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(targets.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      per_target[i] = enumerate_from(g, targets[i], max_length, options);
    }
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < targets.size(); i += threads) {
          per_target[i] = enumerate_from(g, targets[i], max_length, options);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  SampledInstances out;
  for (std::size_t i = 0; i < targets.size(); ++i) out[targets[i]] = std::move(per_target[i]);
  return out;
}

std::map<Metapath, std::size_t> instance_counts(const SampledInstances& sampled) {
  std::map<Metapath, std::size_t> counts;
  for (const auto& [target, by_metapath] : sampled) {
    for (const auto& [metapath, list] : by_metapath) counts[metapath] += list.size();
  }
  return counts;
}

std::size_t total_instances(const SampledInstances& sampled) {
  std::size_t total = 0;
  for (const auto& [metapath, count] : instance_counts(sampled)) total += count;
  return total;
}

}  // namespace mhcl
