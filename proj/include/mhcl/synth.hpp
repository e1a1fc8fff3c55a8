#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "mhcl/hetgraph.hpp"

namespace mhcl::synth {

using Edge = std::pair<NodeId, NodeId>;

/// Barabasi-Albert preferential attachment seeded from an m-node clique.
/// Returns edges with first < second, sorted.
std::vector<Edge> generate_ba(int n, int m, std::uint64_t seed);

struct Heterogenized {
  HeteroGraph graph;  // types A, B, C; no features yet
  std::size_t dropped_edges = 0;
};

/// Proportions of types A, B, C. Only A-B and A-C edges survive.
Heterogenized heterogenize(int n, const std::vector<Edge>& edges, const std::array<double, 3>& proportions,
                           std::uint64_t seed);

struct FeatureSet {
  Eigen::MatrixXd features;
  std::vector<int> labels;  // -1 for B and C nodes
};

/// A nodes get a uniform class k in {0,1,2} and features from N((k-1)mu, sigma^2);
/// B and C nodes draw from N(0, sigma^2).
FeatureSet gen_features(const HeteroGraph& g, double mu, double sigma, int feature_dim, std::uint64_t seed);

HeteroGraph with_features(const HeteroGraph& g, FeatureSet features);

struct SynthConfig {
  int n = 9000;
  int m = 4;
  std::array<double, 3> proportions{6.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0};
  double mu = 0.5;
  double sigma = 1.0;
  int feature_dim = 2000;
  std::uint64_t seed = 0;
};

struct SynthResult {
  HeteroGraph graph;
  std::size_t ba_edges = 0;
  std::size_t dropped_edges = 0;
};

/// Topology, types and features from one seed.
SynthResult make_synthetic(const SynthConfig& config);

void write_manifest(const std::filesystem::path& path, const SynthConfig& config, const SynthResult& result);

}  // namespace mhcl::synth
