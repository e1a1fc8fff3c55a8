#include "mhcl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace mhcl::synth {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

// Independent streams for topology, types and features.
std::uint64_t stream(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<Edge> generate_ba(int n, int m, std::uint64_t seed) {
  if (m < 1 || n <= m) throw std::invalid_argument("generate_ba needs n > m >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  std::vector<NodeId> endpoints;  // each node repeated once per incident edge
  for (NodeId u = 0; u < m; ++u) {
    for (NodeId v = u + 1; v < m; ++v) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  for (NodeId v = m; v < n; ++v) {
    std::set<NodeId> chosen;
    while (static_cast<int>(chosen.size()) < m) {
      const NodeId u = endpoints.empty() ? static_cast<NodeId>(pick(rng, static_cast<std::size_t>(v)))
                                         : endpoints[pick(rng, endpoints.size())];
      chosen.insert(u);
    }
    for (NodeId u : chosen) {
      edges.emplace_back(u, v);
      endpoints.push_back(u);
      endpoints.push_back(v);
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

Heterogenized heterogenize(int n, const std::vector<Edge>& edges, const std::array<double, 3>& proportions,
                           std::uint64_t seed) {
  double total = 0.0;
  for (double p : proportions) {
    if (p < 0.0) throw std::invalid_argument("negative type proportion");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("type proportions must sum to 1");

  std::mt19937_64 rng(seed);
  GraphData data;
  data.type_names = {"A", "B", "C"};
  data.node_names.reserve(static_cast<std::size_t>(n));
  data.node_types.reserve(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const double u = uniform01(rng);
    const TypeId t = u < proportions[0] ? 0 : (u < proportions[0] + proportions[1] ? 1 : 2);
    data.node_names.push_back("n" + std::to_string(v));
    data.node_types.push_back(t);
  }
  std::size_t dropped = 0;
  for (auto [u, v] : edges) {
    const TypeId a = data.node_types[static_cast<std::size_t>(u)];
    const TypeId b = data.node_types[static_cast<std::size_t>(v)];
    if ((a == 0) != (b == 0)) {
      data.edges.emplace_back(u, v);
    } else {
      ++dropped;
    }
  }
  return {HeteroGraph::build(std::move(data)), dropped};
}

FeatureSet gen_features(const HeteroGraph& g, double mu, double sigma, int feature_dim, std::uint64_t seed) {
  if (mu < 0.0 || !(sigma > 0.0)) throw std::invalid_argument("gen_features needs mu >= 0 and sigma > 0");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  const auto a_type = g.find_type("A");
  FeatureSet out;
  out.features.resize(g.num_nodes(), feature_dim);
  out.labels.assign(static_cast<std::size_t>(g.num_nodes()), -1);
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    double centre = 0.0;
    if (a_type && g.node_type(v) == *a_type) {
      const int k = static_cast<int>(pick(rng, 3));
      out.labels[static_cast<std::size_t>(v)] = k;
      centre = (k - 1) * mu;
    }
    for (int j = 0; j < feature_dim; ++j) out.features(v, j) = centre + noise(rng);
  }
  return out;
}

HeteroGraph with_features(const HeteroGraph& g, FeatureSet features) {
  GraphData data;
  data.type_names = g.type_names();
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    data.node_names.push_back(g.node_name(v));
    data.node_types.push_back(g.node_type(v));
  }
  data.features = std::move(features.features);
  data.labels = std::move(features.labels);
  data.edges = g.edges();
  return HeteroGraph::build(std::move(data));
}

SynthResult make_synthetic(const SynthConfig& config) {
  const auto edges = generate_ba(config.n, config.m, stream(config.seed, 0));
  auto typed = heterogenize(config.n, edges, config.proportions, stream(config.seed, 1));
  auto features = gen_features(typed.graph, config.mu, config.sigma, config.feature_dim, stream(config.seed, 2));
  return {with_features(typed.graph, std::move(features)), edges.size(), typed.dropped_edges};
}

void write_manifest(const std::filesystem::path& path, const SynthConfig& config, const SynthResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "command = synth\n"
      << "n = " << config.n << "\n"
      << "m = " << config.m << "\n"
      << "proportions = " << config.proportions[0] << ',' << config.proportions[1] << ','
      << config.proportions[2] << "\n"
      << "mu = " << config.mu << "\n"
      << "sigma = " << config.sigma << "\n"
      << "feature_dim = " << config.feature_dim << "\n"
      << "seed = " << config.seed << "\n"
      << "ba_edges = " << result.ba_edges << "\n"
      << "dropped_edges = " << result.dropped_edges << "\n"
      << "kept_edges = " << result.graph.num_edges() << "\n";
}

}  // namespace mhcl::synth
