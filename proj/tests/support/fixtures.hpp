#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mhcl/hetgraph.hpp"
#include "mhcl/model.hpp"
#include "mhcl/sampler.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("mhcl-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

using mhcl::GraphData;
using mhcl::HeteroGraph;
using mhcl::NodeId;
using mhcl::TypeId;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Graph with named nodes; types given per node by name.
inline HeteroGraph make_graph(const std::vector<std::string>& type_names,
                              const std::vector<std::pair<std::string, std::string>>& nodes,
                              const std::vector<std::pair<int, int>>& edges, int feature_dim = 0,
                              std::uint64_t feature_seed = 0, HeteroGraph::Check check = HeteroGraph::Check::none) {
  GraphData d;
  d.type_names = type_names;
  for (const auto& [name, type] : nodes) {
    d.node_names.push_back(name);
    const auto it = std::find(type_names.begin(), type_names.end(), type);
    d.node_types.push_back(static_cast<TypeId>(it - type_names.begin()));
  }
  std::mt19937_64 rng(feature_seed);
  d.features = Eigen::MatrixXd(static_cast<Eigen::Index>(nodes.size()), feature_dim);
  for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = uniform(rng, -1.0, 1.0);
  for (auto [u, v] : edges) d.edges.emplace_back(u, v);
  return HeteroGraph::build(std::move(d), check);
}

/// Erdos-Renyi graph over `types` node types assigned uniformly at random.
inline HeteroGraph random_typed_graph(int n, int types, double p, std::uint64_t seed, int feature_dim = 0) {
  std::mt19937_64 rng(seed);
  GraphData d;
  for (int t = 0; t < types; ++t) d.type_names.push_back(std::string(1, static_cast<char>('A' + t)));
  for (int v = 0; v < n; ++v) {
    d.node_names.push_back("v" + std::to_string(v));
    d.node_types.push_back(static_cast<TypeId>(rng() % static_cast<std::uint64_t>(types)));
  }
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (uniform(rng, 0.0, 1.0) < p) d.edges.emplace_back(u, v);
    }
  }
  d.features = Eigen::MatrixXd(n, feature_dim);
  for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = uniform(rng, -1.0, 1.0);
  return HeteroGraph::build(std::move(d), HeteroGraph::Check::none);
}

/// Uniform random labelled tree (random parent among earlier nodes, shuffled ids).
inline HeteroGraph random_tree(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  GraphData d;
  d.type_names = {"T"};
  for (int v = 0; v < n; ++v) {
    d.node_names.push_back("t" + std::to_string(v));
    d.node_types.push_back(0);
  }
  for (int v = 1; v < n; ++v) {
    const int parent = static_cast<int>(rng() % static_cast<std::uint64_t>(v));
    d.edges.emplace_back(perm[static_cast<std::size_t>(v)], perm[static_cast<std::size_t>(parent)]);
  }
  return HeteroGraph::build(std::move(d), HeteroGraph::Check::none);
}

/// Homogeneous graph from an edge list.
inline HeteroGraph plain_graph(int n, const std::vector<std::pair<int, int>>& edges) {
  GraphData d;
  d.type_names = {"T"};
  for (int v = 0; v < n; ++v) {
    d.node_names.push_back("p" + std::to_string(v));
    d.node_types.push_back(0);
  }
  for (auto [u, v] : edges) d.edges.emplace_back(u, v);
  return HeteroGraph::build(std::move(d), HeteroGraph::Check::none);
}

/// 20 nodes: 10 A (labelled 0/1), 6 B, 4 C. Every A node has at least one B
/// and one C neighbour, so with l = 2 every target sees metapaths A-B and A-C.
inline HeteroGraph twenty_node_fixture(int feature_dim = 4, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  GraphData d;
  d.type_names = {"A", "B", "C"};
  for (int v = 0; v < 20; ++v) {
    d.node_names.push_back("n" + std::to_string(v));
    d.node_types.push_back(v < 10 ? 0 : (v < 16 ? 1 : 2));
    d.labels.push_back(v < 10 ? v % 2 : -1);
  }
  std::set<std::pair<int, int>> edges;
  for (int a = 0; a < 10; ++a) {
    edges.insert({a, 10 + static_cast<int>(rng() % 6)});
    edges.insert({a, 16 + static_cast<int>(rng() % 4)});
    if (rng() % 2) edges.insert({a, 10 + static_cast<int>(rng() % 6)});
  }
  for (auto e : edges) d.edges.push_back(e);
  d.features = Eigen::MatrixXd(20, feature_dim);
  for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = uniform(rng, -1.0, 1.0);
  return HeteroGraph::build(std::move(d));
}

/// Recursive DFS enumeration of simple paths with 2..max_length nodes from `start`.
inline std::multiset<std::vector<NodeId>> dfs_paths(const HeteroGraph& g, NodeId start, int max_length) {
  std::multiset<std::vector<NodeId>> out;
  std::vector<NodeId> path{start};
  std::function<void()> walk = [&]() {
    if (path.size() >= 2) out.insert(path);
    if (static_cast<int>(path.size()) == max_length) return;
    for (NodeId v : g.neighbors(path.back())) {
      if (std::find(path.begin(), path.end(), v) != path.end()) continue;
      path.push_back(v);
      walk();
      path.pop_back();
    }
  };
  walk();
  return out;
}

/// True when enumerate_instances over every node agrees with dfs_paths as a
/// multiset, and each instance is filed under its own type sequence.
inline bool sampler_matches_oracle(const HeteroGraph& g, int max_length) {
  std::vector<NodeId> all(static_cast<std::size_t>(g.num_nodes()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) all[static_cast<std::size_t>(v)] = v;
  const auto sampled = mhcl::enumerate_instances(g, all, max_length);
  for (NodeId v : all) {
    std::multiset<std::vector<NodeId>> got;
    const auto it = sampled.find(v);
    if (it == sampled.end()) return false;
    for (const auto& [mp, list] : it->second) {
      for (const auto& inst : list) {
        std::vector<mhcl::TypeId> types;
        for (NodeId u : inst) types.push_back(g.node_type(u));
        if (types != mp.types) return false;
        got.insert(inst);
      }
    }
    if (got != dfs_paths(g, v, max_length)) return false;
  }
  return true;
}

/// Floyd-Warshall all-pairs hop distances; unreachable pairs are INT_MAX.
inline std::vector<std::vector<long>> floyd_warshall(const HeteroGraph& g) {
  const auto n = static_cast<std::size_t>(g.num_nodes());
  const long inf = std::numeric_limits<int>::max();
  std::vector<std::vector<long>> d(n, std::vector<long>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (auto [u, v] : g.edges()) d[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] =
      d[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] < inf && d[k][j] < inf) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// Brute-force four-point delta over every quadruple of a distance matrix.
inline std::pair<double, double> brute_delta(const std::vector<std::vector<long>>& d) {
  const std::size_t n = d.size();
  double best = 0.0, sum = 0.0;
  long count = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t e = c + 1; e < n; ++e) {
          std::vector<long> s{d[a][b] + d[c][e], d[a][c] + d[b][e], d[a][e] + d[b][c]};
          std::sort(s.rbegin(), s.rend());
          const double delta = static_cast<double>(s[0] - s[1]) / 2.0;
          best = std::max(best, delta);
          sum += delta;
          ++count;
        }
  return {best, count ? sum / static_cast<double>(count) : 0.0};
}

/// Power-law density exponent of a degree histogram: the least-squares
/// log-log slope of the complementary CDF over degrees >= min_degree, minus 1.
inline double tail_exponent(const std::map<std::size_t, std::size_t>& hist, std::size_t min_degree) {
  double total = 0.0;
  for (auto [d, c] : hist) total += static_cast<double>(c);
  double above = total, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int k = 0;
  for (auto [d, c] : hist) {
    if (d >= min_degree && d > 0) {
      const double x = std::log(static_cast<double>(d));
      const double y = std::log(above / total);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++k;
    }
    above -= static_cast<double>(c);
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx) - 1.0;
}

/// Relative error with an absolute floor for near-zero references.
inline double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Fills every tensor with uniform values in [-scale, scale] (curvature
/// thetas stay at their current values unless `touch_curvature`).
inline void randomize(mhcl::ModelParams& p, std::uint64_t seed, double scale, bool touch_curvature = false) {
  std::mt19937_64 rng(seed);
  p.for_each([&](const std::string&, Eigen::MatrixXd& m, mhcl::ParamKind kind) {
    if (kind == mhcl::ParamKind::curvature && !touch_curvature) return;
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -scale, scale);
  });
}

}  // namespace fixtures
