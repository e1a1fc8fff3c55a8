#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "mhcl/eval.hpp"
#include "mhcl/hetgraph.hpp"
#include "mhcl/synth.hpp"
#include "support/fixtures.hpp"

using namespace mhcl;

namespace {

// Union-find connectivity: a tree on n nodes has n - 1 edges and one component.
bool is_tree(int n, const std::vector<synth::Edge>& edges) {
  if (edges.size() != static_cast<std::size_t>(n - 1)) return false;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  for (auto [u, v] : edges) {
    const int a = find(u), b = find(v);
    if (a == b) return false;
    parent[static_cast<std::size_t>(a)] = b;
  }
  return true;
}

std::array<int, 3> type_counts(const HeteroGraph& g) {
  std::array<int, 3> counts{};
  for (NodeId v = 0; v < g.num_nodes(); ++v) ++counts[static_cast<std::size_t>(g.node_type(v))];
  return counts;
}

synth::SynthConfig small_config(std::uint64_t seed) {
  synth::SynthConfig c;
  c.n = 900;
  c.feature_dim = 16;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("generate_ba edge counts") {
  const auto tree = synth::generate_ba(5, 1, 3);
  CHECK(tree.size() == 4);
  CHECK(is_tree(5, tree));

  const auto big = synth::generate_ba(1000, 2, 1);
  CHECK(big.size() == 1997);
  std::set<synth::Edge> unique(big.begin(), big.end());
  CHECK(unique.size() == big.size());
  for (auto [u, v] : big) CHECK(u < v);

  // Clique phase C(m, 2) plus m edges for each later node.
  CHECK(synth::generate_ba(50, 4, 0).size() == 6 + 46 * 4);

  CHECK_THROWS_AS(synth::generate_ba(3, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(synth::generate_ba(3, 0, 0), std::invalid_argument);
}

TEST_CASE("generate_ba trees for every seed and a heavy tail") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(is_tree(40, synth::generate_ba(40, 1, seed)));

  double mean_slope = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto edges = synth::generate_ba(6000, 2, seed);
    std::vector<std::pair<int, int>> e(edges.begin(), edges.end());
    mean_slope += fixtures::tail_exponent(degree_distribution(fixtures::plain_graph(6000, e), 0), 4) / 5.0;
  }
  CHECK(mean_slope <= -2.0);
  CHECK(mean_slope >= -4.0);
}

TEST_CASE("heterogenize with a single type keeps no edges") {
  const auto edges = synth::generate_ba(100, 2, 0);
  const auto h = synth::heterogenize(100, edges, {1.0, 0.0, 0.0}, 4);
  CHECK(h.graph.num_edges() == 0);
  CHECK(h.dropped_edges == edges.size());
  CHECK(type_counts(h.graph)[0] == 100);
}

TEST_CASE("heterogenize at the 9000-node scale") {
  const auto edges = synth::generate_ba(9000, 4, 17);
  const auto h = synth::heterogenize(9000, edges, {6.0 / 9, 2.0 / 9, 1.0 / 9}, 18);
  const auto counts = type_counts(h.graph);
  // Binomial standard deviations are about 45, 39 and 30.
  CHECK(std::abs(counts[0] - 6000) <= 200);
  CHECK(std::abs(counts[1] - 2000) <= 200);
  CHECK(std::abs(counts[2] - 1000) <= 200);

  std::set<std::string> names;
  for (std::size_t i = 0; i < h.graph.link_types().size(); ++i) names.insert(h.graph.link_type_name(i));
  CHECK(names == std::set<std::string>{"A-B", "A-C"});
  for (auto [u, v] : h.graph.edges()) CHECK(((h.graph.node_type(u) == 0) != (h.graph.node_type(v) == 0)));
  CHECK(h.graph.num_edges() + h.dropped_edges == edges.size());
}

TEST_CASE("heterogenize rejects bad proportions") {
  const auto edges = synth::generate_ba(10, 1, 0);
  CHECK_THROWS_AS(synth::heterogenize(10, edges, {0.5, 0.2, 0.2}, 0), std::invalid_argument);
  CHECK_THROWS_AS(synth::heterogenize(10, edges, {1.2, -0.2, 0.0}, 0), std::invalid_argument);
}

TEST_CASE("dropped-edge fraction is stable across seeds") {
  // Keep probability 2 pA (1 - pA) = 4/9 for independent endpoint types.
  std::vector<double> fractions;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = synth::make_synthetic(small_config(seed));
    fractions.push_back(static_cast<double>(r.dropped_edges) / static_cast<double>(r.ba_edges));
  }
  const double mean = std::accumulate(fractions.begin(), fractions.end(), 0.0) / 5.0;
  CHECK(std::abs(mean - 5.0 / 9.0) <= 0.05);
  for (double f : fractions) CHECK(std::abs(f - mean) <= 0.05);
}

TEST_CASE("make_synthetic is reproducible and valid") {
  const auto a = synth::make_synthetic(small_config(3));
  const auto b = synth::make_synthetic(small_config(3));
  CHECK(a.graph.edges() == b.graph.edges());
  CHECK(a.graph.raw_labels() == b.graph.raw_labels());
  CHECK(a.graph.features() == b.graph.features());
  for (NodeId v = 0; v < a.graph.num_nodes(); ++v) CHECK(a.graph.node_type(v) == b.graph.node_type(v));

  const auto c = synth::make_synthetic(small_config(4));
  CHECK(c.graph.edges() != a.graph.edges());

  // Rebuilding with the heterogeneity check must accept the generated graph.
  fixtures::TempDir dir("synth");
  write_graph(a.graph, dir / "nodes.tsv", dir / "edges.tsv");
  const auto loaded = load_graph(dir / "nodes.tsv", dir / "edges.tsv");
  CHECK(loaded.num_edges() == a.graph.num_edges());
  CHECK(loaded.features() == a.graph.features());
}

TEST_CASE("gen_features: labels, means and degenerate mixing") {
  const auto edges = synth::generate_ba(3000, 2, 0);
  const auto h = synth::heterogenize(3000, edges, {6.0 / 9, 2.0 / 9, 1.0 / 9}, 1);
  const double mu = 0.7, sigma = 1.3;
  const auto f = synth::gen_features(h.graph, mu, sigma, 12, 2);
  for (NodeId v = 0; v < h.graph.num_nodes(); ++v) {
    const int label = f.labels[static_cast<std::size_t>(v)];
    if (h.graph.node_type(v) == 0) {
      CHECK((label >= 0 && label <= 2));
    } else {
      CHECK(label == -1);
    }
  }

  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(12);
  int count = 0;
  for (NodeId v = 0; v < h.graph.num_nodes(); ++v) {
    if (f.labels[static_cast<std::size_t>(v)] == 2) {
      sum += f.features.row(v);
      ++count;
    }
  }
  REQUIRE(count > 100);
  const double bound = 3.0 * sigma / std::sqrt(static_cast<double>(count));
  for (int j = 0; j < 12; ++j) CHECK(std::abs(sum(j) / count - mu) <= bound);

  // With mu = 0 the class draw no longer shifts the features: the same seed
  // yields the same matrix as drawing pure noise for every node.
  const auto zero = synth::gen_features(h.graph, 0.0, sigma, 12, 2);
  const auto shifted = synth::gen_features(h.graph, mu, sigma, 12, 2);
  CHECK(zero.labels == shifted.labels);
  for (NodeId v = 0; v < h.graph.num_nodes(); ++v) {
    const int label = zero.labels[static_cast<std::size_t>(v)];
    const double centre = label < 0 ? 0.0 : (label - 1) * mu;
    CHECK((shifted.features.row(v).array() - centre - zero.features.row(v).array()).abs().maxCoeff() <= 1e-12);
  }

  CHECK_THROWS_AS(synth::gen_features(h.graph, -1.0, 1.0, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(synth::gen_features(h.graph, 1.0, 0.0, 4, 0), std::invalid_argument);
}

TEST_CASE("well-separated classes are linearly recoverable") {
  synth::SynthConfig c;
  c.n = 450;
  c.mu = 5.0;
  c.sigma = 1.0;
  c.feature_dim = 2000;
  c.seed = 6;
  const auto r = synth::make_synthetic(c);
  const auto& labels = r.graph.raw_labels();
  const auto s = eval::split_labeled(labels, 0.5, 0);
  const auto pred = eval::linear_probe(r.graph.features(), s.train, s.test, labels);
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[static_cast<std::size_t>(s.test[i])];
  CHECK(static_cast<double>(hits) / static_cast<double>(pred.size()) > 0.99);
}

TEST_CASE("write_manifest records the generation settings") {
  const auto config = small_config(9);
  const auto r = synth::make_synthetic(config);
  fixtures::TempDir dir("synth");
  synth::write_manifest(dir / "manifest.txt", config, r);
  const auto text = fixtures::read_text(dir / "manifest.txt");
  CHECK(text.find("n = 900\n") != std::string::npos);
  CHECK(text.find("m = 4\n") != std::string::npos);
  CHECK(text.find("mu = 0.5\n") != std::string::npos);
  CHECK(text.find("sigma = 1\n") != std::string::npos);
  CHECK(text.find("seed = 9\n") != std::string::npos);
  CHECK(text.find("dropped_edges = " + std::to_string(r.dropped_edges) + "\n") != std::string::npos);
  CHECK(text.find("proportions = ") != std::string::npos);
}
