#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "mhcl/eval.hpp"
#include "support/fixtures.hpp"

using namespace mhcl;
using eval::Mat;

namespace {

std::vector<int> balanced_labels(int n, int classes) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % classes;
  return labels;
}

// Pair-enumeration ARI oracle: counts agreeing pairs directly.
double brute_ari(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double same_both = 0, same_a = 0, same_b = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j];
      const bool sb = b[i] == b[j];
      same_both += sa && sb;
      same_a += sa;
      same_b += sb;
      pairs += 1;
    }
  }
  const double expected = same_a * same_b / pairs;
  const double max_index = 0.5 * (same_a + same_b);
  if (max_index == expected) return 1.0;
  return (same_both - expected) / (max_index - expected);
}

double entropy(const std::vector<int>& x) {
  std::map<int, double> counts;
  for (int v : x) counts[v] += 1;
  double h = 0;
  for (const auto& [k, c] : counts) {
    const double p = c / static_cast<double>(x.size());
    h -= p * std::log(p);
  }
  return h;
}

double brute_nmi(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> joint(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) joint[i] = a[i] * 1000 + b[i];
  const double ha = entropy(a), hb = entropy(b);
  if (ha == 0 || hb == 0) return 0.0;
  return (ha + hb - entropy(joint)) / std::sqrt(ha * hb);
}

double brute_silhouette(const Mat& x, const std::vector<int>& labels) {
  const auto n = x.rows();
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> by_label;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      auto& slot = by_label[labels[static_cast<std::size_t>(j)]];
      slot.first += (x.row(i) - x.row(j)).norm();
      slot.second += 1;
    }
    const int own = labels[static_cast<std::size_t>(i)];
    if (by_label[own].second == 0) continue;
    const double a = by_label[own].first / by_label[own].second;
    double b = INFINITY;
    for (const auto& [l, s] : by_label) {
      if (l != own && s.second > 0) b = std::min(b, s.first / s.second);
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

std::vector<int> permuted(const std::vector<int>& x, const std::vector<int>& map) {
  std::vector<int> out;
  for (int v : x) out.push_back(map[static_cast<std::size_t>(v)]);
  return out;
}

}  // namespace

TEST_CASE("split_labeled examples") {
  const auto labels = balanced_labels(10, 2);
  const auto s = eval::split_labeled(labels, 0.5, 4);
  CHECK(s.train.size() == 5);
  CHECK(s.test.size() == 5);
  int train_zero = 0;
  for (int i : s.train) train_zero += labels[static_cast<std::size_t>(i)] == 0;
  CHECK((train_zero == 2 || train_zero == 3));

  const auto again = eval::split_labeled(labels, 0.5, 4);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);

  const auto big = eval::split_labeled(balanced_labels(100, 4), 0.2, 1);
  CHECK(big.train.size() == 20);
  CHECK(big.test.size() == 80);
}

TEST_CASE("split_labeled partitions the labeled nodes and skips unlabeled ones") {
  std::vector<int> labels = balanced_labels(30, 3);
  labels[4] = -1;
  labels[17] = -1;
  const auto s = eval::split_labeled(labels, 0.4, 9);
  std::set<int> all(s.train.begin(), s.train.end());
  for (int i : s.test) CHECK(all.insert(i).second);
  CHECK(all.size() == 28);
  CHECK_FALSE(all.count(4));
  CHECK_FALSE(all.count(17));
}

TEST_CASE("split_labeled errors") {
  CHECK_THROWS_AS(eval::split_labeled({0, 0, 1}, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(eval::split_labeled(balanced_labels(10, 2), 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(eval::split_labeled(balanced_labels(10, 2), 1.0, 0), std::invalid_argument);
}

TEST_CASE("linear_probe separates a margin-1 toy perfectly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 60;
  Mat x(n, 3);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    labels[static_cast<std::size_t>(i)] = y;
    x(i, 0) = (y == 1 ? 0.5 : -0.5) + (y == 1 ? 1 : -1) * std::abs(u(rng));
    x(i, 1) = u(rng);
    x(i, 2) = u(rng);
  }
  const auto s = eval::split_labeled(labels, 0.5, 2);
  const auto pred = eval::linear_probe(x, s.train, s.test, labels);
  REQUIRE(pred.size() == s.test.size());
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == labels[static_cast<std::size_t>(s.test[i])]);

  CHECK(eval::linear_probe(x, s.train, s.test, labels) == pred);
}

TEST_CASE("linear_probe on permuted labels sits at chance") {
  const int n = 300, classes = 3;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Mat x(n, 8);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 8; ++j) x(i, j) = g(rng);
  }
  double total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto labels = balanced_labels(n, classes);
    std::shuffle(labels.begin(), labels.end(), std::mt19937_64(seed + 100));
    const auto s = eval::split_labeled(labels, 0.5, seed);
    const auto pred = eval::linear_probe(x, s.train, s.test, labels);
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[static_cast<std::size_t>(s.test[i])];
    total += static_cast<double>(hits) / static_cast<double>(pred.size());
  }
  CHECK(std::abs(total / 10 - 1.0 / classes) <= 0.15);
}

TEST_CASE("f1_scores examples") {
  auto f = eval::f1_scores({0, 1, 2, 1}, {0, 1, 2, 1});
  CHECK(f.macro == 1.0);
  CHECK(f.micro == 1.0);

  f = eval::f1_scores({0, 1, 0, 1}, {0, 0, 1, 1});
  CHECK(f.macro == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.micro == doctest::Approx(0.5).epsilon(1e-12));

  f = eval::f1_scores({0, 0, 0, 0}, {0, 0, 1, 1});
  CHECK(f.micro == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.macro == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("micro F1 equals accuracy and F1 ignores label names") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> pred(50), truth(50);
    int hits = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      pred[i] = cls(rng);
      truth[i] = cls(rng);
      hits += pred[i] == truth[i];
    }
    const auto f = eval::f1_scores(pred, truth);
    CHECK(f.micro == doctest::Approx(hits / 50.0).epsilon(1e-12));
    const std::vector<int> map{2, 3, 0, 1};
    const auto g = eval::f1_scores(permuted(pred, map), permuted(truth, map));
    CHECK(g.macro == doctest::Approx(f.macro).epsilon(1e-12));
    CHECK(g.micro == doctest::Approx(f.micro).epsilon(1e-12));
  }
}

TEST_CASE("kmeans recovers two blobs and is deterministic") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.1);
  Mat x(40, 2);
  std::vector<int> truth(40);
  for (int i = 0; i < 40; ++i) {
    const int blob = i < 20 ? 0 : 1;
    truth[static_cast<std::size_t>(i)] = blob;
    x(i, 0) = (blob ? 5.0 : -5.0) + g(rng);
    x(i, 1) = g(rng);
  }
  const auto a = eval::kmeans(x, 2, 1);
  CHECK(eval::ari(a, truth) == doctest::Approx(1.0));
  CHECK(eval::kmeans(x, 2, 1) == a);
}

TEST_CASE("kmeans on identical points and argument errors") {
  const Mat x = Mat::Ones(6, 3);
  const auto a = eval::kmeans(x, 3, 0);
  REQUIRE(a.size() == 6);
  for (int v : a) CHECK((v >= 0 && v < 3));
  CHECK_THROWS_AS(eval::kmeans(x, 7, 0), std::invalid_argument);
  CHECK_THROWS_AS(eval::kmeans(x, 1, 0), std::invalid_argument);
}

TEST_CASE("nmi and ari examples") {
  const std::vector<int> labels{0, 1, 0, 1};
  CHECK(eval::nmi(labels, labels) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval::nmi({0, 0, 0, 0}, labels) == 0.0);
  CHECK(std::abs(eval::nmi({0, 0, 1, 1}, labels)) <= 1e-12);

  CHECK(eval::ari(labels, labels) == doctest::Approx(1.0).epsilon(1e-12));
  // Contingency table of ones: index 0, expected 2/3, max 2, so (0 - 2/3) / (2 - 2/3).
  CHECK(eval::ari({0, 0, 1, 1}, labels) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::abs(eval::ari({0, 0, 0, 0}, labels)) <= 1e-12);
}

TEST_CASE("nmi and ari agree with brute-force oracles and are relabeling-invariant") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> cls(0, 3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> a(40), b(40);
    for (std::size_t i = 0; i < 40; ++i) {
      a[i] = cls(rng);
      b[i] = trial % 3 == 0 ? a[i] : cls(rng);
    }
    CHECK(eval::ari(a, b) == doctest::Approx(brute_ari(a, b)).epsilon(1e-10));
    CHECK(eval::nmi(a, b) == doctest::Approx(brute_nmi(a, b)).epsilon(1e-10));
    const std::vector<int> map{3, 0, 2, 1};
    CHECK(eval::ari(permuted(a, map), b) == doctest::Approx(eval::ari(a, b)).epsilon(1e-12));
    CHECK(eval::nmi(permuted(a, map), b) == doctest::Approx(eval::nmi(a, b)).epsilon(1e-12));
    const double n = eval::nmi(a, b);
    CHECK(n >= -1e-12);
    CHECK(n <= 1.0 + 1e-12);
  }
}

TEST_CASE("roc_auc examples and monotone invariance") {
  CHECK(eval::roc_auc({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(eval::roc_auc({0.5, 0.5}, {1, 0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(eval::roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s(30), t(30);
  std::vector<int> y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    s[i] = u(rng);
    t[i] = std::exp(3.0 * s[i]) - 7.0;
    y[i] = static_cast<int>(i % 2);
  }
  CHECK(eval::roc_auc(t, y) == doctest::Approx(eval::roc_auc(s, y)).epsilon(1e-12));
}

TEST_CASE("score_links: perfect separation and random scores") {
  const auto perfect = eval::score_links({1.0, 1.0, 1.0, 0.0, 0.0, 0.0}, {1, 1, 1, 0, 0, 0});
  CHECK(perfect.auc == 1.0);
  CHECK(perfect.f1 == 1.0);

  double total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> s(200);
    std::vector<int> y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      s[i] = u(rng);
      y[i] = i < 100;
    }
    total += eval::score_links(s, y).auc;
  }
  CHECK(std::abs(total / 10 - 0.5) <= 0.1);
}

TEST_CASE("negative sampling avoids known edges and is seeded") {
  const std::vector<int> left{0, 1, 2}, right{3, 4, 5};
  const std::vector<std::pair<int, int>> known{{0, 3}, {1, 4}, {2, 5}};
  const auto neg = eval::sample_negative_pairs(4, left, right, known, 7);
  CHECK(neg.size() == 4);
  std::set<std::pair<int, int>> seen;
  for (const auto& p : neg) {
    CHECK(std::find(left.begin(), left.end(), p.first) != left.end());
    CHECK(std::find(right.begin(), right.end(), p.second) != right.end());
    CHECK(std::find(known.begin(), known.end(), p) == known.end());
    seen.insert(p);
  }
  CHECK(seen.size() == 4);
  CHECK(eval::sample_negative_pairs(4, left, right, known, 7) == neg);
  CHECK_THROWS(eval::sample_negative_pairs(7, left, right, known, 7));
}

TEST_CASE("link_predict_eval on embeddings that encode the edges") {
  // Left nodes 0..3 and right nodes 4..7; edge i -- i+4 only.
  Mat e = Mat::Constant(8, 4, -1.0);
  e.topRows(4).setZero();
  std::vector<std::pair<int, int>> positives;
  for (int i = 0; i < 4; ++i) {
    e(i, i) = 3.0;
    e(i + 4, i) = 3.0;
    positives.emplace_back(i, i + 4);
  }
  const auto s = eval::link_predict_eval(e, positives, {0, 1, 2, 3}, {4, 5, 6, 7}, positives, 3);
  CHECK(s.auc == 1.0);
  CHECK(s.f1 == 1.0);
}

TEST_CASE("silhouette matches a direct evaluation") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Mat x(25, 3);
  std::vector<int> labels(25);
  for (int i = 0; i < 25; ++i) {
    labels[static_cast<std::size_t>(i)] = i % 3;
    for (int j = 0; j < 3; ++j) x(i, j) = g(rng) + (i % 3) * 1.5;
  }
  CHECK(eval::silhouette(x, labels) == doctest::Approx(brute_silhouette(x, labels)).epsilon(1e-10));
}

TEST_CASE("summaries and the metrics TSV") {
  const auto s = eval::summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.stdev == doctest::Approx(1.0));
  CHECK(s.count == 3);

  fixtures::TempDir dir("eval");
  eval::write_metrics(dir / "m.tsv", {{"macro_f1", s}, {"nmi", eval::summarize({0.5})}});
  const auto text = fixtures::read_text(dir / "m.tsv");
  CHECK(text == "metric\tmean\tstdev\tseed_count\nmacro_f1\t2\t1\t3\nnmi\t0.5\t0\t1\n");
}
