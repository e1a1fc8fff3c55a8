#include "mhcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace mhcl::eval {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

std::map<std::pair<int, int>, double> contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("length mismatch");
  std::map<std::pair<int, int>, double> table;
  for (std::size_t i = 0; i < a.size(); ++i) table[{a[i], b[i]}] += 1.0;
  return table;
}

std::map<int, double> counts(const std::vector<int>& a) {
  std::map<int, double> c;
  for (int x : a) c[x] += 1.0;
  return c;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

Split split_labeled(const std::vector<int>& labels, double train_ratio, std::uint64_t seed) {
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw std::invalid_argument("train ratio must lie in (0, 1)");
  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) by_class[labels[i]].push_back(static_cast<int>(i));
  }
  std::size_t total = 0;
  for (const auto& [cls, members] : by_class) {
    if (members.size() < 2) {
      throw std::invalid_argument("class " + std::to_string(cls) + " has fewer than 2 members");
    }
    total += members.size();
  }

  // Largest-remainder allocation of round(ratio * total) train slots.
  const auto want = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(total)));
  std::vector<std::pair<double, int>> remainders;
  std::map<int, std::size_t> quota;
  std::size_t given = 0;
  for (const auto& [cls, members] : by_class) {
    const double exact = train_ratio * static_cast<double>(members.size());
    quota[cls] = static_cast<std::size_t>(std::floor(exact));
    given += quota[cls];
    remainders.emplace_back(-(exact - std::floor(exact)), cls);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; given < want && i < remainders.size(); ++i, ++given) ++quota[remainders[i].second];

  std::mt19937_64 rng(seed);
  Split split;
  for (auto& [cls, members] : by_class) {
    const std::size_t q = std::clamp<std::size_t>(quota[cls], 1, members.size() - 1);
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q));
    split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(q), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<int> linear_probe(const Mat& embeddings, const std::vector<int>& train, const std::vector<int>& test,
                              const std::vector<int>& labels) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  int classes = 0;
  for (int i : train) classes = std::max(classes, labels.at(static_cast<std::size_t>(i)) + 1);
  const Eigen::Index dim = embeddings.cols();

  Mat xtr(static_cast<Eigen::Index>(train.size()), dim);
  for (std::size_t i = 0; i < train.size(); ++i) xtr.row(static_cast<Eigen::Index>(i)) = embeddings.row(train[i]);
  const Eigen::RowVectorXd mean = xtr.colwise().mean();
  Eigen::RowVectorXd scale = ((xtr.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (!(scale(j) > 1e-12)) scale(j) = 1.0;
  }
  auto standardize = [&](const Mat& x) -> Mat { return (x.rowwise() - mean).array().rowwise() / scale.array(); };
  Mat z = standardize(xtr);
  // Bound the curvature of the loss so the fixed step size stays stable.
  const Mat cov = z.transpose() * z / static_cast<double>(z.rows());
  const double top = dim > 0 ? Eigen::SelfAdjointEigenSolver<Mat>(cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff() : 1.0;
  const double shrink = 1.0 / std::sqrt(std::max(1.0, top));
  z *= shrink;

  Mat onehot = Mat::Zero(z.rows(), classes);
  for (std::size_t i = 0; i < train.size(); ++i) onehot(static_cast<Eigen::Index>(i), labels[static_cast<std::size_t>(train[i])]) = 1.0;

  Mat w = Mat::Zero(dim, classes);
  Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(classes);
  const double n = static_cast<double>(z.rows());
  for (int it = 0; it < 500; ++it) {
    Mat logits = (z * w).rowwise() + bias;
    const Eigen::VectorXd mx = logits.rowwise().maxCoeff();
    Mat p = (logits.colwise() - mx).array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    const Mat diff = p - onehot;
    const Mat gw = z.transpose() * diff / n + 1e-4 * w;
    const Eigen::RowVectorXd gb = diff.colwise().sum() / n;
    w -= 0.1 * gw;
    bias -= 0.1 * gb;
  }

  Mat xte(static_cast<Eigen::Index>(test.size()), dim);
  for (std::size_t i = 0; i < test.size(); ++i) xte.row(static_cast<Eigen::Index>(i)) = embeddings.row(test[i]);
  const Mat logits = ((standardize(xte) * shrink) * w).rowwise() + bias;
  std::vector<int> pred(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    Eigen::Index best = 0;
    logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    pred[i] = static_cast<int>(best);
  }
  return pred;
}

F1 f1_scores(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("length mismatch");
  if (pred.empty()) return {};
  std::set<int> classes(pred.begin(), pred.end());
  classes.insert(truth.begin(), truth.end());
  double macro = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  for (int c : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] == c && truth[i] == c) tp += 1;
      if (pred[i] == c && truth[i] != c) fp += 1;
      if (pred[i] != c && truth[i] == c) fn += 1;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    macro += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return {macro / static_cast<double>(classes.size()), static_cast<double>(correct) / static_cast<double>(pred.size())};
}

std::vector<int> kmeans(const Mat& x, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  const auto n = x.rows();
  if (k > n) throw std::invalid_argument("k exceeds the number of points");
  std::mt19937_64 rng(seed);

  Mat centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double r = uniform01(rng) * total;
      for (pick = 0; pick < n - 1; ++pick) {
        r -= d2(pick);
        if (r < 0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n)));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    Eigen::VectorXd own(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      own(i) = best_d;
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    std::vector<int> size(static_cast<std::size_t>(k), 0);
    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      centers.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      ++size[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (size[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) /= size[static_cast<std::size_t>(c)];
      } else {
        // Re-seed an empty cluster at the point farthest from its centroid.
        Eigen::Index far = 0;
        own.maxCoeff(&far);
        centers.row(c) = x.row(far);
        own(far) = -1.0;
      }
    }
    if (!changed && iter > 0) break;
  }
  return assign;
}

double nmi(const std::vector<int>& a, const std::vector<int>& l) {
  const auto table = contingency(a, l);
  const auto ca = counts(a);
  const auto cl = counts(l);
  const double n = static_cast<double>(a.size());
  if (n == 0) return 0.0;
  auto entropy = [n](const std::map<int, double>& c) {
    double h = 0.0;
    for (const auto& [k, v] : c) h -= (v / n) * std::log(v / n);
    return h;
  };
  const double ha = entropy(ca);
  const double hl = entropy(cl);
  if (ha <= 0.0 || hl <= 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, v] : table) mi += (v / n) * std::log(v * n / (ca.at(key.first) * cl.at(key.second)));
  return std::clamp(mi / std::sqrt(ha * hl), 0.0, 1.0);
}

double ari(const std::vector<int>& a, const std::vector<int>& l) {
  const auto table = contingency(a, l);
  const double n = static_cast<double>(a.size());
  double index = 0.0, sum_a = 0.0, sum_l = 0.0;
  for (const auto& [key, v] : table) index += comb2(v);
  for (const auto& [k, v] : counts(a)) sum_a += comb2(v);
  for (const auto& [k, v] : counts(l)) sum_l += comb2(v);
  const double expected = sum_a * sum_l / comb2(n);
  const double max_index = 0.5 * (sum_a + sum_l);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });
  // Average ranks over ties (Mann-Whitney U).
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  double pos = 0, neg = 0, rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos += 1;
      rank_sum += rank[i];
    } else {
      neg += 1;
    }
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUC needs both classes");
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

LinkScores score_links(const std::vector<double>& scores, const std::vector<int>& labels) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= 0.5;
    if (predicted && labels[i] == 1) tp += 1;
    if (predicted && labels[i] != 1) fp += 1;
    if (!predicted && labels[i] == 1) fn += 1;
  }
  const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  return {roc_auc(scores, labels), f1};
}

std::vector<std::pair<int, int>> sample_negative_pairs(std::size_t count, const std::vector<int>& left,
                                                       const std::vector<int>& right,
                                                       const std::vector<std::pair<int, int>>& known_edges,
                                                       std::uint64_t seed) {
  std::set<std::pair<int, int>> blocked;
  for (auto [u, v] : known_edges) {
    blocked.insert({u, v});
    blocked.insert({v, u});
  }
  std::size_t available = 0;
  for (int u : left) {
    for (int v : right) available += (u != v && !blocked.count({u, v}));
  }
  if (available < count) {
    throw std::invalid_argument("only " + std::to_string(available) + " unconnected pairs for " +
                                std::to_string(count) + " negatives");
  }
  std::mt19937_64 rng(seed);
  std::set<std::pair<int, int>> chosen;
  std::vector<std::pair<int, int>> out;
  while (out.size() < count) {
    const int u = left[uniform_index(rng, left.size())];
    const int v = right[uniform_index(rng, right.size())];
    if (u == v || blocked.count({u, v}) || chosen.count({u, v})) continue;
    chosen.insert({u, v});
    out.emplace_back(u, v);
  }
  return out;
}

LinkScores link_predict_eval(const Mat& embeddings, const std::vector<std::pair<int, int>>& positives,
                             const std::vector<int>& left, const std::vector<int>& right,
                             const std::vector<std::pair<int, int>>& known_edges, std::uint64_t seed) {
  if (positives.empty()) throw std::invalid_argument("no positive pairs");
  const auto negatives = sample_negative_pairs(positives.size(), left, right, known_edges, seed);
  std::vector<double> scores;
  std::vector<int> labels;
  auto score = [&](int u, int v) {
    const double s = embeddings.row(u).dot(embeddings.row(v));
    return s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
  };
  for (auto [u, v] : positives) {
    scores.push_back(score(u, v));
    labels.push_back(1);
  }
  for (auto [u, v] : negatives) {
    scores.push_back(score(u, v));
    labels.push_back(0);
  }
  return score_links(scores, labels);
}

double silhouette(const Mat& points, const std::vector<int>& labels) {
  const auto n = points.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw std::invalid_argument("length mismatch");
  const auto sizes = counts(labels);
  if (sizes.size() < 2) return 0.0;
  const Eigen::VectorXd sq = points.rowwise().squaredNorm();
  const Mat gram = points * points.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::map<int, double> sum;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[static_cast<std::size_t>(j)]] += std::sqrt(std::max(0.0, sq(i) + sq(j) - 2.0 * gram(i, j)));
    }
    const int own = labels[static_cast<std::size_t>(i)];
    const double own_size = sizes.at(own);
    if (own_size <= 1) continue;
    const double a = sum[own] / (own_size - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [cls, size] : sizes) {
      if (cls != own) b = std::min(b, sum[cls] / size);
    }
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void write_metrics(const std::filesystem::path& path, const std::map<std::string, Summary>& metrics) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "metric\tmean\tstdev\tseed_count\n";
  for (const auto& [name, s] : metrics) out << name << '\t' << s.mean << '\t' << s.stdev << '\t' << s.count << '\n';
}

}  // namespace mhcl::eval
