#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mhcl::eval {

using Mat = Eigen::MatrixXd;

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Stratified split of the indices of `labels` (entries < 0 are skipped).
/// Each class contributes round(ratio * size) members to train, clamped to
/// leave at least one on each side.
Split split_labeled(const std::vector<int>& labels, double train_ratio, std::uint64_t seed);

/// Multinomial logistic probe: standardized inputs, zero init, 500 full-batch
/// gradient steps at rate 0.1 with L2 1e-4. `rows` of `embeddings` are samples.
std::vector<int> linear_probe(const Mat& embeddings, const std::vector<int>& train, const std::vector<int>& test,
                              const std::vector<int>& labels);

struct F1 {
  double macro = 0.0;
  double micro = 0.0;
};
F1 f1_scores(const std::vector<int>& pred, const std::vector<int>& truth);

/// k-means++ seeding then Lloyd iterations (max 300).
std::vector<int> kmeans(const Mat& embeddings, int k, std::uint64_t seed);

double nmi(const std::vector<int>& assignments, const std::vector<int>& labels);
double ari(const std::vector<int>& assignments, const std::vector<int>& labels);

/// Rank-statistic ROC-AUC; tied scores count half.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct LinkScores {
  double auc = 0.0;
  double f1 = 0.0;
};
/// Binary F1 of `scores >= 0.5` against `labels`, plus AUC.
LinkScores score_links(const std::vector<double>& scores, const std::vector<int>& labels);

/// Samples |positives| negatives uniformly among unconnected (u in left, v in
/// right) pairs, scores every pair with sigmoid(<e_u, e_v>).
LinkScores link_predict_eval(const Mat& embeddings, const std::vector<std::pair<int, int>>& positives,
                             const std::vector<int>& left, const std::vector<int>& right,
                             const std::vector<std::pair<int, int>>& known_edges, std::uint64_t seed);

/// Uniform negative pairs (u in left, v in right) absent from `known_edges`.
std::vector<std::pair<int, int>> sample_negative_pairs(std::size_t count, const std::vector<int>& left,
                                                       const std::vector<int>& right,
                                                       const std::vector<std::pair<int, int>>& known_edges,
                                                       std::uint64_t seed);

/// Mean silhouette coefficient under Euclidean distance.
double silhouette(const Mat& points, const std::vector<int>& labels);

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;
  std::size_t count = 0;
};
Summary summarize(const std::vector<double>& values);

/// `metric<TAB>mean<TAB>stdev<TAB>seed_count` rows.
void write_metrics(const std::filesystem::path& path, const std::map<std::string, Summary>& metrics);

}  // namespace mhcl::eval
