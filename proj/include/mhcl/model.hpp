#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mhcl/geometry.hpp"
#include "mhcl/hetgraph.hpp"
#include "mhcl/sampler.hpp"

namespace mhcl {

using Mat = Eigen::MatrixXd;
using geometry::PoincarePoint;
using geometry::Vector;

struct ModelDims {
  int feature_dim = 0;      // n
  int metapath_dim = 128;   // d
  int node_dim = 64;        // d'
  int output_dim = 3;       // d_o
  int heads = 8;            // K

  int head_dim() const { return metapath_dim / heads; }
  void validate() const;
};

enum class ContrastiveForm { info_nce, paper_literal };

struct Hyper {
  double tau = 0.5;
  double lambda = 0.5;
  ContrastiveForm contrastive_form = ContrastiveForm::info_nce;
};

struct HeadParams {
  Mat w1;  // (d/K) x n
  Mat b1;  // 1 x (d/K)
  Mat a;   // (d/K) x 1
};

struct MetapathParams {
  Mat theta;  // 1x1, c_phi = softplus(theta)
  Mat w_t;    // n x n
  std::vector<HeadParams> heads;
};

enum class ParamKind { weight, bias, attention, curvature };

/// All trainable tensors, keyed by metapath name ("A-B-A").
struct ModelParams {
  ModelDims dims;
  std::map<std::string, MetapathParams> metapaths;
  Mat w2;       // d x d, shared alignment
  Mat theta;    // 1x1, unified curvature
  Mat w3;       // d' x d
  Mat b3;       // 1 x d'
  Mat b;        // d' x 1
  Mat w_o;      // d_o x d'

  double metapath_curvature(const std::string& name) const;
  double unified_curvature() const;

  /// Visits every tensor in a fixed order (metapaths sorted by name).
  void for_each(const std::function<void(const std::string&, Mat&, ParamKind)>& fn);
  void for_each(const std::function<void(const std::string&, const Mat&, ParamKind)>& fn) const;
  std::size_t scalar_count() const;
};

// ---------------------------------------------------------------------------
// Per-node operations on explicit points. These mirror the batched forward
// one node at a time.

PoincarePoint encode_instance(const MetapathInstance& instance, const Mat& features,
                              const MetapathParams& mp);
PoincarePoint instance_embed(const PoincarePoint& x, const HeadParams& head);

struct IntraAttention {
  PoincarePoint embedding;
  std::vector<double> weights;
};
/// Throws std::invalid_argument when `instances` is empty.
IntraAttention intra_attention(const std::vector<PoincarePoint>& instances, const HeadParams& head);
PoincarePoint multihead_concat(const std::vector<PoincarePoint>& heads, int expected_heads);
PoincarePoint align_to_unified(const PoincarePoint& h, const ModelParams& params);
PoincarePoint positive_transform(const PoincarePoint& h, double unified_c);

/// Contrastive loss of one node: `aligned[i]` and `positives[i]` belong to the
/// i-th available metapath. Fewer than two metapaths contribute 0.
double contrastive_loss(const std::vector<PoincarePoint>& aligned,
                        const std::vector<PoincarePoint>& positives, const Hyper& hyper);

struct InterAttention {
  PoincarePoint z;
  std::vector<double> weights;
};
InterAttention inter_attention(const std::vector<PoincarePoint>& aligned, const ModelParams& params);
Vector readout(const PoincarePoint& z, const ModelParams& params);

double classification_loss(const std::vector<Vector>& logits, const std::vector<int>& labels, int classes);
struct LinkPair {
  int u;  // row into the logits list
  int v;
  int y;
};
double link_loss(const std::vector<LinkPair>& pairs, const std::vector<Vector>& logits);
double total_loss(double task_loss, double hyp_loss, double lambda);

}  // namespace mhcl
