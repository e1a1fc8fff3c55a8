#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mhcl/model.hpp"

namespace mhcl {

/// Instances of one metapath across all targets, ready for batched evaluation.
struct PreparedMetapath {
  std::string name;
  Mat mean_features;              // one row per instance
  std::vector<int> group;         // instance -> group (targets with >= 1 instance)
  std::vector<int> group_target;  // group -> target row
};

struct PreparedBatch {
  std::vector<NodeId> targets;  // target row -> node id
  std::vector<PreparedMetapath> metapaths;  // sorted by name
  std::size_t instance_count = 0;

  std::vector<std::string> metapath_names() const;
  int target_row(NodeId v) const;
};

PreparedBatch prepare_batch(const HeteroGraph& g, const SampledInstances& sampled);

struct TaskLoss;

/// Sub-batch holding only the targets `task` refers to, with the task's rows
/// renumbered to match.
std::pair<PreparedBatch, TaskLoss> restrict_to_task(const PreparedBatch& batch, const TaskLoss& task);

struct TaskLoss {
  enum class Kind { none, node_classification, link_prediction };
  Kind kind = Kind::none;
  std::vector<int> rows;    // node classification: target rows
  std::vector<int> labels;  // parallel to rows
  std::vector<LinkPair> pairs;  // link prediction, over target rows
};

struct ForwardOptions {
  bool training = false;
  double dropout = 0.5;
  std::uint64_t dropout_seed = 0;
  bool compute_grad = false;
  /// Curvature parameters enter as constants (no gradient).
  bool freeze_curvature = false;
};

struct MetapathEmbeddings {
  std::string name;
  double c = 1.0;
  std::vector<int> target_rows;  // group -> target row
  Mat h;          // per-metapath embedding, in the ball of curvature c
  Mat aligned;    // in the unified ball
  Mat positive;   // positive sample in the unified ball
};

struct EmbeddingBundle {
  std::vector<NodeId> targets;
  double c = 1.0;
  std::vector<MetapathEmbeddings> metapaths;
  Mat z;       // target row -> node embedding (unified ball, d')
  Mat logits;  // target row -> readout
};

struct ForwardResult {
  EmbeddingBundle bundle;
  double task_loss = 0.0;
  double hyp_loss = 0.0;
  double total_loss = 0.0;
  std::optional<ModelParams> grad;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full-batch forward pass (and optionally the reverse pass) over every target.
ForwardResult forward(const PreparedBatch& batch, const ModelParams& params, const Hyper& hyper,
                      const TaskLoss& task, const ForwardOptions& options);

}  // namespace mhcl
