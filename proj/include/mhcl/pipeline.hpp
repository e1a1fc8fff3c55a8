#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mhcl/config.hpp"
#include "mhcl/eval.hpp"
#include "mhcl/forward.hpp"
#include "mhcl/hetgraph.hpp"
#include "mhcl/trainer.hpp"

namespace mhcl {

/// Everything a run needs besides the parameters: sampled instances, task
/// splits and the held-out evaluation data.
struct Experiment {
  Task task = Task::node_classification;
  std::vector<TypeId> target_types;
  PreparedBatch batch;
  int classes = 0;
  TaskLoss train_task;
  TaskLoss val_task;

  // Node classification: target rows and their labels.
  std::vector<int> train_rows;
  std::vector<int> val_rows;
  std::vector<int> test_rows;
  std::vector<int> row_labels;  // -1 when unlabeled

  // Link prediction: held-out positive pairs (target rows) and candidate sets.
  std::vector<std::pair<int, int>> test_pairs;
  std::vector<int> left_rows;
  std::vector<int> right_rows;
  std::vector<std::pair<int, int>> known_pairs;  // every edge of the input graph, in target rows
};

/// Splits labels (or edges) and samples metapath instances. Test edges are
/// removed from the graph before sampling.
Experiment prepare_experiment(const HeteroGraph& g, const TrainConfig& config);

ModelDims experiment_dims(const Experiment& ex, const TrainConfig& config, int feature_dim);

/// Inference pass without dropout.
EmbeddingBundle embed(const Experiment& ex, const ModelParams& params, const TrainConfig& config);

/// Row-wise log map of the node embeddings (tangent coordinates).
Mat tangent_embeddings(const EmbeddingBundle& bundle);

struct EvalReport {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  double auc = 0.0;
  double link_f1 = 0.0;
  double silhouette = 0.0;
};

/// Downstream metrics for one seed. The probe split is the experiment's own.
EvalReport evaluate(const Experiment& ex, const EmbeddingBundle& bundle, std::uint64_t seed);

/// Silhouette of the aligned per-metapath embeddings in tangent coordinates,
/// with metapath identity as the cluster label.
double metapath_silhouette(const EmbeddingBundle& bundle);

struct TrainedRun {
  Experiment experiment;
  TrainResult result;
};

/// prepare_experiment followed by train.
TrainedRun train_on_graph(const HeteroGraph& g, const TrainConfig& config, const EpochHook& hook = {});

struct EpochTiming {
  int max_length = 0;
  std::size_t instances = 0;
  std::vector<double> seconds;  // one entry per measured epoch
};

/// Wall time of full training epochs for each maximum metapath length, after
/// one unreported warm-up epoch.
std::vector<EpochTiming> bench_epochs(const HeteroGraph& g, TrainConfig config, const std::vector<int>& lengths,
                                      int epochs);

}  // namespace mhcl
