#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mhcl/config.hpp"
#include "mhcl/forward.hpp"
#include "mhcl/model.hpp"

namespace mhcl {

/// Glorot-uniform weights, zero biases, every curvature at `initial_c`.
ModelParams init_params(const ModelDims& dims, const std::vector<std::string>& metapaths,
                        std::uint64_t seed, double initial_c = 1.0);

struct AdamWOptions {
  double learning_rate = 1e-4;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool freeze_curvature = false;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
};

AdamState make_adam_state(const ModelParams& params);

/// Decoupled weight decay; biases, attention vectors and curvatures are not decayed.
void adamw_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamWOptions& options);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double task_loss = 0.0;
  double hyp_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;  // best-validation checkpoint
  std::vector<EpochRecord> log;
  int best_epoch = 0;
};

ModelDims dims_for(const TrainConfig& config, const PreparedBatch& batch, int feature_dim, int classes);

/// Called after each epoch with the current (not necessarily best) parameters.
using EpochHook = std::function<void(const EpochRecord&, const ModelParams&)>;

/// Full-batch training with early stopping on validation loss.
TrainResult train(const PreparedBatch& batch, const TaskLoss& train_task, const TaskLoss& val_task,
                  const TrainConfig& config, const ModelDims& dims, const EpochHook& hook = {});

/// Total loss gradient at `params` without dropout.
ModelParams loss_gradient(const PreparedBatch& batch, const ModelParams& params, const Hyper& hyper,
                          const TaskLoss& task, bool freeze_curvature = false);

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log);

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params, const TrainConfig& config);
struct Checkpoint {
  ModelParams params;
  TrainConfig config;
};
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace mhcl
