#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "mhcl/model.hpp"

namespace mhcl {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Task { node_classification, link_prediction };
enum class CurvatureMode { learned, euclidean };

/// Every knob of a training run. Defaults follow the published setup where it
/// gives one.
struct TrainConfig {
  std::string nodes;  // input graph files
  std::string edges;
  Task task = Task::node_classification;
  std::string target_type = "A";  // comma-separated list for link prediction

  double learning_rate = 1e-4;
  double weight_decay = 1e-3;
  int epochs = 100;
  int patience = 10;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  double lambda = 0.5;
  double tau = 0.5;
  ContrastiveForm contrastive_form = ContrastiveForm::info_nce;
  CurvatureMode curvature_mode = CurvatureMode::learned;

  int heads = 8;
  int metapath_dim = 128;
  int node_dim = 64;
  int output_dim = 0;  // 0: number of classes (node classification) or node_dim (links)
  int max_length = 3;
  std::size_t instance_cap = 0;

  double train_ratio = 0.4;
  double val_fraction = 0.1;
  double link_test_fraction = 0.2;

  bool log_wall_time = false;
  unsigned threads = 1;

  Hyper hyper() const { return Hyper{tau, lambda, contrastive_form}; }
  void validate() const;
};

/// Flat key/value view with every default resolved. Keys sort alphabetically.
std::map<std::string, std::string> to_key_values(const TrainConfig& config);
/// Applies key/values over `base`; unknown keys or malformed values throw ConfigError.
TrainConfig apply_key_values(TrainConfig base, const std::map<std::string, std::string>& kv);

/// Reads `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);
void write_key_value_file(const std::filesystem::path& path, const std::map<std::string, std::string>& kv);

std::string to_string(Task task);
std::string to_string(CurvatureMode mode);
std::string to_string(ContrastiveForm form);

}  // namespace mhcl
