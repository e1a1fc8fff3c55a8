#include "mhcl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mhcl/geometry.hpp"
#include "mhcl/sampler.hpp"

namespace mhcl {
namespace {

std::vector<TypeId> parse_target_types(const HeteroGraph& g, const std::string& text) {
  std::vector<TypeId> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = g.find_type(item);
    if (!t) throw ConfigError("unknown target type '" + item + "'");
    out.push_back(*t);
  }
  if (out.empty()) throw ConfigError("target_type is empty");
  return out;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PreparedBatch sample_batch(const HeteroGraph& g, const std::vector<NodeId>& targets, const TrainConfig& config) {
  SamplerOptions options;
  options.instance_cap = config.instance_cap;
  options.seed = config.seed;
  options.threads = config.threads;
  return prepare_batch(g, enumerate_instances(g, targets, config.max_length, options));
}

void prepare_node_classification(Experiment& ex, const HeteroGraph& g, const TrainConfig& config) {
  if (ex.target_types.size() != 1) throw ConfigError("node classification needs exactly one target type");
  if (!g.has_labels()) throw std::invalid_argument("node classification needs labels");
  ex.batch = sample_batch(g, g.nodes_of_type(ex.target_types[0]), config);

  ex.row_labels.resize(ex.batch.targets.size());
  for (std::size_t r = 0; r < ex.batch.targets.size(); ++r) {
    ex.row_labels[r] = g.label(ex.batch.targets[r]).value_or(-1);
    ex.classes = std::max(ex.classes, ex.row_labels[r] + 1);
  }
  if (ex.classes < 2) throw std::invalid_argument("node classification needs at least two classes");

  const auto split = eval::split_labeled(ex.row_labels, config.train_ratio, config.seed);
  ex.train_rows = split.train;
  ex.test_rows = split.test;
  std::vector<int> val_rows;
  if (config.val_fraction > 0.0) {
    // Validation rows are carved out of the training portion.
    const double want = config.val_fraction * static_cast<double>(split.train.size() + split.test.size());
    const double ratio = want / static_cast<double>(split.train.size());
    if (!(ratio < 1.0)) throw ConfigError("val_fraction leaves no training rows");
    std::vector<int> masked(ex.row_labels.size(), -1);
    for (int r : split.train) masked[static_cast<std::size_t>(r)] = ex.row_labels[static_cast<std::size_t>(r)];
    const auto inner = eval::split_labeled(masked, ratio, derive(config.seed, 1));
    val_rows = inner.train;
    ex.train_rows = inner.test;
    ex.val_rows = val_rows;
  }

  auto task_of = [&](const std::vector<int>& rows) {
    TaskLoss task;
    task.kind = TaskLoss::Kind::node_classification;
    task.rows = rows;
    for (int r : rows) task.labels.push_back(ex.row_labels[static_cast<std::size_t>(r)]);
    return task;
  };
  ex.train_task = task_of(ex.train_rows);
  if (!val_rows.empty()) ex.val_task = task_of(val_rows);
}

void prepare_link_prediction(Experiment& ex, const HeteroGraph& g, const TrainConfig& config) {
  if (ex.target_types.size() > 2) throw ConfigError("link prediction takes one or two target types");
  const TypeId left = ex.target_types.front();
  const TypeId right = ex.target_types.back();

  std::vector<std::pair<NodeId, NodeId>> positives;
  for (auto [u, v] : g.edges()) {
    const TypeId a = g.node_type(u);
    const TypeId b = g.node_type(v);
    if (a == left && b == right) positives.emplace_back(u, v);
    else if (a == right && b == left) positives.emplace_back(v, u);
  }
  if (positives.size() < 3) throw std::invalid_argument("too few edges between the link prediction types");
  std::mt19937_64 rng(derive(config.seed, 2));
  std::shuffle(positives.begin(), positives.end(), rng);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.link_test_fraction * static_cast<double>(positives.size()))));
  const auto n_val =
      static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(positives.size())));
  if (n_test + n_val >= positives.size()) throw std::invalid_argument("no training edges left");

  // Training graph: the input minus every held-out edge.
  std::set<std::pair<NodeId, NodeId>> held;
  for (std::size_t i = 0; i < n_test + n_val; ++i) {
    auto [u, v] = positives[i];
    held.insert({std::min(u, v), std::max(u, v)});
  }
  GraphData data;
  data.type_names = g.type_names();
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    data.node_names.push_back(g.node_name(v));
    data.node_types.push_back(g.node_type(v));
  }
  data.features = g.features();
  data.labels = g.raw_labels();
  for (const auto& e : g.edges()) {
    if (!held.count(e)) data.edges.push_back(e);
  }
  const HeteroGraph train_graph = HeteroGraph::build(std::move(data), HeteroGraph::Check::none);

  std::vector<NodeId> targets = g.nodes_of_type(left);
  if (right != left) {
    const auto more = g.nodes_of_type(right);
    targets.insert(targets.end(), more.begin(), more.end());
  }
  std::sort(targets.begin(), targets.end());
  ex.batch = sample_batch(train_graph, targets, config);

  auto row = [&](NodeId v) { return ex.batch.target_row(v); };
  for (NodeId v : g.nodes_of_type(left)) ex.left_rows.push_back(row(v));
  for (NodeId v : g.nodes_of_type(right)) ex.right_rows.push_back(row(v));
  auto is_target = [&](NodeId v) { return std::binary_search(targets.begin(), targets.end(), v); };
  for (auto [u, v] : g.edges()) {
    if (is_target(u) && is_target(v)) ex.known_pairs.emplace_back(row(u), row(v));
  }
  for (std::size_t i = 0; i < n_test; ++i) ex.test_pairs.emplace_back(row(positives[i].first), row(positives[i].second));

  auto task_of = [&](std::size_t begin, std::size_t end, std::uint64_t salt) {
    TaskLoss task;
    task.kind = TaskLoss::Kind::link_prediction;
    for (std::size_t i = begin; i < end; ++i) task.pairs.push_back({row(positives[i].first), row(positives[i].second), 1});
    const auto negatives =
        eval::sample_negative_pairs(end - begin, ex.left_rows, ex.right_rows, ex.known_pairs, derive(config.seed, salt));
    for (auto [u, v] : negatives) task.pairs.push_back({u, v, 0});
    return task;
  };
  ex.train_task = task_of(n_test + n_val, positives.size(), 3);
  if (n_val > 0) ex.val_task = task_of(n_test, n_test + n_val, 4);
}

}  // namespace

Experiment prepare_experiment(const HeteroGraph& g, const TrainConfig& config) {
  config.validate();
  Experiment ex;
  ex.task = config.task;
  ex.target_types = parse_target_types(g, config.target_type);
  if (config.task == Task::node_classification) {
    prepare_node_classification(ex, g, config);
  } else {
    prepare_link_prediction(ex, g, config);
  }
  if (ex.batch.metapaths.empty()) throw std::invalid_argument("no metapath instances for the target nodes");
  return ex;
}

ModelDims experiment_dims(const Experiment& ex, const TrainConfig& config, int feature_dim) {
  return dims_for(config, ex.batch, feature_dim, ex.classes);
}

EmbeddingBundle embed(const Experiment& ex, const ModelParams& params, const TrainConfig& config) {
  return forward(ex.batch, params, config.hyper(), TaskLoss{}, ForwardOptions{}).bundle;
}

Mat tangent_embeddings(const EmbeddingBundle& bundle) {
  Mat out(bundle.z.rows(), bundle.z.cols());
  for (Eigen::Index r = 0; r < bundle.z.rows(); ++r) {
    out.row(r) = geometry::log_map_0(geometry::PoincarePoint{bundle.z.row(r).transpose(), bundle.c}).transpose();
  }
  return out;
}

double metapath_silhouette(const EmbeddingBundle& bundle) {
  Eigen::Index total = 0;
  for (const auto& mp : bundle.metapaths) total += mp.aligned.rows();
  if (total == 0) return 0.0;
  Mat points(total, bundle.metapaths.front().aligned.cols());
  std::vector<int> labels;
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < bundle.metapaths.size(); ++k) {
    const auto& a = bundle.metapaths[k].aligned;
    for (Eigen::Index i = 0; i < a.rows(); ++i, ++r) {
      points.row(r) = geometry::log_map_0(geometry::PoincarePoint{a.row(i).transpose(), bundle.c}).transpose();
      labels.push_back(static_cast<int>(k));
    }
  }
  return eval::silhouette(points, labels);
}

EvalReport evaluate(const Experiment& ex, const EmbeddingBundle& bundle, std::uint64_t seed) {
  EvalReport report;
  report.silhouette = metapath_silhouette(bundle);
  if (ex.task == Task::node_classification) {
    const Mat emb = tangent_embeddings(bundle);
    // The probe sees every non-test label.
    std::vector<int> probe_rows = ex.train_rows;
    probe_rows.insert(probe_rows.end(), ex.val_rows.begin(), ex.val_rows.end());
    std::sort(probe_rows.begin(), probe_rows.end());
    const auto pred = eval::linear_probe(emb, probe_rows, ex.test_rows, ex.row_labels);
    std::vector<int> truth;
    for (int r : ex.test_rows) truth.push_back(ex.row_labels[static_cast<std::size_t>(r)]);
    const auto f1 = eval::f1_scores(pred, truth);
    report.macro_f1 = f1.macro;
    report.micro_f1 = f1.micro;

    std::vector<int> labeled;
    std::vector<int> labels;
    for (std::size_t r = 0; r < ex.row_labels.size(); ++r) {
      if (ex.row_labels[r] >= 0) {
        labeled.push_back(static_cast<int>(r));
        labels.push_back(ex.row_labels[r]);
      }
    }
    Mat subset(static_cast<Eigen::Index>(labeled.size()), emb.cols());
    for (std::size_t i = 0; i < labeled.size(); ++i) subset.row(static_cast<Eigen::Index>(i)) = emb.row(labeled[i]);
    const auto clusters = eval::kmeans(subset, ex.classes, seed);
    report.nmi = eval::nmi(clusters, labels);
    report.ari = eval::ari(clusters, labels);
  } else {
    const auto links =
        eval::link_predict_eval(bundle.logits, ex.test_pairs, ex.left_rows, ex.right_rows, ex.known_pairs, seed);
    report.auc = links.auc;
    report.link_f1 = links.f1;
  }
  return report;
}

}  // namespace mhcl

namespace mhcl {

TrainedRun train_on_graph(const HeteroGraph& g, const TrainConfig& config, const EpochHook& hook) {
  TrainedRun run;
  run.experiment = prepare_experiment(g, config);
  const auto dims = experiment_dims(run.experiment, config, static_cast<int>(g.feature_dim()));
  run.result = train(run.experiment.batch, run.experiment.train_task, run.experiment.val_task, config, dims, hook);
  return run;
}

std::vector<EpochTiming> bench_epochs(const HeteroGraph& g, TrainConfig config, const std::vector<int>& lengths,
                                      int epochs) {
  // One extra leading epoch absorbs allocator and cache warm-up and is not reported.
  config.epochs = epochs + 1;
  config.patience = epochs + 2;
  config.log_wall_time = true;
  std::vector<EpochTiming> out;
  for (int l : lengths) {
    config.max_length = l;
    const auto run = train_on_graph(g, config);
    EpochTiming timing{l, run.experiment.batch.instance_count, {}};
    for (std::size_t e = 1; e < run.result.log.size(); ++e) timing.seconds.push_back(run.result.log[e].seconds);
    out.push_back(std::move(timing));
  }
  return out;
}

}  // namespace mhcl
