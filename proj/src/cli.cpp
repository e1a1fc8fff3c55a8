#include "mhcl/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "mhcl/analysis.hpp"
#include "mhcl/config.hpp"
#include "mhcl/eval.hpp"
#include "mhcl/hetgraph.hpp"
#include "mhcl/pipeline.hpp"
#include "mhcl/sampler.hpp"
#include "mhcl/synth.hpp"
#include "mhcl/trainer.hpp"

namespace mhcl::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require_readable(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is required");
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + what + " file '" + path + "'");
}

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

fs::path make_out_dir(const std::string& out) {
  fs::create_directories(out);
  return fs::path(out);
}

void write_manifest(const fs::path& dir, const std::string& command, const std::map<std::string, std::string>& kv) {
  std::ofstream out(dir / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << "# mhcl " << command << "\n";
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw UsageError("bad integer list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

/// Options shared by every subcommand that builds a TrainConfig: `--config`
/// plus one flag per config key.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file");
    for (const auto& [key, value] : to_key_values(TrainConfig{})) {
      options[key] = app->add_option("--" + key, values[key], "config key '" + key + "' (default " + value + ")");
    }
  }

  TrainConfig resolve() const {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) {
      require_readable(config_path, "config");
      kv = read_key_value_file(config_path);
    }
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) kv[key] = values.at(key);
    }
    TrainConfig config = apply_key_values(TrainConfig{}, kv);
    config.validate();
    return config;
  }
};

HeteroGraph load_input(const TrainConfig& config) {
  require_readable(config.nodes, "nodes");
  require_readable(config.edges, "edges");
  return load_graph(config.nodes, config.edges);
}

Checkpoint load_checkpoint(const std::string& path) {
  require_readable(path, "checkpoint");
  return read_checkpoint(path);
}

int cmd_ingest(const std::string& nodes, const std::string& edges, const std::string& out_dir, std::ostream& out) {
  require_readable(nodes, "nodes");
  require_readable(edges, "edges");
  const auto g = load_graph(nodes, edges);
  std::ostringstream summary;
  summary << "nodes\t" << g.num_nodes() << "\n"
          << "edges\t" << g.num_edges() << "\n"
          << "feature_dim\t" << g.feature_dim() << "\n";
  std::size_t labeled = 0;
  for (NodeId v = 0; v < g.num_nodes(); ++v) labeled += g.label(v).has_value();
  summary << "labeled\t" << labeled << "\n";
  for (TypeId t = 0; t < static_cast<TypeId>(g.num_node_types()); ++t) {
    summary << "type:" << g.type_name(t) << "\t" << g.nodes_of_type(t).size() << "\n";
  }
  for (std::size_t l = 0; l < g.link_types().size(); ++l) {
    const auto [a, b] = g.link_types()[l];
    std::size_t count = 0;
    for (auto [u, v] : g.edges()) {
      const TypeId x = g.node_type(u), y = g.node_type(v);
      count += (x == a && y == b) || (x == b && y == a);
    }
    summary << "link:" << g.link_type_name(l) << "\t" << count << "\n";
  }
  out << summary.str();
  const auto dir = make_out_dir(out_dir);
  std::ofstream(dir / "summary.tsv") << summary.str();
  write_manifest(dir, "ingest", {{"nodes", nodes}, {"edges", edges}});
  return 0;
}

int cmd_sample(const TrainConfig& config, const std::string& out_dir, std::ostream& out) {
  const auto g = load_input(config);
  std::vector<NodeId> targets;
  std::stringstream ss(config.target_type);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = g.find_type(item);
    if (!t) throw ConfigError("unknown target type '" + item + "'");
    const auto more = g.nodes_of_type(*t);
    targets.insert(targets.end(), more.begin(), more.end());
  }
  SamplerOptions options{config.instance_cap, config.seed, config.threads};
  const auto sampled = enumerate_instances(g, targets, config.max_length, options);
  std::ostringstream table;
  table << "metapath\tlength\tinstances\n";
  for (const auto& [metapath, count] : instance_counts(sampled)) {
    table << g.metapath_name(metapath) << '\t' << metapath.length() << '\t' << count << '\n';
  }
  out << table.str();
  const auto dir = make_out_dir(out_dir);
  std::ofstream(dir / "instances.tsv") << table.str();
  write_manifest(dir, "sample", to_key_values(config));
  return 0;
}

int cmd_train(const TrainConfig& config, const std::string& out_dir, std::ostream& out) {
  const auto g = load_input(config);
  const auto dir = make_out_dir(out_dir);
  write_manifest(dir, "train", to_key_values(config));
  const auto run = train_on_graph(g, config);
  write_epoch_log(dir / "epoch_log.tsv", run.result.log);
  write_checkpoint(dir / "checkpoint.txt", run.result.params, config);
  out << "epochs\t" << run.result.log.size() << "\nbest_epoch\t" << run.result.best_epoch << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, int seeds, const std::string& out_dir, std::ostream& out) {
  if (seeds < 1) throw UsageError("--seeds must be >= 1");
  const auto ckpt = load_checkpoint(checkpoint_path);
  const auto g = load_input(ckpt.config);
  const auto ex = prepare_experiment(g, ckpt.config);
  const auto bundle = embed(ex, ckpt.params, ckpt.config);
  std::map<std::string, std::vector<double>> values;
  for (int s = 0; s < seeds; ++s) {
    const auto r = evaluate(ex, bundle, static_cast<std::uint64_t>(s));
    if (ex.task == Task::node_classification) {
      values["macro_f1"].push_back(r.macro_f1);
      values["micro_f1"].push_back(r.micro_f1);
      values["nmi"].push_back(r.nmi);
      values["ari"].push_back(r.ari);
    } else {
      values["auc"].push_back(r.auc);
      values["link_f1"].push_back(r.link_f1);
    }
    values["silhouette"].push_back(r.silhouette);
  }
  std::map<std::string, eval::Summary> metrics;
  for (const auto& [name, v] : values) metrics[name] = eval::summarize(v);
  const auto dir = make_out_dir(out_dir);
  eval::write_metrics(dir / "metrics.tsv", metrics);
  for (const auto& [name, s] : metrics) out << name << '\t' << shortest(s.mean) << '\t' << shortest(s.stdev) << '\n';
  write_manifest(dir, "eval", {{"checkpoint", checkpoint_path}, {"seeds", std::to_string(seeds)}});
  return 0;
}

int cmd_export(const std::string& checkpoint_path, const std::string& out_dir) {
  const auto ckpt = load_checkpoint(checkpoint_path);
  const auto g = load_input(ckpt.config);
  const auto ex = prepare_experiment(g, ckpt.config);
  const auto bundle = embed(ex, ckpt.params, ckpt.config);
  const Mat tangent = tangent_embeddings(bundle);
  const auto dir = make_out_dir(out_dir);
  std::ofstream file(dir / "embeddings.tsv");
  if (!file) throw std::runtime_error("cannot write embeddings in " + dir.string());
  for (std::size_t r = 0; r < bundle.targets.size(); ++r) {
    file << g.node_name(bundle.targets[r]) << '\t';
    for (Eigen::Index j = 0; j < tangent.cols(); ++j) {
      file << (j ? "," : "") << shortest(tangent(static_cast<Eigen::Index>(r), j));
    }
    file << '\n';
  }
  write_manifest(dir, "export-embeddings", {{"checkpoint", checkpoint_path}});
  return 0;
}

int cmd_synth(const synth::SynthConfig& config, const std::string& out_dir, std::ostream& out) {
  const auto result = synth::make_synthetic(config);
  const auto dir = make_out_dir(out_dir);
  write_graph(result.graph, dir / "nodes.tsv", dir / "edges.tsv");
  synth::write_manifest(dir / "manifest.txt", config, result);
  out << "nodes\t" << result.graph.num_nodes() << "\nedges\t" << result.graph.num_edges() << "\ndropped_edges\t"
      << result.dropped_edges << "\n";
  return 0;
}

int cmd_delta(const std::string& nodes, const std::string& edges, const std::vector<std::string>& metapaths,
              const std::string& mode_name, long long q, std::uint64_t seed, const std::string& out_dir,
              std::ostream& out) {
  require_readable(nodes, "nodes");
  require_readable(edges, "edges");
  analysis::DeltaMode mode;
  if (mode_name == "exact") {
    mode = analysis::DeltaMode::exact();
  } else if (mode_name == "sampled") {
    if (q <= 0) throw UsageError("--q must be positive");
    mode = analysis::DeltaMode::sampled(q, seed);
  } else {
    throw UsageError("--mode must be exact or sampled");
  }
  const auto g = load_graph(nodes, edges);
  std::ostringstream table;
  table << "metapath\tnodes\tedges\tdelta_avg\tdelta_max\n";
  for (const auto& text : metapaths) {
    Metapath mp;
    try {
      mp = g.parse_metapath(text);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto r = analysis::metapath_delta(g, mp, mode);
    table << text << '\t' << r.nodes << '\t' << r.edges << '\t' << shortest(r.delta.avg) << '\t'
          << shortest(r.delta.max) << '\n';
  }
  out << table.str();
  const auto dir = make_out_dir(out_dir);
  std::ofstream(dir / "delta.tsv") << table.str();
  std::string joined;
  for (const auto& m : metapaths) joined += (joined.empty() ? "" : ",") + m;
  write_manifest(dir, "analyze-delta",
                 {{"nodes", nodes}, {"edges", edges}, {"metapaths", joined}, {"mode", mode_name},
                  {"q", std::to_string(q)}, {"seed", std::to_string(seed)}});
  return 0;
}

int cmd_bench(const TrainConfig& config, const std::string& lengths, int epochs, const std::string& out_dir,
              std::ostream& out) {
  if (epochs < 1) throw UsageError("--epochs-measured must be >= 1");
  const auto g = load_input(config);
  const auto timings = bench_epochs(g, config, parse_int_list(lengths), epochs);
  std::ostringstream table;
  table << "max_length\tinstances\tepoch\tseconds\n";
  for (const auto& t : timings) {
    for (std::size_t e = 0; e < t.seconds.size(); ++e) {
      table << t.max_length << '\t' << t.instances << '\t' << e + 1 << '\t' << shortest(t.seconds[e]) << '\n';
    }
  }
  out << table.str();
  const auto dir = make_out_dir(out_dir);
  std::ofstream(dir / "bench.tsv") << table.str();
  auto kv = to_key_values(config);
  kv["bench_lengths"] = lengths;
  kv["bench_epochs"] = std::to_string(epochs);
  write_manifest(dir, "bench-epoch", kv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-hyperbolic contrastive learning on heterogeneous graphs", "mhcl"};
  app.require_subcommand(1);

  std::string out_dir;
  std::string nodes, edges;

  auto* ingest = app.add_subcommand("ingest", "validate a graph and print a summary");
  ingest->add_option("--nodes", nodes)->required();
  ingest->add_option("--edges", edges)->required();
  ingest->add_option("--out", out_dir)->required();

  ConfigFlags sample_flags, train_flags, bench_flags;
  auto* sample = app.add_subcommand("sample", "count metapath instances per metapath");
  sample_flags.attach(sample);
  sample->add_option("--out", out_dir)->required();

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint and epoch log");
  train_flags.attach(train_cmd);
  train_cmd->add_option("--out", out_dir)->required();

  std::string checkpoint;
  int seeds = 10;
  auto* eval_cmd = app.add_subcommand("eval", "downstream metrics from a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--seeds", seeds, "number of evaluation seeds");
  eval_cmd->add_option("--out", out_dir)->required();

  auto* export_cmd = app.add_subcommand("export-embeddings", "write tangent-space node embeddings");
  export_cmd->add_option("--checkpoint", checkpoint)->required();
  export_cmd->add_option("--out", out_dir)->required();

  synth::SynthConfig synth_config;
  std::vector<double> proportions;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic heterogeneous graph");
  synth_cmd->add_option("--n", synth_config.n);
  synth_cmd->add_option("--m", synth_config.m);
  synth_cmd->add_option("--mu", synth_config.mu);
  synth_cmd->add_option("--sigma", synth_config.sigma);
  synth_cmd->add_option("--feature-dim,--feature_dim", synth_config.feature_dim);
  synth_cmd->add_option("--seed", synth_config.seed);
  synth_cmd->add_option("--proportions", proportions, "A,B,C type proportions")->delimiter(',')->expected(3);
  synth_cmd->add_option("--out", out_dir)->required();

  std::vector<std::string> metapaths;
  std::string mode = "sampled";
  long long q = 100000;
  std::uint64_t delta_seed = 0;
  auto* delta_cmd = app.add_subcommand("analyze-delta", "Gromov delta of metapath subgraphs");
  delta_cmd->add_option("--nodes", nodes)->required();
  delta_cmd->add_option("--edges", edges)->required();
  delta_cmd->add_option("--metapath", metapaths)->required();
  delta_cmd->add_option("--mode", mode);
  delta_cmd->add_option("--q", q);
  delta_cmd->add_option("--seed", delta_seed);
  delta_cmd->add_option("--out", out_dir)->required();

  std::string lengths = "2,3,4";
  int bench_epochs_count = 3;
  auto* bench = app.add_subcommand("bench-epoch", "epoch wall time for several maximum metapath lengths");
  bench_flags.attach(bench);
  bench->add_option("--lengths", lengths);
  bench->add_option("--epochs-measured", bench_epochs_count);
  bench->add_option("--out", out_dir)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(nodes, edges, out_dir, out);
    if (sample->parsed()) return cmd_sample(sample_flags.resolve(), out_dir, out);
    if (train_cmd->parsed()) return cmd_train(train_flags.resolve(), out_dir, out);
    if (eval_cmd->parsed()) return cmd_eval(checkpoint, seeds, out_dir, out);
    if (export_cmd->parsed()) return cmd_export(checkpoint, out_dir);
    if (synth_cmd->parsed()) {
      if (!proportions.empty()) synth_config.proportions = {proportions[0], proportions[1], proportions[2]};
      if (synth_config.n <= synth_config.m || synth_config.m < 1) throw UsageError("synth needs n > m >= 1");
      if (synth_config.mu < 0 || !(synth_config.sigma > 0) || synth_config.feature_dim < 1) {
        throw UsageError("synth needs mu >= 0, sigma > 0 and feature-dim >= 1");
      }
      return cmd_synth(synth_config, out_dir, out);
    }
    if (delta_cmd->parsed()) return cmd_delta(nodes, edges, metapaths, mode, q, delta_seed, out_dir, out);
    if (bench->parsed()) return cmd_bench(bench_flags.resolve(), lengths, bench_epochs_count, out_dir, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const GraphParseError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "usage error: no subcommand\n";
  return 2;
}

}  // namespace mhcl::cli
