#include "mhcl/trainer.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

namespace mhcl {
namespace {

Mat glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      // 53-bit uniform in [0, 1), mapped to (-s, s).
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      m(i, j) = (2.0 * u - 1.0) * s;
    }
  }
  return m;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string hex(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, ptr);
}

double parse_hex(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::runtime_error("bad checkpoint value '" + s + "'");
  return v;
}

void check_curvatures(const ModelParams& p) {
  bool ok = p.unified_curvature() > 0.0;
  for (const auto& [name, mp] : p.metapaths) ok = ok && geometry::softplus(mp.theta(0, 0)) > 0.0;
  if (!ok) throw NonFiniteError("curvature left the positive half-line");
}

}  // namespace

ModelParams init_params(const ModelDims& dims, const std::vector<std::string>& metapaths,
                        std::uint64_t seed, double initial_c) {
  dims.validate();
  std::mt19937_64 rng(seed);
  const Mat theta = Mat::Constant(1, 1, geometry::inverse_softplus(initial_c));
  ModelParams p;
  p.dims = dims;
  std::vector<std::string> names = metapaths;
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    MetapathParams mp;
    mp.theta = theta;
    mp.w_t = glorot(dims.feature_dim, dims.feature_dim, rng);
    for (int k = 0; k < dims.heads; ++k) {
      HeadParams hp;
      hp.w1 = glorot(dims.head_dim(), dims.feature_dim, rng);
      hp.b1 = Mat::Zero(1, dims.head_dim());
      hp.a = glorot(dims.head_dim(), 1, rng);
      mp.heads.push_back(std::move(hp));
    }
    p.metapaths.emplace(name, std::move(mp));
  }
  p.w2 = glorot(dims.metapath_dim, dims.metapath_dim, rng);
  p.theta = theta;
  p.w3 = glorot(dims.node_dim, dims.metapath_dim, rng);
  p.b3 = Mat::Zero(1, dims.node_dim);
  p.b = glorot(dims.node_dim, 1, rng);
  p.w_o = glorot(dims.output_dim, dims.node_dim, rng);
  return p;
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState s{params, params, 0};
  s.m.for_each([](const std::string&, Mat& m, ParamKind) { m.setZero(); });
  s.v.for_each([](const std::string&, Mat& m, ParamKind) { m.setZero(); });
  return s;
}

void adamw_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamWOptions& o) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  std::vector<const Mat*> g;
  grads.for_each([&](const std::string&, const Mat& m, ParamKind) { g.push_back(&m); });
  std::vector<Mat*> m1, m2;
  state.m.for_each([&](const std::string&, Mat& m, ParamKind) { m1.push_back(&m); });
  state.v.for_each([&](const std::string&, Mat& m, ParamKind) { m2.push_back(&m); });
  std::size_t i = 0;
  params.for_each([&](const std::string& name, Mat& p, ParamKind kind) {
    const Mat& gi = *g[i];
    Mat& mi = *m1[i];
    Mat& vi = *m2[i];
    ++i;
    if (gi.rows() != p.rows() || gi.cols() != p.cols()) throw std::invalid_argument("gradient shape mismatch for " + name);
    if (kind == ParamKind::curvature && o.freeze_curvature) return;
    if (kind == ParamKind::weight && o.weight_decay != 0.0) p *= (1.0 - o.learning_rate * o.weight_decay);
    mi = o.beta1 * mi + (1.0 - o.beta1) * gi;
    vi = o.beta2 * vi + (1.0 - o.beta2) * gi.cwiseProduct(gi);
    p.array() -= o.learning_rate * (mi.array() / bc1) / ((vi.array() / bc2).sqrt() + o.eps);
  });
}

ModelDims dims_for(const TrainConfig& config, const PreparedBatch&, int feature_dim, int classes) {
  ModelDims d;
  d.feature_dim = feature_dim;
  d.metapath_dim = config.metapath_dim;
  d.node_dim = config.node_dim;
  d.heads = config.heads;
  if (config.output_dim > 0) {
    d.output_dim = config.output_dim;
  } else {
    d.output_dim = config.task == Task::node_classification ? classes : config.node_dim;
  }
  d.validate();
  return d;
}

ModelParams loss_gradient(const PreparedBatch& batch, const ModelParams& params, const Hyper& hyper,
                          const TaskLoss& task, bool freeze_curvature) {
  ForwardOptions opts;
  opts.compute_grad = true;
  opts.freeze_curvature = freeze_curvature;
  auto r = forward(batch, params, hyper, task, opts);
  bool finite = true;
  r.grad->for_each([&](const std::string&, const Mat& m, ParamKind) { finite = finite && m.allFinite(); });
  if (!finite) throw NonFiniteError("non-finite gradient");
  return std::move(*r.grad);
}

TrainResult train(const PreparedBatch& batch, const TaskLoss& train_task, const TaskLoss& val_task,
                  const TrainConfig& config, const ModelDims& dims, const EpochHook& hook) {
  config.validate();
  const bool euclidean = config.curvature_mode == CurvatureMode::euclidean;
  ModelParams params = init_params(dims, batch.metapath_names(), config.seed, euclidean ? 1e-10 : 1.0);
  AdamState state = make_adam_state(params);
  AdamWOptions adam{config.learning_rate, config.weight_decay, 0.9, 0.999, 1e-8, euclidean};
  const Hyper hyper = config.hyper();
  const bool has_val = val_task.kind != TaskLoss::Kind::none && (!val_task.rows.empty() || !val_task.pairs.empty());

  // Validation only needs the targets it scores.
  std::optional<std::pair<PreparedBatch, TaskLoss>> val_batch;
  if (has_val) val_batch = restrict_to_task(batch, val_task);

  TrainResult result;
  result.params = params;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    ForwardOptions opts;
    opts.training = true;
    opts.dropout = config.dropout;
    opts.dropout_seed = mix(config.seed, static_cast<std::uint64_t>(epoch));
    opts.compute_grad = true;
    opts.freeze_curvature = euclidean;
    const ForwardResult step = forward(batch, params, hyper, train_task, opts);
    bool finite = true;
    step.grad->for_each([&](const std::string&, const Mat& m, ParamKind) { finite = finite && m.allFinite(); });
    if (!finite) throw NonFiniteError("non-finite gradient at epoch " + std::to_string(epoch));
    adamw_step(params, *step.grad, state, adam);
    check_curvatures(params);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = step.total_loss;
    rec.task_loss = step.task_loss;
    rec.hyp_loss = step.hyp_loss;
    if (has_val) {
      rec.val_loss = forward(val_batch->first, params, hyper, val_batch->second, ForwardOptions{}).task_loss;
    } else {
      rec.val_loss = forward(batch, params, hyper, train_task, ForwardOptions{}).total_loss;
    }
    const auto stop = std::chrono::steady_clock::now();
    rec.seconds = config.log_wall_time ? std::chrono::duration<double>(stop - start).count() : 0.0;
    result.log.push_back(rec);
    if (hook) hook(rec, params);

    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

void write_epoch_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch\ttrain_loss\tval_loss\ttask_loss\thyp_loss\tseconds\n";
  char buf[64];
  auto num = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
  };
  for (const auto& r : log) {
    out << r.epoch << '\t' << num(r.train_loss) << '\t' << num(r.val_loss) << '\t' << num(r.task_loss) << '\t'
        << num(r.hyp_loss) << '\t' << num(r.seconds) << '\n';
  }
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "mhcl-checkpoint 1\n";
  for (const auto& [k, v] : to_key_values(config)) out << "config " << k << ' ' << v << '\n';
  const auto& d = params.dims;
  out << "dims " << d.feature_dim << ' ' << d.metapath_dim << ' ' << d.node_dim << ' ' << d.output_dim << ' '
      << d.heads << '\n';
  params.for_each([&](const std::string& name, const Mat& m, ParamKind) {
    out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << hex(m(i, j));
      out << '\n';
    }
  });
  out << "end\n";
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "mhcl-checkpoint 1") {
    throw std::runtime_error(path.string() + ": not a version-1 checkpoint");
  }
  std::map<std::string, std::string> kv;
  std::map<std::string, Mat> tensors;
  ModelDims dims;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "config") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      kv[key] = value;
    } else if (tag == "dims") {
      ls >> dims.feature_dim >> dims.metapath_dim >> dims.node_dim >> dims.output_dim >> dims.heads;
    } else if (tag == "tensor") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      ls >> name >> rows >> cols;
      Mat m(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i) {
        std::string row;
        if (!std::getline(in, row)) throw std::runtime_error("truncated checkpoint at tensor " + name);
        std::istringstream rs(row);
        for (Eigen::Index j = 0; j < cols; ++j) {
          std::string tok;
          if (!(rs >> tok)) throw std::runtime_error("short row in tensor " + name);
          m(i, j) = parse_hex(tok);
        }
      }
      tensors.emplace(name, std::move(m));
    } else if (tag == "end") {
      ended = true;
      break;
    } else if (!tag.empty()) {
      throw std::runtime_error("unexpected checkpoint line: " + line);
    }
  }
  if (!ended) throw std::runtime_error("checkpoint missing end marker");

  Checkpoint ck;
  ck.config = apply_key_values(TrainConfig{}, kv);
  ModelParams& p = ck.params;
  p.dims = dims;
  for (const auto& [name, m] : tensors) {
    const auto slash = name.find('/');
    if (slash == std::string::npos) continue;
    const std::string mp_name = name.substr(0, slash);
    auto& mp = p.metapaths[mp_name];
    mp.heads.resize(static_cast<std::size_t>(dims.heads));
  }
  auto take = [&](const std::string& name) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint lacks tensor " + name);
    return it->second;
  };
  p.for_each([&](const std::string& name, Mat& m, ParamKind) { m = take(name); });
  if (p.scalar_count() == 0) throw std::runtime_error("empty checkpoint");
  return ck;
}

}  // namespace mhcl
