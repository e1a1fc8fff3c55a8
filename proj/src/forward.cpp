#include "mhcl/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mhcl/ball_ops.hpp"
#include "mhcl/tape.hpp"

namespace mhcl {
namespace {

using ad::Tape;
using ad::Var;

struct HeadVars {
  Var w1, b1, a;
};

struct MetapathVars {
  Var theta, c, w_t;
  std::vector<HeadVars> heads;
};

class Dropout {
 public:
  Dropout(bool active, double rate, std::uint64_t seed) : active_(active && rate > 0.0), rate_(rate), rng_(seed) {}

  Var apply(Tape& t, Var x) {
    if (!active_) return x;
    const double keep = 1.0 - rate_;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat mask(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = u(rng_) < keep ? 1.0 / keep : 0.0;
    }
    return x * t.constant(std::move(mask), "dropout_mask");
  }

 private:
  bool active_;
  double rate_;
  std::mt19937_64 rng_;
};

Var leaf(Tape& t, const Mat& m, bool trainable, const char* name) {
  return trainable ? t.parameter(m, name) : t.constant(m, name);
}

}  // namespace

std::vector<std::string> PreparedBatch::metapath_names() const {
  std::vector<std::string> out;
  for (const auto& m : metapaths) out.push_back(m.name);
  return out;
}

int PreparedBatch::target_row(NodeId v) const {
  const auto it = std::lower_bound(targets.begin(), targets.end(), v);
  if (it == targets.end() || *it != v) throw std::invalid_argument("node is not a target");
  return static_cast<int>(it - targets.begin());
}

PreparedBatch prepare_batch(const HeteroGraph& g, const SampledInstances& sampled) {
  PreparedBatch batch;
  std::map<std::string, PreparedMetapath> by_name;
  std::map<std::string, std::vector<const MetapathInstance*>> rows;
  for (const auto& [target, by_metapath] : sampled) {
    const int row = static_cast<int>(batch.targets.size());
    batch.targets.push_back(target);
    for (const auto& [metapath, list] : by_metapath) {
      if (list.empty()) continue;
      const std::string name = g.metapath_name(metapath);
      auto& pm = by_name[name];
      pm.name = name;
      const int group = static_cast<int>(pm.group_target.size());
      pm.group_target.push_back(row);
      for (const auto& inst : list) {
        pm.group.push_back(group);
        rows[name].push_back(&inst);
      }
    }
  }
  for (auto& [name, pm] : by_name) {
    const auto& insts = rows[name];
    pm.mean_features.resize(static_cast<Eigen::Index>(insts.size()), g.feature_dim());
    for (std::size_t i = 0; i < insts.size(); ++i) {
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(g.feature_dim());
      for (NodeId v : *insts[i]) acc += g.features().row(v);
      pm.mean_features.row(static_cast<Eigen::Index>(i)) = acc / static_cast<double>(insts[i]->size());
    }
    batch.instance_count += insts.size();
    batch.metapaths.push_back(std::move(pm));
  }
  return batch;
}

std::pair<PreparedBatch, TaskLoss> restrict_to_task(const PreparedBatch& batch, const TaskLoss& task) {
  std::vector<int> keep = task.rows;
  for (const auto& p : task.pairs) {
    keep.push_back(p.u);
    keep.push_back(p.v);
  }
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<int> new_row(batch.targets.size(), -1);
  PreparedBatch out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    new_row[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
    out.targets.push_back(batch.targets[static_cast<std::size_t>(keep[i])]);
  }
  for (const auto& pm : batch.metapaths) {
    PreparedMetapath sub;
    sub.name = pm.name;
    std::vector<int> new_group(pm.group_target.size(), -1);
    for (std::size_t g = 0; g < pm.group_target.size(); ++g) {
      const int r = new_row[static_cast<std::size_t>(pm.group_target[g])];
      if (r < 0) continue;
      new_group[g] = static_cast<int>(sub.group_target.size());
      sub.group_target.push_back(r);
    }
    if (sub.group_target.empty()) continue;
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < pm.group.size(); ++i) {
      const int g = new_group[static_cast<std::size_t>(pm.group[i])];
      if (g < 0) continue;
      rows.push_back(static_cast<Eigen::Index>(i));
      sub.group.push_back(g);
    }
    sub.mean_features = pm.mean_features(rows, Eigen::all);
    out.instance_count += rows.size();
    out.metapaths.push_back(std::move(sub));
  }
  TaskLoss mapped = task;
  for (int& r : mapped.rows) r = new_row[static_cast<std::size_t>(r)];
  for (auto& p : mapped.pairs) {
    p.u = new_row[static_cast<std::size_t>(p.u)];
    p.v = new_row[static_cast<std::size_t>(p.v)];
  }
  return {std::move(out), std::move(mapped)};
}

ForwardResult forward(const PreparedBatch& batch, const ModelParams& params, const Hyper& hyper,
                      const TaskLoss& task, const ForwardOptions& options) {
  const bool grad = options.compute_grad;
  const bool grad_c = grad && !options.freeze_curvature;
  const int num_targets = static_cast<int>(batch.targets.size());
  Tape t;
  Dropout dropout(options.training, options.dropout, options.dropout_seed);

  std::vector<MetapathVars> mvars;
  for (const auto& pm : batch.metapaths) {
    const auto it = params.metapaths.find(pm.name);
    if (it == params.metapaths.end()) throw std::invalid_argument("no parameters for metapath " + pm.name);
    const MetapathParams& mp = it->second;
    MetapathVars mv{leaf(t, mp.theta, grad_c, "theta"), {}, leaf(t, mp.w_t, grad, "w_t"), {}};
    mv.c = ad::softplus(mv.theta);
    for (const auto& hp : mp.heads) {
      mv.heads.push_back({leaf(t, hp.w1, grad, "w1"), leaf(t, hp.b1, grad, "b1"), leaf(t, hp.a, grad, "a")});
    }
    mvars.push_back(std::move(mv));
  }
  Var w2 = leaf(t, params.w2, grad, "w2");
  Var theta = leaf(t, params.theta, grad_c, "theta");
  Var c = ad::softplus(theta);
  Var w3 = leaf(t, params.w3, grad, "w3");
  Var b3 = leaf(t, params.b3, grad, "b3");
  Var b = leaf(t, params.b, grad, "b");
  Var w_o = leaf(t, params.w_o, grad, "w_o");

  ForwardResult result;
  result.bundle.targets = batch.targets;

  std::vector<Var> aligned_parts, positive_parts;
  std::vector<int> row_target;
  std::vector<Var> h_vars, aligned_vars, positive_vars;
  for (std::size_t m = 0; m < batch.metapaths.size(); ++m) {
    const auto& pm = batch.metapaths[m];
    const auto& mv = mvars[m];
    const int groups = static_cast<int>(pm.group_target.size());

    // Hyperbolic mean-linear encoding.
    Var x = t.constant(pm.mean_features, "mean_features");
    Var xh = ball::matvec(mv.w_t, ball::exp0(x, mv.c), mv.c);

    std::vector<Var> head_tangents;
    for (const auto& hv : mv.heads) {
      Var hp = ball::mobius_add(ball::leaky_activation(ball::matvec(hv.w1, xh, mv.c), mv.c),
                                ball::exp0(hv.b1, mv.c), mv.c);
      Var tan = dropout.apply(t, ball::log0(hp, mv.c));
      Var alpha = ad::segment_softmax(ad::matmul(tan, hv.a), pm.group, groups);
      Var agg = ad::segment_sum(alpha * tan, pm.group, groups);
      Var head = ball::leaky_activation(ball::exp0(agg, mv.c), mv.c);
      head_tangents.push_back(ball::log0(head, mv.c));
    }
    Var h = ball::exp0(ad::concat_cols(head_tangents), mv.c);

    Var h_tan = ball::log0(h, mv.c);
    Var aligned = ball::exp0(ad::matmul(h_tan, ad::transpose(w2)), c);
    Var positive = ball::exp0(h_tan, c);
    h_vars.push_back(h);
    aligned_vars.push_back(aligned);
    positive_vars.push_back(positive);
    aligned_parts.push_back(aligned);
    positive_parts.push_back(positive);
    row_target.insert(row_target.end(), pm.group_target.begin(), pm.group_target.end());
  }

  Var hyp_loss = t.constant(Mat::Zero(1, 1), "zero");
  Var z, logits;
  if (batch.metapaths.empty()) {
    z = t.constant(Mat::Zero(num_targets, params.dims.node_dim), "origin");
  } else {
    Var all_aligned = ad::concat_rows(aligned_parts);
    Var all_positive = ad::concat_rows(positive_parts);

    // Contrastive pairs: anchor rows of targets with >= 2 metapaths.
    std::vector<std::vector<int>> rows_of_target(static_cast<std::size_t>(num_targets));
    for (std::size_t r = 0; r < row_target.size(); ++r) {
      rows_of_target[static_cast<std::size_t>(row_target[r])].push_back(static_cast<int>(r));
    }
    std::vector<int> anchors, pair_anchor, pair_slot, pair_other;
    for (const auto& rows : rows_of_target) {
      if (rows.size() < 2) continue;
      for (int i : rows) {
        const int slot = static_cast<int>(anchors.size());
        anchors.push_back(i);
        for (int j : rows) {
          if (j == i) continue;
          pair_anchor.push_back(i);
          pair_slot.push_back(slot);
          pair_other.push_back(j);
        }
      }
    }
    if (!anchors.empty()) {
      const int num_anchors = static_cast<int>(anchors.size());
      Var anchor_pts = ad::gather_rows(all_aligned, anchors);
      Var pos = ball::distance(anchor_pts, ad::gather_rows(all_positive, anchors), c);
      Var neg = ball::distance(ad::gather_rows(all_aligned, pair_anchor), ad::gather_rows(all_aligned, pair_other), c);
      if (hyper.contrastive_form == ContrastiveForm::info_nce) {
        Var x = (ad::gather_rows(pos, pair_slot) - neg) * (1.0 / hyper.tau);
        // log(1 + sum_j e^{x_j}) with a constant per-anchor shift m = max(0, max_j x_j).
        Mat m = Mat::Zero(num_anchors, 1);
        for (std::size_t p = 0; p < pair_slot.size(); ++p) {
          m(pair_slot[p], 0) = std::max(m(pair_slot[p], 0), x.value()(static_cast<Eigen::Index>(p), 0));
        }
        Var mv = t.constant(m, "logsumexp_shift");
        Var s = ad::segment_sum(ad::exp(x - ad::gather_rows(mv, pair_slot)), pair_slot, num_anchors);
        hyp_loss = ad::sum(mv + ad::log(ad::exp(-mv) + s));
      } else {
        Var num = ad::exp(pos * (-1.0 / hyper.tau));
        Var den = ad::segment_sum(ad::exp(neg * (-1.0 / hyper.tau)), pair_slot, num_anchors);
        hyp_loss = ad::sum(num / den);
      }
    }

    // Inter-space attention over the aligned metapath embeddings.
    Var inner = ball::leaky_activation(ball::mobius_add(ball::matvec(w3, all_aligned, c), ball::exp0(b3, c), c), c);
    Var u = dropout.apply(t, ball::log0(inner, c));
    Var beta = ad::segment_softmax(ad::matmul(u, b), row_target, num_targets);
    z = ball::exp0(ad::segment_sum(beta * u, row_target, num_targets), c);
  }
  logits = ad::matmul(ball::log0(z, c), ad::transpose(w_o));

  Var task_loss = t.constant(Mat::Zero(1, 1), "zero");
  if (task.kind == TaskLoss::Kind::node_classification && !task.rows.empty()) {
    const Eigen::Index classes = logits.cols();
    Var picked = ad::gather_rows(logits, task.rows);
    Mat onehot = Mat::Zero(picked.rows(), classes);
    Mat shift(picked.rows(), 1);
    for (std::size_t i = 0; i < task.rows.size(); ++i) {
      if (task.labels[i] < 0 || task.labels[i] >= classes) {
        throw std::invalid_argument("label " + std::to_string(task.labels[i]) + " out of range");
      }
      onehot(static_cast<Eigen::Index>(i), task.labels[i]) = 1.0;
      shift(static_cast<Eigen::Index>(i), 0) = picked.value().row(static_cast<Eigen::Index>(i)).maxCoeff();
    }
    Var sh = t.constant(shift, "logsumexp_shift");
    Var lse = sh + ad::log(ad::row_sum(ad::exp(picked - sh)));
    task_loss = ad::sum(lse - ad::row_sum(picked * t.constant(onehot, "onehot")));
  } else if (task.kind == TaskLoss::Kind::link_prediction && !task.pairs.empty()) {
    std::vector<int> us, vs;
    Mat sign(static_cast<Eigen::Index>(task.pairs.size()), 1);
    for (std::size_t i = 0; i < task.pairs.size(); ++i) {
      us.push_back(task.pairs[i].u);
      vs.push_back(task.pairs[i].v);
      sign(static_cast<Eigen::Index>(i), 0) = task.pairs[i].y == 1 ? -1.0 : 1.0;
    }
    Var score = ad::row_sum(ad::gather_rows(logits, us) * ad::gather_rows(logits, vs));
    task_loss = ad::sum(ad::softplus(score * t.constant(sign, "link_sign"))) *
                (1.0 / static_cast<double>(task.pairs.size()));
  }
  Var total = task_loss + hyp_loss * hyper.lambda;

  if (auto bad = t.first_non_finite()) throw NonFiniteError("non-finite intermediate at " + *bad);

  auto& bundle = result.bundle;
  bundle.c = c.value()(0, 0);
  for (std::size_t m = 0; m < batch.metapaths.size(); ++m) {
    MetapathEmbeddings me;
    me.name = batch.metapaths[m].name;
    me.c = mvars[m].c.value()(0, 0);
    me.target_rows = batch.metapaths[m].group_target;
    me.h = h_vars[m].value();
    me.aligned = aligned_vars[m].value();
    me.positive = positive_vars[m].value();
    bundle.metapaths.push_back(std::move(me));
  }
  bundle.z = z.value();
  bundle.logits = logits.value();
  result.task_loss = task_loss.value()(0, 0);
  result.hyp_loss = hyp_loss.value()(0, 0);
  result.total_loss = total.value()(0, 0);

  if (grad) {
    t.backward(total);
    if (const auto& bad = t.first_bad_gradient()) throw NonFiniteError("non-finite gradient from " + *bad);
    ModelParams g = params;
    for (auto& [name, mp] : g.metapaths) {
      // Batch metapaths are a subset of the parameter metapaths; absent ones get zero.
      const auto pos = std::find_if(batch.metapaths.begin(), batch.metapaths.end(),
                                    [&](const PreparedMetapath& p) { return p.name == name; });
      if (pos == batch.metapaths.end()) {
        mp.theta.setZero();
        mp.w_t.setZero();
        for (auto& hp : mp.heads) {
          hp.w1.setZero();
          hp.b1.setZero();
          hp.a.setZero();
        }
        continue;
      }
      const auto& mv = mvars[static_cast<std::size_t>(pos - batch.metapaths.begin())];
      mp.theta = t.grad(mv.theta);
      mp.w_t = t.grad(mv.w_t);
      for (std::size_t k = 0; k < mp.heads.size(); ++k) {
        mp.heads[k].w1 = t.grad(mv.heads[k].w1);
        mp.heads[k].b1 = t.grad(mv.heads[k].b1);
        mp.heads[k].a = t.grad(mv.heads[k].a);
      }
    }
    g.w2 = t.grad(w2);
    g.theta = t.grad(theta);
    g.w3 = t.grad(w3);
    g.b3 = t.grad(b3);
    g.b = t.grad(b);
    g.w_o = t.grad(w_o);
    result.grad = std::move(g);
  }
  return result;
}

}  // namespace mhcl
