#include "mhcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mhcl {

using geometry::Activation;
using geometry::exp_map_0;
using geometry::hyp_activation;
using geometry::hyp_distance;
using geometry::hyp_matvec;
using geometry::log_map_0;
using geometry::mobius_add;

void ModelDims::validate() const {
  if (feature_dim <= 0 || metapath_dim <= 0 || node_dim <= 0 || output_dim <= 0 || heads <= 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (metapath_dim % heads != 0) {
    throw std::invalid_argument("metapath_dim " + std::to_string(metapath_dim) +
                                " is not divisible by heads " + std::to_string(heads));
  }
}

double ModelParams::metapath_curvature(const std::string& name) const {
  return geometry::softplus(metapaths.at(name).theta(0, 0));
}

double ModelParams::unified_curvature() const { return geometry::softplus(theta(0, 0)); }

void ModelParams::for_each(const std::function<void(const std::string&, Mat&, ParamKind)>& fn) {
  for (auto& [name, mp] : metapaths) {
    fn(name + "/theta", mp.theta, ParamKind::curvature);
    fn(name + "/w_t", mp.w_t, ParamKind::weight);
    for (std::size_t k = 0; k < mp.heads.size(); ++k) {
      const std::string prefix = name + "/head" + std::to_string(k);
      fn(prefix + "/w1", mp.heads[k].w1, ParamKind::weight);
      fn(prefix + "/b1", mp.heads[k].b1, ParamKind::bias);
      fn(prefix + "/a", mp.heads[k].a, ParamKind::attention);
    }
  }
  fn("w2", w2, ParamKind::weight);
  fn("theta", theta, ParamKind::curvature);
  fn("w3", w3, ParamKind::weight);
  fn("b3", b3, ParamKind::bias);
  fn("b", b, ParamKind::attention);
  fn("w_o", w_o, ParamKind::weight);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Mat&, ParamKind)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      [&](const std::string& name, Mat& m, ParamKind kind) { fn(name, m, kind); });
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Mat& m, ParamKind) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

PoincarePoint encode_instance(const MetapathInstance& instance, const Mat& features,
                              const MetapathParams& mp) {
  if (instance.empty()) throw std::invalid_argument("empty metapath instance");
  Vector mean = Vector::Zero(features.cols());
  for (NodeId v : instance) mean += features.row(v).transpose();
  mean /= static_cast<double>(instance.size());
  const double c = geometry::softplus(mp.theta(0, 0));
  return hyp_matvec(mp.w_t, exp_map_0(mean, c));
}

PoincarePoint instance_embed(const PoincarePoint& x, const HeadParams& head) {
  const PoincarePoint act = hyp_activation(hyp_matvec(head.w1, x), Activation::leaky_relu);
  return mobius_add(act, exp_map_0(head.b1.row(0).transpose(), x.c));
}

IntraAttention intra_attention(const std::vector<PoincarePoint>& instances, const HeadParams& head) {
  if (instances.empty()) throw std::invalid_argument("no-instances: intra attention over an empty set");
  const double c = instances.front().c;
  std::vector<Vector> tangents;
  std::vector<double> scores;
  for (const auto& h : instances) {
    tangents.push_back(log_map_0(h));
    scores.push_back(head.a.col(0).dot(tangents.back()));
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - top);
    denom += s;
  }
  Vector agg = Vector::Zero(tangents.front().size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] /= denom;
    agg += scores[i] * tangents[i];
  }
  return {hyp_activation(exp_map_0(agg, c), Activation::leaky_relu), scores};
}

PoincarePoint multihead_concat(const std::vector<PoincarePoint>& heads, int expected_heads) {
  if (static_cast<int>(heads.size()) != expected_heads || heads.empty()) {
    throw std::invalid_argument("expected " + std::to_string(expected_heads) + " head outputs, got " +
                                std::to_string(heads.size()));
  }
  const double c = heads.front().c;
  Eigen::Index dim = 0;
  for (const auto& h : heads) dim += h.dim();
  Vector cat(dim);
  Eigen::Index at = 0;
  for (const auto& h : heads) {
    cat.segment(at, h.dim()) = log_map_0(h);
    at += h.dim();
  }
  return exp_map_0(cat, c);
}

PoincarePoint align_to_unified(const PoincarePoint& h, const ModelParams& params) {
  return exp_map_0(params.w2 * log_map_0(h), params.unified_curvature());
}

PoincarePoint positive_transform(const PoincarePoint& h, double unified_c) {
  return exp_map_0(log_map_0(h), unified_c);
}

double contrastive_loss(const std::vector<PoincarePoint>& aligned,
                        const std::vector<PoincarePoint>& positives, const Hyper& hyper) {
  if (aligned.size() != positives.size()) throw std::invalid_argument("aligned/positive count mismatch");
  if (aligned.size() < 2) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const double pos = hyp_distance(aligned[i], positives[i]);
    if (hyper.contrastive_form == ContrastiveForm::info_nce) {
      // -log(e^{-pos/tau} / (e^{-pos/tau} + sum e^{-neg/tau})) = log(1 + sum e^{(pos-neg)/tau})
      std::vector<double> x;
      for (std::size_t j = 0; j < aligned.size(); ++j) {
        if (j != i) x.push_back((pos - hyp_distance(aligned[i], aligned[j])) / hyper.tau);
      }
      const double m = std::max(0.0, *std::max_element(x.begin(), x.end()));
      double s = std::exp(-m);
      for (double v : x) s += std::exp(v - m);
      loss += m + std::log(s);
    } else {
      double denom = 0.0;
      for (std::size_t j = 0; j < aligned.size(); ++j) {
        if (j != i) denom += std::exp(-hyp_distance(aligned[i], aligned[j]) / hyper.tau);
      }
      loss += std::exp(-pos / hyper.tau) / denom;
    }
  }
  return loss;
}

InterAttention inter_attention(const std::vector<PoincarePoint>& aligned, const ModelParams& params) {
  if (aligned.empty()) throw std::invalid_argument("inter attention over an empty metapath set");
  const double c = params.unified_curvature();
  const PoincarePoint bias = exp_map_0(params.b3.row(0).transpose(), c);
  std::vector<Vector> tangents;
  std::vector<double> scores;
  for (const auto& h : aligned) {
    const PoincarePoint inner =
        hyp_activation(mobius_add(hyp_matvec(params.w3, h), bias), Activation::leaky_relu);
    tangents.push_back(log_map_0(inner));
    scores.push_back(params.b.col(0).dot(tangents.back()));
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (auto& s : scores) {
    s = std::exp(s - top);
    denom += s;
  }
  Vector agg = Vector::Zero(tangents.front().size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] /= denom;
    agg += scores[i] * tangents[i];
  }
  return {exp_map_0(agg, c), scores};
}

Vector readout(const PoincarePoint& z, const ModelParams& params) { return params.w_o * log_map_0(z); }

double classification_loss(const std::vector<Vector>& logits, const std::vector<int>& labels, int classes) {
  if (logits.size() != labels.size()) throw std::invalid_argument("logit/label count mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes || logits[i].size() != classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
    const double m = logits[i].maxCoeff();
    const double lse = m + std::log((logits[i].array() - m).exp().sum());
    loss += lse - logits[i](labels[i]);
  }
  return loss;
}

double link_loss(const std::vector<LinkPair>& pairs, const std::vector<Vector>& logits) {
  if (pairs.empty()) throw std::invalid_argument("no link pairs");
  double loss = 0.0;
  for (const auto& p : pairs) {
    const double s = logits.at(static_cast<std::size_t>(p.u)).dot(logits.at(static_cast<std::size_t>(p.v)));
    loss += geometry::softplus(p.y == 1 ? -s : s);
  }
  return loss / static_cast<double>(pairs.size());
}

double total_loss(double task_loss, double hyp_loss, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  return task_loss + lambda * hyp_loss;
}

}  // namespace mhcl
