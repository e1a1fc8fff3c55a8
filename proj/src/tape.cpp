#include "mhcl/tape.hpp"

#include "ratio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mhcl::ad {
namespace {

using Eigen::Index;

Index broadcast_dim(Index a, Index b) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw std::invalid_argument("incompatible shapes for broadcasting");
}

// Read-only view that repeats a 1x1, Nx1 or 1xC operand to the full shape.
struct Broadcast {
  const double* data;
  Index row_step;
  Index col_step;

  Broadcast(const Mat& m, Index rows, Index cols)
      : data(m.data()), row_step(m.rows() == 1 && rows != 1 ? 0 : 1), col_step(m.cols() == 1 && cols != 1 ? 0 : m.rows()) {}
  double operator()(Index i, Index j) const { return data[i * row_step + j * col_step]; }
};

template <typename F>
Mat build(Index rows, Index cols, F f) {
  Mat out(rows, cols);
  double* o = out.data();
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) o[j * rows + i] = f(i, j);
  }
  return out;
}

Mat reduce_to(Mat g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Mat::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw std::logic_error("vars belong to different tapes");
  return *a.tape;
}

// Unary elementwise op whose derivative depends on the input and output values.
template <typename F, typename D>
Var unary(Var a, const char* op, F f, D df) {
  Tape& t = *a.tape;
  Mat out = a.value().unaryExpr(f);
  return t.record(std::move(out), op, t.needs_grad(a), [a, df](Tape& tape, const Mat& g) {
    const Mat& x = tape.value(a);
    tape.accumulate(a, g.cwiseProduct(x.unaryExpr(df)));
  });
}

double softplus_value(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Mat& Var::value() const { return tape->value(*this); }

Var Tape::constant(Mat value, const char* op) { return record(std::move(value), op, false, nullptr); }

Var Tape::parameter(Mat value, const char* op) {
  nodes_.push_back(Node{std::move(value), Mat(), op, true, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Mat value, const char* op, bool needs_grad, Backward backward) {
  if (!needs_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), Mat(), op, needs_grad, std::move(backward)});
  return Var{this, nodes_.size() - 1};
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, Mat&& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0 && g.allFinite()) {
    n.grad = std::move(g);
    return;
  }
  accumulate(v, static_cast<const Mat&>(g));
}

void Tape::accumulate(Var v, const Mat& g) {
  Node& n = nodes_[v.id];
  if (!n.needs_grad) return;
  if (!bad_gradient_ && !g.allFinite()) {
    bad_gradient_ = std::string(nodes_[running_].op) + " #" + std::to_string(running_) + " -> " + n.op + " #" +
                    std::to_string(v.id);
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var output) {
  if (output.tape != this) throw std::logic_error("output var from another tape");
  if (value(output).size() != 1) throw std::invalid_argument("backward needs a scalar output");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  bad_gradient_.reset();
  nodes_[output.id].grad = Mat::Ones(1, 1);
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    running_ = i;
    if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
  }
}

std::optional<std::string> Tape::first_non_finite() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].value.allFinite()) return "node #" + std::to_string(i) + " (" + nodes_[i].op + ")";
  }
  return std::nullopt;
}

Var operator+(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Index r = broadcast_dim(a.rows(), b.rows());
  const Index c = broadcast_dim(a.cols(), b.cols());
  const Broadcast x(a.value(), r, c), y(b.value(), r, c);
  Mat out = build(r, c, [&](Index i, Index j) { return x(i, j) + y(i, j); });
  return t.record(std::move(out), "add", t.needs_grad(a) || t.needs_grad(b), [a, b](Tape& tape, const Mat& g) {
    if (tape.needs_grad(a)) tape.accumulate(a, reduce_to(g, a.rows(), a.cols()));
    if (tape.needs_grad(b)) tape.accumulate(b, reduce_to(g, b.rows(), b.cols()));
  });
}

Var operator-(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Index r = broadcast_dim(a.rows(), b.rows());
  const Index c = broadcast_dim(a.cols(), b.cols());
  const Broadcast x(a.value(), r, c), y(b.value(), r, c);
  Mat out = build(r, c, [&](Index i, Index j) { return x(i, j) - y(i, j); });
  return t.record(std::move(out), "sub", t.needs_grad(a) || t.needs_grad(b), [a, b](Tape& tape, const Mat& g) {
    if (tape.needs_grad(a)) tape.accumulate(a, reduce_to(g, a.rows(), a.cols()));
    if (tape.needs_grad(b)) tape.accumulate(b, reduce_to(-g, b.rows(), b.cols()));
  });
}

Var operator*(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Index r = broadcast_dim(a.rows(), b.rows());
  const Index c = broadcast_dim(a.cols(), b.cols());
  const Broadcast x(a.value(), r, c), y(b.value(), r, c);
  Mat out = build(r, c, [&](Index i, Index j) { return x(i, j) * y(i, j); });
  return t.record(std::move(out), "mul", t.needs_grad(a) || t.needs_grad(b), [a, b, r, c](Tape& tape, const Mat& g) {
    if (tape.needs_grad(a)) {
      const Broadcast y(tape.value(b), r, c);
      tape.accumulate(a, reduce_to(build(r, c, [&](Index i, Index j) { return g(i, j) * y(i, j); }), a.rows(), a.cols()));
    }
    if (tape.needs_grad(b)) {
      const Broadcast x(tape.value(a), r, c);
      tape.accumulate(b, reduce_to(build(r, c, [&](Index i, Index j) { return g(i, j) * x(i, j); }), b.rows(), b.cols()));
    }
  });
}

Var operator/(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Index r = broadcast_dim(a.rows(), b.rows());
  const Index c = broadcast_dim(a.cols(), b.cols());
  const Broadcast x(a.value(), r, c), y(b.value(), r, c);
  Mat out = build(r, c, [&](Index i, Index j) { return x(i, j) / y(i, j); });
  return t.record(std::move(out), "div", t.needs_grad(a) || t.needs_grad(b), [a, b, r, c](Tape& tape, const Mat& g) {
    const Broadcast x(tape.value(a), r, c), y(tape.value(b), r, c);
    if (tape.needs_grad(a)) {
      tape.accumulate(a, reduce_to(build(r, c, [&](Index i, Index j) { return g(i, j) / y(i, j); }), a.rows(), a.cols()));
    }
    if (tape.needs_grad(b)) {
      Mat gb = build(r, c, [&](Index i, Index j) {
        const double d = y(i, j);
        return -g(i, j) * x(i, j) / (d * d);
      });
      tape.accumulate(b, reduce_to(std::move(gb), b.rows(), b.cols()));
    }
  });
}

Var operator-(Var a) { return a * -1.0; }

Var operator*(Var a, double s) {
  Tape& t = *a.tape;
  return t.record(a.value() * s, "scale", t.needs_grad(a),
                  [a, s](Tape& tape, const Mat& g) { tape.accumulate(a, g * s); });
}

Var operator*(double s, Var a) { return a * s; }

Var operator+(Var a, double s) {
  Tape& t = *a.tape;
  Mat out = a.value().array() + s;
  return t.record(std::move(out), "shift", t.needs_grad(a),
                  [a](Tape& tape, const Mat& g) { tape.accumulate(a, g); });
}

Var operator+(double s, Var a) { return a + s; }
Var operator-(Var a, double s) { return a + (-s); }
Var operator-(double s, Var a) { return (a * -1.0) + s; }

Var operator/(double s, Var a) {
  return unary(
      a, "reciprocal", [s](double x) { return s / x; }, [s](double x) { return -s / (x * x); });
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Mat out = a.value() * b.value();
  return t.record(std::move(out), "matmul", t.needs_grad(a) || t.needs_grad(b), [a, b](Tape& tape, const Mat& g) {
    if (tape.needs_grad(a)) tape.accumulate(a, g * tape.value(b).transpose());
    if (tape.needs_grad(b)) tape.accumulate(b, tape.value(a).transpose() * g);
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  return t.record(a.value().transpose(), "transpose", t.needs_grad(a),
                  [a](Tape& tape, const Mat& g) { tape.accumulate(a, g.transpose()); });
}

Var row_sum(Var a) {
  Tape& t = *a.tape;
  Mat out = a.value().rowwise().sum();
  const Index cols = a.cols();
  return t.record(std::move(out), "row_sum", t.needs_grad(a),
                  [a, cols](Tape& tape, const Mat& g) { tape.accumulate(a, g.replicate(1, cols)); });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  Mat out = Mat::Constant(1, 1, a.value().sum());
  return t.record(std::move(out), "sum", t.needs_grad(a), [a](Tape& tape, const Mat& g) {
    tape.accumulate(a, Mat::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var sqrt(Var a) {
  return unary(
      a, "sqrt", [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; },
      [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Var exp(Var a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a) {
  return unary(
      a, "log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var log1p(Var a) {
  return unary(
      a, "log1p", [](double x) { return std::log1p(x); }, [](double x) { return 1.0 / (1.0 + x); });
}

Var softplus(Var a) { return unary(a, "softplus", softplus_value, sigmoid); }

Var leaky_relu(Var a, double slope) {
  return unary(
      a, "leaky_relu", [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x) { return x >= 0.0 ? 1.0 : slope; });
}

Var tanh_ratio(Var a) { return unary(a, "tanh_ratio", detail::tanh_ratio_value, detail::tanh_ratio_slope); }

Var atanh_ratio(Var a) { return unary(a, "atanh_ratio", detail::atanh_ratio_value, detail::atanh_ratio_slope); }

Var clamp_max(Var a, double hi) {
  return unary(
      a, "clamp_max", [hi](double x) { return std::min(x, hi); },
      [hi](double x) { return x < hi ? 1.0 : 0.0; });
}

Var clamp_min(Var a, double lo) {
  return unary(
      a, "clamp_min", [lo](double x) { return std::max(x, lo); },
      [lo](double x) { return x > lo ? 1.0 : 0.0; });
}

Var gather_rows(Var a, const std::vector<int>& index) {
  Tape& t = *a.tape;
  const Mat& src = a.value();
  Mat out(static_cast<Index>(index.size()), src.cols());
  for (std::size_t i = 0; i < index.size(); ++i) out.row(static_cast<Index>(i)) = src.row(index[i]);
  return t.record(std::move(out), "gather_rows", t.needs_grad(a), [a, index](Tape& tape, const Mat& g) {
    Mat ga = Mat::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < index.size(); ++i) ga.row(index[i]) += g.row(static_cast<Index>(i));
    tape.accumulate(a, ga);
  });
}

Var segment_sum(Var a, const std::vector<int>& segment, int num_segments) {
  Tape& t = *a.tape;
  const Mat& src = a.value();
  if (static_cast<Index>(segment.size()) != src.rows()) throw std::invalid_argument("segment size mismatch");
  Mat out = Mat::Zero(num_segments, src.cols());
  for (std::size_t i = 0; i < segment.size(); ++i) out.row(segment[i]) += src.row(static_cast<Index>(i));
  return t.record(std::move(out), "segment_sum", t.needs_grad(a), [a, segment](Tape& tape, const Mat& g) {
    Mat ga(a.rows(), a.cols());
    for (std::size_t i = 0; i < segment.size(); ++i) ga.row(static_cast<Index>(i)) = g.row(segment[i]);
    tape.accumulate(a, ga);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  Tape& t = *parts.front().tape;
  Index cols = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.rows() != parts.front().rows()) throw std::invalid_argument("concat_cols row mismatch");
    cols += p.cols();
    needs = needs || t.needs_grad(p);
  }
  Mat out(parts.front().rows(), cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return t.record(std::move(out), "concat_cols", needs, [parts](Tape& tape, const Mat& g) {
    Index at = 0;
    for (const auto& p : parts) {
      tape.accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat of nothing");
  Tape& t = *parts.front().tape;
  Index rows = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.cols() != parts.front().cols()) throw std::invalid_argument("concat_rows column mismatch");
    rows += p.rows();
    needs = needs || t.needs_grad(p);
  }
  Mat out(rows, parts.front().cols());
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return t.record(std::move(out), "concat_rows", needs, [parts](Tape& tape, const Mat& g) {
    Index at = 0;
    for (const auto& p : parts) {
      tape.accumulate(p, g.middleRows(at, p.rows()));
      at += p.rows();
    }
  });
}

Var segment_softmax(Var scores, const std::vector<int>& segment, int num_segments) {
  Tape& t = *scores.tape;
  const Mat& e = scores.value();
  if (e.cols() != 1) throw std::invalid_argument("segment_softmax expects a column");
  // The per-segment max shift cancels in the ratio, so it enters as a constant.
  Mat seg_max = Mat::Constant(num_segments, 1, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    seg_max(segment[i], 0) = std::max(seg_max(segment[i], 0), e(static_cast<Index>(i), 0));
  }
  Mat shift(e.rows(), 1);
  for (std::size_t i = 0; i < segment.size(); ++i) shift(static_cast<Index>(i), 0) = seg_max(segment[i], 0);
  Var ex = exp(scores - t.constant(std::move(shift), "softmax_shift"));
  Var denom = segment_sum(ex, segment, num_segments);
  return ex / gather_rows(denom, segment);
}

}  // namespace mhcl::ad
