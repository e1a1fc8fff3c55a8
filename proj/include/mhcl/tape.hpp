#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mhcl::ad {

using Mat = Eigen::MatrixXd;

class Tape;

/// Handle to a tape node. Cheap to copy; valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Records matrix operations for reverse-mode differentiation.
///
/// Elementwise binary ops broadcast a 1x1 operand against anything, an Nx1
/// operand across columns and a 1xC operand across rows.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat& grad)>;

  Var constant(Mat value, const char* op = "constant");
  Var parameter(Mat value, const char* op = "parameter");

  /// Internal: appends an op node; `backward` is dropped when no parent needs grad.
  Var record(Mat value, const char* op, bool needs_grad, Backward backward);

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient accumulated by backward(); zero matrix when unreached.
  Mat grad(Var v) const;
  void accumulate(Var v, const Mat& g);
  void accumulate(Var v, Mat&& g);

  /// Seeds d(output)/d(output) = 1 for a 1x1 output and propagates.
  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }

  /// Identity of the first node with a non-finite value, if any.
  std::optional<std::string> first_non_finite() const;
  /// The first op whose backward pass produced a non-finite gradient.
  const std::optional<std::string>& first_bad_gradient() const { return bad_gradient_; }

 private:
  struct Node {
    Mat value;
    Mat grad;
    const char* op;
    bool needs_grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::size_t running_ = 0;
  std::optional<std::string> bad_gradient_;
};

// Elementwise arithmetic with broadcasting.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator*(Var a, double s);
Var operator*(double s, Var a);
Var operator+(Var a, double s);
Var operator+(double s, Var a);
Var operator-(double s, Var a);
Var operator-(Var a, double s);
Var operator/(double s, Var a);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var row_sum(Var a);
Var sum(Var a);

Var sqrt(Var a);  // derivative taken as 0 at 0
Var exp(Var a);
Var log(Var a);
Var log1p(Var a);
Var softplus(Var a);
Var leaky_relu(Var a, double slope);
/// tanh(x)/x, continuous at 0.
Var tanh_ratio(Var a);
/// artanh(x)/x with x clamped to (-1 + 1e-12, 1 - 1e-12); zero slope outside.
Var atanh_ratio(Var a);
Var clamp_max(Var a, double hi);
Var clamp_min(Var a, double lo);

Var gather_rows(Var a, const std::vector<int>& index);
Var segment_sum(Var a, const std::vector<int>& segment, int num_segments);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);

/// Softmax of an Nx1 score column within each segment.
Var segment_softmax(Var scores, const std::vector<int>& segment, int num_segments);

}  // namespace mhcl::ad
