#include "mhcl/ball_ops.hpp"

#include <cmath>

#include "mhcl/geometry.hpp"
#include "ratio.hpp"

namespace mhcl::ball {

Var row_norm(Var x) { return ad::sqrt(ad::row_sum(x * x)); }

namespace {

using ad::Tape;
using Eigen::Index;
using ad::Mat;

// Column-major friendly row norms.
Eigen::VectorXd row_norms(const Mat& x) {
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(x.rows());
  for (Index j = 0; j < x.cols(); ++j) acc += x.col(j).array().square();
  return acc.sqrt().matrix();
}

// out_i = x_i * ratio(sqrt(c) |x_i|), one fused node.
template <typename R, typename S>
Var radial_scale(Var x, Var c, const char* op, R ratio, S slope_over_arg) {
  Tape& t = *x.tape;
  const double cv = c.value()(0, 0);
  const double s = std::sqrt(cv);
  const Eigen::VectorXd norms = row_norms(x.value());
  const Eigen::VectorXd k = (s * norms).unaryExpr(ratio);
  Mat out = x.value().array().colwise() * k.array();
  const bool needs = t.needs_grad(x) || t.needs_grad(c);
  return t.record(std::move(out), op, needs, [x, c, cv, s, norms, k, slope_over_arg](Tape& tape, const Mat& g) {
    const Mat& xv = tape.value(x);
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(xv.rows());
    for (Index j = 0; j < xv.cols(); ++j) gx.array() += g.col(j).array() * xv.col(j).array();
    const Eigen::VectorXd q = (s * norms).unaryExpr(slope_over_arg);
    if (tape.needs_grad(x)) {
      Mat dx = g.array().colwise() * k.array();
      dx.array() += xv.array().colwise() * (cv * q.cwiseProduct(gx)).array();
      tape.accumulate(x, std::move(dx));
    }
    if (tape.needs_grad(c)) {
      const double dc = 0.5 * (gx.cwiseProduct(q).cwiseProduct(norms.cwiseAbs2())).sum();
      tape.accumulate(c, Mat::Constant(1, 1, dc));
    }
  });
}

}  // namespace

Var project(Var x, Var c) {
  Tape& t = *x.tape;
  const double cv = c.value()(0, 0);
  const double max_norm = (1.0 - geometry::kBallEps) / std::sqrt(cv);
  const Eigen::VectorXd norms = row_norms(x.value());
  Mat out = x.value();
  for (Index i = 0; i < out.rows(); ++i) {
    if (norms(i) > max_norm) out.row(i) *= max_norm / norms(i);
  }
  const bool needs = t.needs_grad(x) || t.needs_grad(c);
  return t.record(std::move(out), "project", needs, [x, c, cv, max_norm, norms](Tape& tape, const Mat& g) {
    const Mat& xv = tape.value(x);
    Mat dx = g;
    double dc = 0.0;
    for (Index i = 0; i < xv.rows(); ++i) {
      const double n = norms(i);
      if (!(n > max_norm)) continue;
      const double gx = g.row(i).dot(xv.row(i));
      dx.row(i) = (max_norm / n) * (g.row(i) - (gx / (n * n)) * xv.row(i));
      dc += (gx / n) * (-max_norm / (2.0 * cv));
    }
    if (tape.needs_grad(x)) tape.accumulate(x, std::move(dx));
    if (tape.needs_grad(c)) tape.accumulate(c, Mat::Constant(1, 1, dc));
  });
}

Var exp0(Var v, Var c) {
  return project(
      radial_scale(v, c, "exp0", ad::detail::tanh_ratio_value, ad::detail::tanh_ratio_slope_over_x), c);
}

Var log0(Var y, Var c) {
  return radial_scale(y, c, "log0", ad::detail::atanh_ratio_value, ad::detail::atanh_ratio_slope_over_x);
}

Var mobius_add(Var x, Var y, Var c) {
  Var xy = ad::row_sum(x * y);
  Var x2 = ad::row_sum(x * x);
  Var y2 = ad::row_sum(y * y);
  Var two_cxy = 2.0 * c * xy;
  Var num = (1.0 + two_cxy + c * y2) * x + (1.0 - c * x2) * y;
  Var den = 1.0 + two_cxy + c * c * x2 * y2;
  return project(num / den, c);
}

Var matvec(Var weight, Var x, Var c) { return exp0(ad::matmul(log0(x, c), ad::transpose(weight)), c); }

Var leaky_activation(Var x, Var c) { return exp0(ad::leaky_relu(log0(x, c), geometry::kLeakySlope), c); }

Var distance(Var x, Var y, Var c) {
  Var diff = x - y;
  Var diff2 = ad::row_sum(diff * diff);
  Var den = (1.0 - c * ad::row_sum(x * x)) * (1.0 - c * ad::row_sum(y * y));
  Var delta = ad::clamp_min(2.0 * c * diff2 / den, 0.0);
  return ad::log1p(delta + ad::sqrt(delta * (delta + 2.0))) / ad::sqrt(c);
}

}  // namespace mhcl::ball
