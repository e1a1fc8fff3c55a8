#include "mhcl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mhcl::geometry {
namespace {

void require_same_curvature(const PoincarePoint& x, const PoincarePoint& y) {
  if (x.c != y.c) {
    throw std::invalid_argument("curvature mismatch: " + std::to_string(x.c) +
                                " vs " + std::to_string(y.c));
  }
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("dimension mismatch between points");
  }
}

void require_finite(const Vector& v) {
  if (!v.allFinite()) throw std::invalid_argument("non-finite coordinates");
}

// tanh(r) / r with the removable singularity at 0 filled in.
double tanh_ratio(double r) {
  if (std::abs(r) < 1e-8) return 1.0 - r * r / 3.0;
  return std::tanh(r) / r;
}

double atanh_ratio(double r) {
  r = std::clamp(r, -1.0 + kAtanhClamp, 1.0 - kAtanhClamp);
  if (std::abs(r) < 1e-8) return 1.0 + r * r / 3.0;
  return std::atanh(r) / r;
}

}  // namespace

double softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("softplus image must be positive");
  if (y > 30.0) return y + std::log(-std::expm1(-y));
  return std::log(std::expm1(y));
}

CurvatureParam CurvatureParam::from_value(double c) {
  return CurvatureParam{inverse_softplus(c)};
}

PoincarePoint PoincarePoint::origin(Eigen::Index dim, double c) {
  return PoincarePoint{Vector::Zero(dim), c};
}

PoincarePoint project_to_ball(const Vector& v, double c) {
  require_finite(v);
  const double max_norm = (1.0 - kBallEps) / std::sqrt(c);
  const double norm = v.norm();
  if (norm >= max_norm) return PoincarePoint{v * (max_norm / norm), c};
  return PoincarePoint{v, c};
}

PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y) {
  require_same_curvature(x, y);
  const double c = x.c;
  const double xy = x.coords.dot(y.coords);
  const double x2 = x.coords.squaredNorm();
  const double y2 = y.coords.squaredNorm();
  const double den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
  Vector num = (1.0 + 2.0 * c * xy + c * y2) * x.coords + (1.0 - c * x2) * y.coords;
  return project_to_ball(num / den, c);
}

PoincarePoint exp_map_0(const Vector& v, double c) {
  require_finite(v);
  const double sc = std::sqrt(c);
  return project_to_ball(v * tanh_ratio(sc * v.norm()), c);
}

Vector log_map_0(const PoincarePoint& y) {
  const double sc = std::sqrt(y.c);
  return y.coords * atanh_ratio(sc * y.coords.norm());
}

PoincarePoint hyp_matvec(const Matrix& m, const PoincarePoint& x) {
  if (m.cols() != x.dim()) {
    throw std::invalid_argument("hyp_matvec: matrix has " + std::to_string(m.cols()) +
                                " columns, point has dimension " + std::to_string(x.dim()));
  }
  return exp_map_0(m * log_map_0(x), x.c);
}

Vector apply_activation(const Vector& v, Activation act) {
  if (act == Activation::identity) return v;
  return v.unaryExpr([](double a) { return a >= 0.0 ? a : kLeakySlope * a; });
}

PoincarePoint hyp_activation(const PoincarePoint& x, Activation act) {
  return exp_map_0(apply_activation(log_map_0(x), act), x.c);
}

double hyp_distance(const PoincarePoint& x, const PoincarePoint& y) {
  require_same_curvature(x, y);
  const double c = x.c;
  const double diff2 = (x.coords - y.coords).squaredNorm();
  const double den = (1.0 - c * x.coords.squaredNorm()) * (1.0 - c * y.coords.squaredNorm());
  // acosh(1 + delta), written so that small delta keeps full precision.
  const double delta = std::max(0.0, 2.0 * c * diff2 / den);
  return std::log1p(delta + std::sqrt(delta * (delta + 2.0))) / std::sqrt(c);
}

bool in_ball(const PoincarePoint& x) {
  const double bound = (1.0 - kBallEps) * (1.0 - kBallEps);
  return x.c * x.coords.squaredNorm() <= bound * (1.0 + 1e-12);
}

}  // namespace mhcl::geometry
