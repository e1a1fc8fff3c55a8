#pragma once

#include <Eigen/Dense>

namespace mhcl::geometry {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Margin kept between projected points and the ball boundary.
inline constexpr double kBallEps = 1e-5;
/// artanh arguments are clamped to (-1 + kAtanhClamp, 1 - kAtanhClamp).
inline constexpr double kAtanhClamp = 1e-12;
inline constexpr double kLeakySlope = 0.01;

double softplus(double x);
double inverse_softplus(double y);

/// Unconstrained curvature parameter; the magnitude is c = softplus(theta) > 0.
struct CurvatureParam {
  double theta = 0.0;

  double value() const { return softplus(theta); }
  static CurvatureParam from_value(double c);
};

/// A point of the Poincare ball of radius 1/sqrt(c).
struct PoincarePoint {
  Vector coords;
  double c = 1.0;

  Eigen::Index dim() const { return coords.size(); }
  static PoincarePoint origin(Eigen::Index dim, double c);
};

enum class Activation { identity, leaky_relu };

PoincarePoint project_to_ball(const Vector& v, double c);

PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y);

/// Exponential map at the origin.
PoincarePoint exp_map_0(const Vector& v, double c);
/// Logarithmic map at the origin; inverse of exp_map_0 inside the margin.
Vector log_map_0(const PoincarePoint& y);

/// M (x)_c x = exp0(M log0(x)).
PoincarePoint hyp_matvec(const Matrix& m, const PoincarePoint& x);

Vector apply_activation(const Vector& v, Activation act);
PoincarePoint hyp_activation(const PoincarePoint& x, Activation act);

double hyp_distance(const PoincarePoint& x, const PoincarePoint& y);

/// Conformal factor at the origin (lambda_0 = 2); the Riemannian length of a
/// tangent vector v at 0 is conformal_factor_origin() * ||v||.
inline constexpr double conformal_factor_origin() { return 2.0; }

/// True when c * ||x||^2 <= (1 - kBallEps)^2 up to rounding.
bool in_ball(const PoincarePoint& x);

}  // namespace mhcl::geometry
