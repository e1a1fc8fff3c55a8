#pragma once

#include "mhcl/tape.hpp"

// Row-batched Poincare-ball operations on the tape: every row of a matrix is a
// point (or tangent vector at the origin). Curvatures are 1x1 vars.
namespace mhcl::ball {

using ad::Var;

Var row_norm(Var x);
Var project(Var x, Var c);
Var exp0(Var v, Var c);
Var log0(Var y, Var c);
/// Rowwise x (+)_c y; a single-row y is broadcast against every row of x.
Var mobius_add(Var x, Var y, Var c);
/// Rowwise M (x)_c x for a weight M of shape out x in.
Var matvec(Var weight, Var x, Var c);
Var leaky_activation(Var x, Var c);
/// Rowwise geodesic distance; returns an Nx1 column.
Var distance(Var x, Var y, Var c);

}  // namespace mhcl::ball
