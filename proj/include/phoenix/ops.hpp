#pragma once

// Differentiable primitives recorded on a Tape. Each function computes its
// forward value eagerly and registers a local backward rule.

#include "phoenix/tape.hpp"

namespace phoenix::ops {

// --- linear algebra -------------------------------------------------------

/// x * w^T + b, with b a 1 x out row broadcast over rows (b may be invalid).
Var affine(Tape& t, Var x, Var w, Var b = {});
/// a * b
Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_nt(Tape& t, Var a, Var b);

// --- elementwise ----------------------------------------------------------

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var hadamard(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var softplus(Tape& t, Var a);
Var tanh(Tape& t, Var a);
Var exp(Tape& t, Var a);
/// x log x with the convention 0 log 0 = 0 (zero gradient at 0).
Var xlogx(Tape& t, Var a);

// --- reductions -----------------------------------------------------------

Var sum(Tape& t, Var a);
Var mean(Tape& t, Var a);
/// Column means, 1 x cols.
Var mean_rows(Tape& t, Var a);
/// Sum of entries strictly above the diagonal of a square matrix.
Var upper_triangle_sum(Tape& t, Var a);
Var element(Tape& t, Var a, Eigen::Index row, Eigen::Index col);

// --- row-wise normalizers -------------------------------------------------

/// Softmax along each row, max-subtracted.
Var row_softmax(Tape& t, Var a);
/// log sum exp along each row, rows x 1, max-subtracted.
Var row_logsumexp(Tape& t, Var a);
/// Per-row layer norm with per-column gain/shift (1 x cols each).
Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps = 1e-5);

// --- sequence model -------------------------------------------------------

/// Diagonal selective scan. With a = -exp(a_log):
///   s_t = exp(delta_t * a) * s_{t-1} + delta_t * b_t * u_t,  s_0 = 0
///   y_t = c_t * s_t + skip * u_t
/// delta, b, c, u are T x d; a_log and skip are 1 x d.
Var selective_scan(Tape& t, Var delta, Var b, Var c, Var u, Var a_log, Var skip);

// --- manifold -------------------------------------------------------------

/// Row-wise Exp_0^c onto the Poincare ball (with boundary projection).
Var exp_map_rows(Tape& t, Var tangent, double curvature);
/// Pairwise geodesic distances between rows of a and rows of b.
Var poincare_distances(Tape& t, Var a, Var b, double curvature);
/// Pairwise Euclidean distances between rows of a and rows of b.
Var euclidean_distances(Tape& t, Var a, Var b);

}  // namespace phoenix::ops
