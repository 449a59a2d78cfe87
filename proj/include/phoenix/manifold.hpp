#pragma once

// Poincare-ball primitives with curvature -c. All math is carried out in
// double precision.

#include "phoenix/linalg.hpp"

namespace phoenix::manifold {

/// Norm margin: every ball point satisfies sqrt(c)*|x| <= 1 - kBallMargin.
inline constexpr double kBallMargin = 1e-5;
/// Upper clamp on the artanh argument inside the distance.
inline constexpr double kArtanhClamp = 1.0 - 1e-7;
/// Below this value of sqrt(c)*|y| exp_map_origin and its Jacobian use
/// truncated Taylor series instead of the closed form.
inline constexpr double kSeriesThreshold = 1e-3;

class Curvature {
public:
    /// Magnitude c > 0; the manifold curvature is -c.
    explicit Curvature(double c = 1.0);

    double value() const noexcept { return c_; }
    double sqrt() const noexcept { return sqrt_c_; }

    friend bool operator==(const Curvature&, const Curvature&) = default;

private:
    double c_;
    double sqrt_c_;
};

/// A point strictly inside the ball. Construction projects onto the margin.
class BallPoint {
public:
    BallPoint(Vector coords, Curvature c);

    static BallPoint origin(Eigen::Index dim, Curvature c);

    const Vector& coords() const noexcept { return coords_; }
    Curvature curvature() const noexcept { return c_; }
    Eigen::Index dim() const noexcept { return coords_.size(); }

private:
    Vector coords_;
    Curvature c_;
};

BallPoint mobius_add(const BallPoint& x, const BallPoint& y);
BallPoint exp_map_origin(const Vector& tangent, Curvature c);
BallPoint project_to_ball(const Vector& v, Curvature c);
double geodesic_distance(const BallPoint& x, const BallPoint& y);

struct DistanceGradient {
    Vector wrt_x;
    Vector wrt_y;
    /// Set when x == y (or the artanh clamp is active); gradients are zero then.
    bool degenerate = false;
};

DistanceGradient grad_geodesic_distance(const BallPoint& x, const BallPoint& y);

// Unchecked kernels over raw coordinates. The tape primitives call these in
// inner loops, so they neither allocate nor validate.
namespace kernel {

void project(VecRef v, double c);

void mobius_add(ConstVecRef x, ConstVecRef y, double c, VecRef out);

double distance(ConstVecRef x, ConstVecRef y, double c);

/// Accumulates scale * dd/dx into gx and scale * dd/dy into gy. Returns false
/// (and touches nothing) at coincident points or when the clamp is active.
bool distance_grad(ConstVecRef x, ConstVecRef y, double c, double scale, VecRef gx, VecRef gy);

/// Exp_0^c(y) = tanh(sqrt(c)|y|) y / (sqrt(c)|y|), followed by projection.
void exp_map(ConstVecRef y, double c, VecRef out);

/// Vector-Jacobian product of exp_map (including the projection): gy += J^T g.
void exp_map_vjp(ConstVecRef y, double c, ConstVecRef grad_out, VecRef grad_in);

double euclidean_distance(ConstVecRef x, ConstVecRef y);

bool euclidean_distance_grad(ConstVecRef x, ConstVecRef y, double scale, VecRef gx, VecRef gy);

}  // namespace kernel

}  // namespace phoenix::manifold
