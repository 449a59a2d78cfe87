#include "phoenix/manifold.hpp"

#include <cmath>
#include <string>

#include "phoenix/error.hpp"

namespace phoenix::manifold {

namespace {

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw NumericError(std::string(what) + ": non-finite coordinates");
    }
}

void require_same_ball(const BallPoint& x, const BallPoint& y) {
    if (x.dim() != y.dim()) {
        throw StructuralError("ball points differ in dimension: " + std::to_string(x.dim()) + " vs " +
                              std::to_string(y.dim()));
    }
    if (!(x.curvature() == y.curvature())) {
        throw StructuralError("ball points live on balls of different curvature");
    }
}

}  // namespace

Curvature::Curvature(double c) : c_(c), sqrt_c_(std::sqrt(c)) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ConfigError("curvature magnitude must be positive and finite, got " + std::to_string(c));
    }
}

BallPoint::BallPoint(Vector coords, Curvature c) : coords_(std::move(coords)), c_(c) {
    require_finite(coords_, "BallPoint");
    kernel::project(coords_, c_.value());
}

BallPoint BallPoint::origin(Eigen::Index dim, Curvature c) { return BallPoint(Vector::Zero(dim), c); }

BallPoint mobius_add(const BallPoint& x, const BallPoint& y) {
    require_same_ball(x, y);
    Vector out(x.dim());
    kernel::mobius_add(x.coords(), y.coords(), x.curvature().value(), out);
    return BallPoint(std::move(out), x.curvature());
}

BallPoint exp_map_origin(const Vector& tangent, Curvature c) {
    require_finite(tangent, "exp_map_origin");
    Vector out(tangent.size());
    kernel::exp_map(tangent, c.value(), out);
    return BallPoint(std::move(out), c);
}

BallPoint project_to_ball(const Vector& v, Curvature c) { return BallPoint(v, c); }

double geodesic_distance(const BallPoint& x, const BallPoint& y) {
    require_same_ball(x, y);
    return kernel::distance(x.coords(), y.coords(), x.curvature().value());
}

DistanceGradient grad_geodesic_distance(const BallPoint& x, const BallPoint& y) {
    require_same_ball(x, y);
    DistanceGradient g{Vector::Zero(x.dim()), Vector::Zero(y.dim()), false};
    g.degenerate = !kernel::distance_grad(x.coords(), y.coords(), x.curvature().value(), 1.0, g.wrt_x, g.wrt_y);
    return g;
}

namespace kernel {

void project(VecRef v, double c) {
    const double limit = (1.0 - kBallMargin) / std::sqrt(c);
    const double norm = v.norm();
    if (c * norm * norm >= (1.0 - kBallMargin) * (1.0 - kBallMargin)) {
        v *= limit / norm;
        // the rescale can land an ulp or two outside
        while (std::sqrt(c) * v.norm() > 1.0 - kBallMargin) v *= 1.0 - 0x1p-52;
    }
}

void mobius_add(ConstVecRef x, ConstVecRef y, double c, VecRef out) {
    const double xy = x.dot(y);
    const double xx = x.squaredNorm();
    const double yy = y.squaredNorm();
    const double num_x = 1.0 + 2.0 * c * xy + c * yy;
    const double num_y = 1.0 - c * xx;
    const double den = 1.0 + 2.0 * c * xy + c * c * xx * yy;
    out = (num_x * x + num_y * y) / den;
    project(out, c);
}

// |(-x) (+)_c y|^2 = |x - y|^2 / (1 - 2c<x,y> + c^2|x|^2|y|^2), and the
// denominator equals (1 - c|x|^2)(1 - c|y|^2) + c|x - y|^2. The latter form is
// exactly symmetric in floating point and accurate for nearby points.
double distance(ConstVecRef x, ConstVecRef y, double c) {
    const double delta = (x - y).squaredNorm();
    const double alpha = 1.0 - c * x.squaredNorm();
    const double beta = 1.0 - c * y.squaredNorm();
    const double ab = alpha * beta;
    const double denom = ab + c * delta;
    const double w = std::sqrt(c * delta / denom);
    if (w > kArtanhClamp) return 2.0 / std::sqrt(c) * std::atanh(kArtanhClamp);
    // 2 artanh(w) = log((1+w)^2 / (1-w^2)) with 1-w^2 = ab/denom; no 1-w cancellation near the rim
    return std::log((1.0 + w) * (1.0 + w) * (denom / ab)) / std::sqrt(c);
}

bool distance_grad(ConstVecRef x, ConstVecRef y, double c, double scale, VecRef gx, VecRef gy) {
    const double delta = (x - y).squaredNorm();
    if (delta == 0.0) return false;
    const double alpha = 1.0 - c * x.squaredNorm();
    const double beta = 1.0 - c * y.squaredNorm();
    const double denom = alpha * beta + c * delta;
    if (std::sqrt(c * delta / denom) > kArtanhClamp) return false;
    const double k = 2.0 * scale / std::sqrt(delta * denom);
    gx += k * ((x - y) + (c * delta / alpha) * x);
    gy += k * ((y - x) + (c * delta / beta) * y);
    return true;
}

void exp_map(ConstVecRef y, double c, VecRef out) {
    const double sqrt_c = std::sqrt(c);
    const double s = sqrt_c * y.norm();
    if (s < kSeriesThreshold) {
        const double s2 = s * s;
        out = (1.0 - s2 / 3.0 + 2.0 * s2 * s2 / 15.0) * y;
    } else {
        out = (std::tanh(s) / s) * y;
    }
    project(out, c);
}

void exp_map_vjp(ConstVecRef y, double c, ConstVecRef grad_out, VecRef grad_in) {
    const double sqrt_c = std::sqrt(c);
    const double r = y.norm();
    const double s = sqrt_c * r;
    if (s < kSeriesThreshold) {
        // f(s) = tanh(s)/s and f'(r)/r, both by Taylor expansion around 0.
        const double s2 = s * s;
        const double f = 1.0 - s2 / 3.0 + 2.0 * s2 * s2 / 15.0;
        const double fr = c * (-2.0 / 3.0 + 8.0 * s2 / 15.0);
        grad_in += f * grad_out + (fr * y.dot(grad_out)) * y;
        return;
    }
    const double t = std::tanh(s);
    if (t >= 1.0 - kBallMargin) {
        // Projected branch: out = (1 - margin)/sqrt(c) * y/|y|, tangential Jacobian only.
        const double k = (1.0 - kBallMargin) / (sqrt_c * r);
        grad_in += k * (grad_out - (y.dot(grad_out) / (r * r)) * y);
        return;
    }
    const double f = t / s;
    const double sech = 1.0 / std::cosh(s);
    const double fr = c * (s * sech * sech - t) / (s * s * s);
    grad_in += f * grad_out + (fr * y.dot(grad_out)) * y;
}

double euclidean_distance(ConstVecRef x, ConstVecRef y) { return (x - y).norm(); }

bool euclidean_distance_grad(ConstVecRef x, ConstVecRef y, double scale, VecRef gx, VecRef gy) {
    const double d = (x - y).norm();
    if (d == 0.0) return false;
    gx += (scale / d) * (x - y);
    gy += (scale / d) * (y - x);
    return true;
}

}  // namespace kernel

}  // namespace phoenix::manifold
