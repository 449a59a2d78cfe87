#include "phoenix/ops.hpp"

#include <cmath>
#include <string>

#include "phoenix/error.hpp"
#include "phoenix/manifold.hpp"

namespace phoenix::ops {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw StructuralError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
    }
}

void require_row(const Matrix& v, Eigen::Index cols, const char* op) {
    if (v.rows() != 1 || v.cols() != cols) {
        throw StructuralError(std::string(op) + ": expected 1x" + std::to_string(cols) + " row, got " + shape(v));
    }
}

Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

double softplus_value(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var affine(Tape& t, Var x, Var w, Var b) {
    const Matrix& xv = t.value(x);
    const Matrix& wv = t.value(w);
    if (xv.cols() != wv.cols()) {
        throw StructuralError("affine: input " + shape(xv) + " incompatible with weight " + shape(wv));
    }
    Matrix out = xv * wv.transpose();
    if (b.valid()) {
        require_row(t.value(b), wv.rows(), "affine bias");
        out.rowwise() += t.value(b).row(0);
        return t.record(std::move(out), {x, w, b}, [x, w, b](const Matrix& g, Tape& tp) {
            if (tp.requires_grad(x)) tp.accumulate(x, g * tp.value(w));
            if (tp.requires_grad(w)) tp.accumulate(w, g.transpose() * tp.value(x));
            tp.accumulate(b, g.colwise().sum());
        });
    }
    return t.record(std::move(out), {x, w}, [x, w](const Matrix& g, Tape& tp) {
        if (tp.requires_grad(x)) tp.accumulate(x, g * tp.value(w));
        if (tp.requires_grad(w)) tp.accumulate(w, g.transpose() * tp.value(x));
    });
}

Var matmul(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (av.cols() != bv.rows()) throw StructuralError("matmul: " + shape(av) + " * " + shape(bv));
    return t.record(av * bv, {a, b}, [a, b](const Matrix& g, Tape& tp) {
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

Var matmul_nt(Tape& t, Var a, Var b) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (av.cols() != bv.cols()) throw StructuralError("matmul_nt: " + shape(av) + " * " + shape(bv) + "^T");
    return t.record(av * bv.transpose(), {a, b}, [a, b](const Matrix& g, Tape& tp) {
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b));
        if (tp.requires_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
    });
}

Var add(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "add");
    return t.record(t.value(a) + t.value(b), {a, b}, [a, b](const Matrix& g, Tape& tp) {
        tp.accumulate(a, g);
        tp.accumulate(b, g);
    });
}

Var sub(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "sub");
    return t.record(t.value(a) - t.value(b), {a, b}, [a, b](const Matrix& g, Tape& tp) {
        tp.accumulate(a, g);
        tp.accumulate(b, -g);
    });
}

Var hadamard(Tape& t, Var a, Var b) {
    require_same_shape(t.value(a), t.value(b), "hadamard");
    return t.record(t.value(a).cwiseProduct(t.value(b)), {a, b}, [a, b](const Matrix& g, Tape& tp) {
        if (tp.requires_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
        if (tp.requires_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
    });
}

Var scale(Tape& t, Var a, double s) {
    return t.record(s * t.value(a), {a}, [a, s](const Matrix& g, Tape& tp) { tp.accumulate(a, s * g); });
}

Var softplus(Tape& t, Var a) {
    Matrix out = t.value(a).unaryExpr(&softplus_value);
    return t.record(std::move(out), {a}, [a](const Matrix& g, Tape& tp) {
        tp.accumulate(a, g.cwiseProduct(tp.value(a).unaryExpr(&sigmoid)));
    });
}

Var tanh(Tape& t, Var a) {
    Matrix out = t.value(a).array().tanh().matrix();
    Matrix deriv = (1.0 - out.array().square()).matrix();
    return t.record(std::move(out), {a}, [a, deriv = std::move(deriv)](const Matrix& g, Tape& tp) {
        tp.accumulate(a, g.cwiseProduct(deriv));
    });
}

Var exp(Tape& t, Var a) {
    Matrix out = t.value(a).array().exp().matrix();
    Matrix deriv = out;
    return t.record(std::move(out), {a}, [a, deriv = std::move(deriv)](const Matrix& g, Tape& tp) {
        tp.accumulate(a, g.cwiseProduct(deriv));
    });
}

Var xlogx(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    Matrix out = v.unaryExpr([](double x) { return x > 0.0 ? x * std::log(x) : 0.0; });
    return t.record(std::move(out), {a}, [a](const Matrix& g, Tape& tp) {
        Matrix d = tp.value(a).unaryExpr([](double x) { return x > 0.0 ? std::log(x) + 1.0 : 0.0; });
        tp.accumulate(a, g.cwiseProduct(d));
    });
}

Var sum(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    const auto rows = v.rows();
    const auto cols = v.cols();
    return t.record(scalar_matrix(v.sum()), {a}, [a, rows, cols](const Matrix& g, Tape& tp) {
        tp.accumulate(a, Matrix::Constant(rows, cols, g(0, 0)));
    });
}

Var mean(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    if (v.size() == 0) throw StructuralError("mean of an empty node");
    const auto rows = v.rows();
    const auto cols = v.cols();
    const double n = static_cast<double>(v.size());
    return t.record(scalar_matrix(v.sum() / n), {a}, [a, rows, cols, n](const Matrix& g, Tape& tp) {
        tp.accumulate(a, Matrix::Constant(rows, cols, g(0, 0) / n));
    });
}

Var mean_rows(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    if (v.rows() == 0) throw StructuralError("mean_rows of an empty node");
    const auto rows = v.rows();
    return t.record(v.colwise().mean(), {a}, [a, rows](const Matrix& g, Tape& tp) {
        Matrix ga = g.replicate(rows, 1) / static_cast<double>(rows);
        tp.accumulate(a, ga);
    });
}

Var upper_triangle_sum(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    if (v.rows() != v.cols()) throw StructuralError("upper_triangle_sum: non-square " + shape(v));
    const auto n = v.rows();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) s += v(i, j);
    }
    return t.record(scalar_matrix(s), {a}, [a, n](const Matrix& g, Tape& tp) {
        Matrix ga = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) ga(i, j) = g(0, 0);
        }
        tp.accumulate(a, ga);
    });
}

Var element(Tape& t, Var a, Eigen::Index row, Eigen::Index col) {
    const Matrix& v = t.value(a);
    if (row < 0 || row >= v.rows() || col < 0 || col >= v.cols()) {
        throw StructuralError("element: index out of range for " + shape(v));
    }
    const auto rows = v.rows();
    const auto cols = v.cols();
    return t.record(scalar_matrix(v(row, col)), {a}, [a, rows, cols, row, col](const Matrix& g, Tape& tp) {
        Matrix ga = Matrix::Zero(rows, cols);
        ga(row, col) = g(0, 0);
        tp.accumulate(a, ga);
    });
}

Var row_softmax(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    Matrix p(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double mx = v.row(i).maxCoeff();
        p.row(i) = (v.row(i).array() - mx).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    Matrix cached = p;
    return t.record(std::move(p), {a}, [a, p = std::move(cached)](const Matrix& g, Tape& tp) {
        Matrix gp = g.cwiseProduct(p);
        Matrix ga = gp - p.cwiseProduct(gp.rowwise().sum().replicate(1, p.cols()));
        tp.accumulate(a, ga);
    });
}

Var row_logsumexp(Tape& t, Var a) {
    const Matrix& v = t.value(a);
    Matrix out(v.rows(), 1);
    Matrix p(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double mx = v.row(i).maxCoeff();
        p.row(i) = (v.row(i).array() - mx).exp().matrix();
        const double z = p.row(i).sum();
        out(i, 0) = mx + std::log(z);
        p.row(i) /= z;
    }
    return t.record(std::move(out), {a}, [a, p = std::move(p)](const Matrix& g, Tape& tp) {
        Matrix ga = p.cwiseProduct(g.replicate(1, p.cols()));
        tp.accumulate(a, ga);
    });
}

Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps) {
    const Matrix& xv = t.value(x);
    const auto cols = xv.cols();
    require_row(t.value(gain), cols, "layer_norm gain");
    require_row(t.value(shift), cols, "layer_norm shift");
    Matrix xhat(xv.rows(), cols);
    Vector inv_std(xv.rows());
    for (Eigen::Index i = 0; i < xv.rows(); ++i) {
        const double mu = xv.row(i).mean();
        const double var = (xv.row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (xv.row(i).array() - mu) * inv_std(i);
    }
    Matrix out = xhat;
    out.array().rowwise() *= t.value(gain).row(0).array();
    out.rowwise() += t.value(shift).row(0);
    return t.record(std::move(out), {x, gain, shift},
                    [x, gain, shift, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Matrix& g, Tape& tp) {
                        tp.accumulate(shift, g.colwise().sum());
                        tp.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                        if (!tp.requires_grad(x)) return;
                        Matrix gxhat = g;
                        gxhat.array().rowwise() *= tp.value(gain).row(0).array();
                        const double n = static_cast<double>(xhat.cols());
                        Matrix gx(xhat.rows(), xhat.cols());
                        for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
                            const double m1 = gxhat.row(i).sum() / n;
                            const double m2 = gxhat.row(i).dot(xhat.row(i)) / n;
                            gx.row(i) = inv_std(i) * (gxhat.row(i).array() - m1 - xhat.row(i).array() * m2).matrix();
                        }
                        tp.accumulate(x, gx);
                    });
}

Var selective_scan(Tape& t, Var delta, Var b, Var c, Var u, Var a_log, Var skip) {
    const Matrix& dv = t.value(delta);
    const Matrix& bv = t.value(b);
    const Matrix& cv = t.value(c);
    const Matrix& uv = t.value(u);
    require_same_shape(dv, bv, "selective_scan b");
    require_same_shape(dv, cv, "selective_scan c");
    require_same_shape(dv, uv, "selective_scan u");
    const auto steps = dv.rows();
    const auto width = dv.cols();
    require_row(t.value(a_log), width, "selective_scan a_log");
    require_row(t.value(skip), width, "selective_scan skip");

    const Eigen::RowVectorXd decay = -t.value(a_log).row(0).array().exp().matrix();
    Matrix gate = dv;
    gate.array().rowwise() *= decay.array();
    gate = gate.array().exp().matrix();
    const Matrix drive = dv.cwiseProduct(bv).cwiseProduct(uv);

    Matrix state(steps, width);
    state.row(0) = drive.row(0);
    for (Eigen::Index s = 1; s < steps; ++s) {
        state.row(s) = gate.row(s).cwiseProduct(state.row(s - 1)) + drive.row(s);
    }
    Matrix out = cv.cwiseProduct(state);
    out += uv.cwiseProduct(t.value(skip).replicate(steps, 1));

    return t.record(
        std::move(out), {delta, b, c, u, a_log, skip},
        [=, gate = std::move(gate), state = std::move(state)](const Matrix& g, Tape& tp) {
            const Matrix& dv = tp.value(delta);
            const Matrix& bv = tp.value(b);
            const Matrix& cv = tp.value(c);
            const Matrix& uv = tp.value(u);
            const Eigen::RowVectorXd skipv = tp.value(skip).row(0);

            // dL/ds_t, accumulated backward in time.
            Matrix gs(steps, width);
            Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(width);
            for (Eigen::Index s = steps; s-- > 0;) {
                gs.row(s) = g.row(s).cwiseProduct(cv.row(s)) + carry;
                carry = gs.row(s).cwiseProduct(gate.row(s));
            }
            // s_{t-1}, with s_0 = 0.
            Matrix prev = Matrix::Zero(steps, width);
            if (steps > 1) prev.bottomRows(steps - 1) = state.topRows(steps - 1);
            const Matrix g_gate = gs.cwiseProduct(prev).cwiseProduct(gate);

            if (tp.requires_grad(delta)) {
                Matrix gd = gs.cwiseProduct(bv).cwiseProduct(uv);
                Matrix decay_term = g_gate;
                decay_term.array().rowwise() *= decay.array();
                tp.accumulate(delta, gd + decay_term);
            }
            if (tp.requires_grad(b)) tp.accumulate(b, gs.cwiseProduct(dv).cwiseProduct(uv));
            if (tp.requires_grad(c)) tp.accumulate(c, g.cwiseProduct(state));
            if (tp.requires_grad(u)) {
                Matrix gu = gs.cwiseProduct(dv).cwiseProduct(bv) + g.cwiseProduct(skipv.replicate(steps, 1));
                tp.accumulate(u, gu);
            }
            if (tp.requires_grad(a_log)) {
                // d gate / d a = gate * delta and d a / d a_log = a.
                Matrix ga = g_gate.cwiseProduct(dv).colwise().sum();
                ga.array() *= decay.array();
                tp.accumulate(a_log, ga);
            }
            tp.accumulate(skip, g.cwiseProduct(uv).colwise().sum());
        });
}

Var exp_map_rows(Tape& t, Var tangent, double curvature) {
    const Matrix& y = t.value(tangent);
    Matrix out(y.rows(), y.cols());
    Vector tmp(y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        manifold::kernel::exp_map(y.row(i).transpose(), curvature, tmp);
        out.row(i) = tmp.transpose();
    }
    return t.record(std::move(out), {tangent}, [tangent, curvature](const Matrix& g, Tape& tp) {
        const Matrix& y = tp.value(tangent);
        Matrix gy = Matrix::Zero(y.rows(), y.cols());
        Vector acc(y.cols());
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            acc.setZero();
            manifold::kernel::exp_map_vjp(y.row(i).transpose(), curvature, g.row(i).transpose(), acc);
            gy.row(i) = acc.transpose();
        }
        tp.accumulate(tangent, gy);
    });
}

namespace {

template <typename DistFn, typename GradFn>
Var pairwise(Tape& t, Var a, Var b, DistFn dist, GradFn grad) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    if (av.cols() != bv.cols()) throw StructuralError("pairwise distance: " + shape(av) + " vs " + shape(bv));
    Matrix out(av.rows(), bv.rows());
    for (Eigen::Index i = 0; i < av.rows(); ++i) {
        for (Eigen::Index j = 0; j < bv.rows(); ++j) {
            out(i, j) = dist(av.row(i).transpose(), bv.row(j).transpose());
        }
    }
    return t.record(std::move(out), {a, b}, [a, b, grad](const Matrix& g, Tape& tp) {
        const Matrix& av = tp.value(a);
        const Matrix& bv = tp.value(b);
        Matrix ga = Matrix::Zero(av.rows(), av.cols());
        Matrix gb = Matrix::Zero(bv.rows(), bv.cols());
        Vector gx(av.cols());
        Vector gy(av.cols());
        for (Eigen::Index i = 0; i < av.rows(); ++i) {
            for (Eigen::Index j = 0; j < bv.rows(); ++j) {
                if (g(i, j) == 0.0) continue;
                gx.setZero();
                gy.setZero();
                if (grad(av.row(i).transpose(), bv.row(j).transpose(), g(i, j), gx, gy)) {
                    ga.row(i) += gx.transpose();
                    gb.row(j) += gy.transpose();
                }
            }
        }
        // a and b may be the same node (prototype self-distances).
        tp.accumulate(a, ga);
        tp.accumulate(b, gb);
    });
}

}  // namespace

Var poincare_distances(Tape& t, Var a, Var b, double curvature) {
    return pairwise(
        t, a, b, [curvature](ConstVecRef x, ConstVecRef y) { return manifold::kernel::distance(x, y, curvature); },
        [curvature](ConstVecRef x, ConstVecRef y, double s, VecRef gx, VecRef gy) {
            return manifold::kernel::distance_grad(x, y, curvature, s, gx, gy);
        });
}

Var euclidean_distances(Tape& t, Var a, Var b) {
    return pairwise(
        t, a, b, [](ConstVecRef x, ConstVecRef y) { return manifold::kernel::euclidean_distance(x, y); },
        [](ConstVecRef x, ConstVecRef y, double s, VecRef gx, VecRef gy) {
            return manifold::kernel::euclidean_distance_grad(x, y, s, gx, gy);
        });
}

}  // namespace phoenix::ops
