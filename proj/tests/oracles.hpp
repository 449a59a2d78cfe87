#pragma once

// Independent reference implementations used by the tests. Written from the
// defining formulas, sharing no code with the library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "phoenix/linalg.hpp"

namespace oracle {

using phoenix::Matrix;
using phoenix::Vector;

inline Vector mobius_add(const Vector& x, const Vector& y, double c) {
    const double xy = x.dot(y);
    const double x2 = x.squaredNorm();
    const double y2 = y.squaredNorm();
    const Vector num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y;
    return num / (1.0 + 2.0 * c * xy + c * c * x2 * y2);
}

inline double distance(const Vector& x, const Vector& y, double c) {
    const double n = mobius_add(-x, y, c).norm();
    return 2.0 / std::sqrt(c) * std::atanh(std::sqrt(c) * n);
}

inline Vector exp0(const Vector& y, double c) {
    const double r = std::sqrt(c) * y.norm();
    if (r == 0.0) return Vector::Zero(y.size());
    return std::tanh(r) * y / r;
}

/// Central differences of a scalar function of one matrix.
inline Matrix numeric_grad(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-6) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double saved = x.data()[i];
        x.data()[i] = saved + h;
        const double up = f(x);
        x.data()[i] = saved - h;
        const double down = f(x);
        x.data()[i] = saved;
        g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double max_rel_error(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a.data()[i]), std::abs(b.data()[i]), 1e-6});
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]) / denom);
    }
    return worst;
}

struct Scored {
    double score;
    bool fake;
};

struct Counts {
    double tp = 0, fp = 0, tn = 0, fn = 0;  // fake is positive
};

inline Counts confusion(const std::vector<Scored>& xs, double threshold) {
    Counts c;
    for (const Scored& s : xs) {
        const bool pred = s.score >= threshold;
        if (pred && s.fake) c.tp += 1;
        if (pred && !s.fake) c.fp += 1;
        if (!pred && !s.fake) c.tn += 1;
        if (!pred && s.fake) c.fn += 1;
    }
    return c;
}

inline double f1(double tp, double fp, double fn) {
    const double denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2 * tp / denom;
}

inline std::pair<double, double> accuracy_f1(const std::vector<Scored>& xs, double threshold) {
    const Counts c = confusion(xs, threshold);
    const double acc = (c.tp + c.tn) / static_cast<double>(xs.size());
    const double macro = 0.5 * (f1(c.tp, c.fp, c.fn) + f1(c.tn, c.fn, c.fp));
    return {acc, macro};
}

inline std::pair<double, double> select_threshold(const std::vector<Scored>& xs) {
    std::vector<double> scores;
    for (const Scored& s : xs) scores.push_back(s.score);
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    std::vector<double> cands{0.0, 1.0};
    for (std::size_t i = 0; i + 1 < scores.size(); ++i) cands.push_back(0.5 * (scores[i] + scores[i + 1]));
    std::sort(cands.begin(), cands.end());
    double best_t = cands[0];
    double best_f = -1.0;
    for (double t : cands) {
        const double f = accuracy_f1(xs, t).second;
        if (f > best_f) {
            best_f = f;
            best_t = t;
        }
    }
    return {best_t, best_f};
}

/// Threshold sweep over sorted unique scores then +inf; every rate counted
/// from scratch. First point with FNR >= FPR is the crossing.
inline double eer(const std::vector<Scored>& xs) {
    std::vector<double> ts;
    for (const Scored& s : xs) ts.push_back(s.score);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    ts.push_back(std::numeric_limits<double>::infinity());
    double prev_fpr = 0, prev_fnr = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        double reals = 0, fakes = 0, fp = 0, fn = 0;
        for (const Scored& s : xs) {
            if (s.fake) {
                fakes += 1;
                if (s.score < ts[k]) fn += 1;
            } else {
                reals += 1;
                if (s.score >= ts[k]) fp += 1;
            }
        }
        const double fpr = fp / reals;
        const double fnr = fn / fakes;
        if (fnr >= fpr) {
            if (k == 0 || fnr == fpr) return fpr;
            // Solve fpr(a) = fnr(a) on the segment between the two sweep points.
            const double a = (prev_fnr - prev_fpr) / ((prev_fnr - prev_fpr) - (fnr - fpr));
            return prev_fpr + a * (fpr - prev_fpr);
        }
        prev_fpr = fpr;
        prev_fnr = fnr;
    }
    return 1.0;
}

}  // namespace oracle
