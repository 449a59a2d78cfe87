#pragma once

// L = L_cls + lambda * L_cluster + beta * L_sep.

#include <span>

#include "phoenix/data.hpp"
#include "phoenix/head.hpp"
#include "phoenix/model.hpp"

namespace phoenix {

struct LossWeights {
    double lambda = 1.0;  // cluster
    double beta = 0.1;    // separation
    double gamma = 0.05;  // entropy
    /// Multiplies the entropy term. +1 reproduces +gamma * sum q log q as written;
    /// -1 flips it into a sharpness penalty.
    double entropy_sign = 1.0;

    void validate() const;
};

/// -log p for fakes, -log(1 - p) for reals.
double cross_entropy(double p_fake, Label label);

/// Cross-entropy on the logits [S_-, S_+], computed as a stable softplus.
Var loss_cls(Tape& t, const Logits& logits, Label label);

/// (1/M) sum_m sum_k q d + gamma (1/M) sum_m sum_k q log q.
Var loss_cluster(Tape& t, Var positive_distances, Var responsibilities, double gamma);

/// sum_{i<j} exp(-d(p_i, p_j)) + sum_k exp(-d(p_k, p_-)).
Var loss_sep(Tape& t, const Prototypes& protos, const HeadConfig& cfg);

struct LossBreakdown {
    double cls = 0.0;
    double cluster = 0.0;
    double sep = 0.0;
    double total = 0.0;
};

/// Batch objective. L_cls is the batch mean; L_cluster is the mean over the
/// batch's fake items (0 when there are none); L_sep is evaluated once. When
/// `accumulate_grads` is set, dL/dtheta is added into each ParamTensor::grad.
LossBreakdown loss_total(Model& model, std::span<const FeatureSequence* const> batch, const LossWeights& weights,
                         bool accumulate_grads);

}  // namespace phoenix
