#include "phoenix/objective.hpp"

#include <cmath>

#include "phoenix/error.hpp"
#include "phoenix/ops.hpp"

namespace phoenix {

void LossWeights::validate() const {
    if (!(lambda >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) {
        throw ConfigError("loss weights lambda, beta, gamma must be >= 0");
    }
    if (entropy_sign != 1.0 && entropy_sign != -1.0) throw ConfigError("entropy_sign must be +1 or -1");
}

double cross_entropy(double p_fake, Label label) {
    return label == Label::kFake ? -std::log(p_fake) : -std::log1p(-p_fake);
}

Var loss_cls(Tape& t, const Logits& logits, Label label) {
    // -log softmax([S_-, S_+])_y = softplus(S_other - S_y).
    Var margin = label == Label::kFake ? ops::sub(t, logits.negative, logits.positive)
                                       : ops::sub(t, logits.positive, logits.negative);
    return ops::softplus(t, margin);
}

Var loss_cluster(Tape& t, Var positive_distances, Var responsibilities, double gamma) {
    const double inv_m = 1.0 / static_cast<double>(t.value(positive_distances).rows());
    Var pull = ops::scale(t, ops::sum(t, ops::hadamard(t, responsibilities, positive_distances)), inv_m);
    if (gamma == 0.0) return pull;
    Var entropy = ops::scale(t, ops::sum(t, ops::xlogx(t, responsibilities)), gamma * inv_m);
    return ops::add(t, pull, entropy);
}

Var loss_sep(Tape& t, const Prototypes& protos, const HeadConfig& cfg) {
    Var among = ops::upper_triangle_sum(t, ops::exp(t, ops::scale(t, distances(t, protos.positive, protos.positive, cfg), -1.0)));
    Var to_negative = ops::sum(t, ops::exp(t, ops::scale(t, distances(t, protos.positive, protos.negative, cfg), -1.0)));
    return ops::add(t, among, to_negative);
}

LossBreakdown loss_total(Model& model, std::span<const FeatureSequence* const> batch, const LossWeights& weights,
                         bool accumulate_grads) {
    if (batch.empty()) throw StructuralError("loss_total on an empty batch");
    std::size_t fakes = 0;
    for (const FeatureSequence* s : batch) fakes += s->label == Label::kFake ? 1 : 0;

    const bool geometric = model.config().has_prototypes();
    const double cls_weight = 1.0 / static_cast<double>(batch.size());
    const double cluster_weight = fakes > 0 ? weights.lambda / static_cast<double>(fakes) : 0.0;
    const double gamma = weights.entropy_sign * weights.gamma;

    LossBreakdown out;
    auto check = [](double v, const std::string& what) {
        if (!std::isfinite(v)) throw NumericError("non-finite " + what + " in loss_total");
    };

    for (const FeatureSequence* s : batch) {
        Tape t;
        ForwardTrace tr = model.forward(t, s->features);
        Var cls = loss_cls(t, Logits{tr.negative_logit, tr.positive_logit}, s->label);
        check(t.scalar(cls), "classification loss for '" + s->id + "'");
        out.cls += t.scalar(cls) * cls_weight;
        Var item = ops::scale(t, cls, cls_weight);
        if (geometric && s->label == Label::kFake) {
            Var cl = loss_cluster(t, tr.head->positive_distances, tr.head->responsibilities, gamma);
            check(t.scalar(cl), "cluster loss for '" + s->id + "'");
            out.cluster += t.scalar(cl) / static_cast<double>(fakes);
            if (weights.lambda != 0.0) item = ops::add(t, item, ops::scale(t, cl, cluster_weight));
        }
        if (accumulate_grads) t.backward(item);
    }

    if (geometric) {
        Tape t;
        Var sep = loss_sep(t, model.realize_prototypes(t), model.config().head());
        out.sep = t.scalar(sep);
        check(out.sep, "separation loss");
        if (accumulate_grads && weights.beta != 0.0) t.backward(ops::scale(t, sep, weights.beta));
    }

    out.total = out.cls + weights.lambda * out.cluster + weights.beta * out.sep;
    check(out.total, "total loss");
    return out;
}

}  // namespace phoenix
