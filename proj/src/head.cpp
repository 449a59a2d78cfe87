#include "phoenix/head.hpp"

#include <cmath>

#include "phoenix/ops.hpp"

namespace phoenix {

ProjectionParams ProjectionParams::init(Eigen::Index ball_dim, Eigen::Index width, Rng& rng) {
    // 1/sqrt(d) starts every embedding ~4 from the prototypes, and the unscaled
    // s_- against s_+ ~ -d/tau then saturates p_fake near 0 for all inputs.
    const double scale = 1.0 / static_cast<double>(width);
    return ProjectionParams{ParamTensor("head.projection", uniform_matrix(ball_dim, width, scale, rng))};
}

PrototypeParams PrototypeParams::init(Eigen::Index modes, Eigen::Index ball_dim, Rng& rng) {
    PrototypeParams p;
    p.negative = ParamTensor("prototypes.negative", normal_matrix(1, ball_dim, 0.01, rng), false);
    p.positive = ParamTensor("prototypes.positive", normal_matrix(modes, ball_dim, 0.01, rng), false);
    return p;
}

Prototypes realize_prototypes(Tape& t, PrototypeParams& p, const HeadConfig& cfg) {
    Var neg = t.parameter(p.negative);
    Var pos = t.parameter(p.positive);
    if (cfg.geometry == Geometry::kEuclidean) return Prototypes{neg, pos};
    return Prototypes{ops::exp_map_rows(t, neg, cfg.curvature), ops::exp_map_rows(t, pos, cfg.curvature)};
}

Var embed(Tape& t, Var evidence, ProjectionParams& p, const HeadConfig& cfg) {
    Var tangent = ops::matmul_nt(t, evidence, t.parameter(p.weight));
    if (cfg.geometry == Geometry::kEuclidean) return tangent;
    return ops::exp_map_rows(t, tangent, cfg.curvature);
}

Var distances(Tape& t, Var a, Var b, const HeadConfig& cfg) {
    if (cfg.geometry == Geometry::kEuclidean) return ops::euclidean_distances(t, a, b);
    return ops::poincare_distances(t, a, b, cfg.curvature);
}

Var responsibilities(Tape& t, Var positive_distances, double tau) {
    return ops::row_softmax(t, ops::scale(t, positive_distances, -1.0 / tau));
}

EvidenceScores evidence_scores(Tape& t, Var negative_distances, Var positive_distances, double tau) {
    return EvidenceScores{
        ops::scale(t, negative_distances, -1.0),
        ops::row_logsumexp(t, ops::scale(t, positive_distances, -1.0 / tau)),
    };
}

Logits aggregate(Tape& t, const EvidenceScores& scores) {
    return Logits{ops::mean(t, scores.negative), ops::mean(t, scores.positive)};
}

double fake_probability(double negative_logit, double positive_logit) noexcept {
    const double z = positive_logit - negative_logit;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

HeadTrace run_head(Tape& t, Var evidence, ProjectionParams& projection, const Prototypes& protos,
                   const HeadConfig& cfg) {
    HeadTrace tr;
    tr.embedded = embed(t, evidence, projection, cfg);
    tr.negative_distances = distances(t, tr.embedded, protos.negative, cfg);
    tr.positive_distances = distances(t, tr.embedded, protos.positive, cfg);
    tr.responsibilities = responsibilities(t, tr.positive_distances, cfg.tau);
    tr.scores = evidence_scores(t, tr.negative_distances, tr.positive_distances, cfg.tau);
    tr.logits = aggregate(t, tr.scores);
    return tr;
}

HeadOutput read_head_output(const Tape& t, const HeadTrace& trace) {
    HeadOutput out;
    out.responsibilities = t.value(trace.responsibilities);
    out.negative_scores = t.value(trace.scores.negative).col(0);
    out.positive_scores = t.value(trace.scores.positive).col(0);
    out.negative_logit = t.scalar(trace.logits.negative);
    out.positive_logit = t.scalar(trace.logits.positive);
    out.p_fake = fake_probability(out.negative_logit, out.positive_logit);
    return out;
}

}  // namespace phoenix
