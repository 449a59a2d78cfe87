#pragma once

// Prototype head: evidence -> ball embeddings -> distances to one negative and
// K positive prototypes -> responsibilities, evidence scores, instance logits.

#include "phoenix/random.hpp"
#include "phoenix/tape.hpp"

namespace phoenix {

enum class Geometry { kHyperbolic, kEuclidean };

struct HeadConfig {
    double curvature = 1.0;
    double tau = 0.1;
    Geometry geometry = Geometry::kHyperbolic;
};

struct ProjectionParams {
    ParamTensor weight;  // h x d

    static ProjectionParams init(Eigen::Index ball_dim, Eigen::Index width, Rng& rng);
};

/// Tangent vectors at the origin (hyperbolic) or raw coordinates (Euclidean).
struct PrototypeParams {
    ParamTensor negative;  // 1 x h
    ParamTensor positive;  // K x h

    /// N(0, 0.01^2) entries; excluded from weight decay.
    static PrototypeParams init(Eigen::Index modes, Eigen::Index ball_dim, Rng& rng);
};

struct Prototypes {
    Var negative;  // 1 x h
    Var positive;  // K x h
};

struct EvidenceScores {
    Var negative;  // M x 1, s_-(h_m) = -d(h_m, p_-)
    Var positive;  // M x 1, s_+(h_m) = log sum_k exp(-d(h_m, p_k) / tau)
};

struct Logits {
    Var negative;  // 1 x 1, mean of s_-
    Var positive;  // 1 x 1, mean of s_+
};

Prototypes realize_prototypes(Tape& t, PrototypeParams& p, const HeadConfig& cfg);

/// h_m = Exp_0(W e_m) in the hyperbolic head, W e_m in the Euclidean one.
Var embed(Tape& t, Var evidence, ProjectionParams& p, const HeadConfig& cfg);

/// Pairwise distances between rows under the configured geometry.
Var distances(Tape& t, Var a, Var b, const HeadConfig& cfg);

/// q_{m,k} = softmax_k(-d(h_m, p_k) / tau).
Var responsibilities(Tape& t, Var positive_distances, double tau);

EvidenceScores evidence_scores(Tape& t, Var negative_distances, Var positive_distances, double tau);

Logits aggregate(Tape& t, const EvidenceScores& scores);

/// softmax([S_-, S_+]) at the + slot, i.e. 1 / (1 + exp(S_- - S_+)).
double fake_probability(double negative_logit, double positive_logit) noexcept;

struct HeadTrace {
    Var embedded;
    Var negative_distances;  // M x 1
    Var positive_distances;  // M x K
    Var responsibilities;    // M x K
    EvidenceScores scores;
    Logits logits;
};

HeadTrace run_head(Tape& t, Var evidence, ProjectionParams& projection, const Prototypes& protos,
                   const HeadConfig& cfg);

struct HeadOutput {
    Matrix responsibilities;  // M x K
    Vector negative_scores;
    Vector positive_scores;
    double negative_logit = 0.0;
    double positive_logit = 0.0;
    double p_fake = 0.5;
};

HeadOutput read_head_output(const Tape& t, const HeadTrace& trace);

}  // namespace phoenix
