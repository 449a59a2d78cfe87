#include "phoenix/model.hpp"

#include <cmath>

#include "phoenix/error.hpp"
#include "phoenix/ops.hpp"

namespace phoenix {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
        case Variant::kFull: return "full";
        case Variant::kEuclidean: return "euclidean";
        case Variant::kSingleEvidence: return "m1";
        case Variant::kMeanPool: return "meanpool";
    }
    return "full";
}

Variant parse_variant(std::string_view text) {
    if (text == "full") return Variant::kFull;
    if (text == "euclidean") return Variant::kEuclidean;
    if (text == "m1") return Variant::kSingleEvidence;
    if (text == "meanpool") return Variant::kMeanPool;
    throw ConfigError("unknown variant '" + std::string(text) + "' (expected full, euclidean, m1, meanpool)");
}

HeadConfig ModelConfig::head() const noexcept {
    return HeadConfig{curvature, tau, variant == Variant::kEuclidean ? Geometry::kEuclidean : Geometry::kHyperbolic};
}

void ModelConfig::validate() const {
    auto positive = [](Eigen::Index v, const char* name) {
        if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
    };
    positive(input_dim, "input_dim");
    positive(model_dim, "model_dim");
    positive(ball_dim, "ball_dim");
    positive(evidence, "evidence");
    positive(prototypes, "prototypes");
    if (layers < 0) throw ConfigError("layers must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(curvature > 0.0)) throw ConfigError("curvature must be positive");
}

MeanPoolParams MeanPoolParams::init(Eigen::Index width, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(width));
    MeanPoolParams p;
    p.hidden_weight = ParamTensor("meanpool.hidden_weight", uniform_matrix(width, width, scale, rng));
    p.hidden_bias = ParamTensor("meanpool.hidden_bias", Matrix::Zero(1, width));
    p.out_weight = ParamTensor("meanpool.out_weight", uniform_matrix(2, width, scale, rng));
    p.out_bias = ParamTensor("meanpool.out_bias", Matrix::Zero(1, 2));
    return p;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    Rng rng(seed);
    adapter_ = AdapterParams::init(config_.input_dim, config_.model_dim, rng);
    for (Eigen::Index l = 0; l < config_.layers; ++l) {
        layers_.push_back(SsmLayerParams::init(config_.model_dim, rng, "ssm" + std::to_string(l)));
    }
    if (config_.has_prototypes()) {
        evidence_ = EvidenceParams::init(config_.evidence_slots(), config_.model_dim, rng);
        projection_ = ProjectionParams::init(config_.ball_dim, config_.model_dim, rng);
        prototypes_ = PrototypeParams::init(config_.prototypes, config_.ball_dim, rng);
    } else {
        mean_pool_ = MeanPoolParams::init(config_.model_dim, rng);
    }
}

ForwardTrace Model::forward(Tape& t, const Matrix& features) {
    if (features.cols() != config_.input_dim) {
        throw StructuralError("feature dimension " + std::to_string(features.cols()) +
                              " does not match model input_dim " + std::to_string(config_.input_dim));
    }
    if (features.rows() < 1) throw StructuralError("feature sequence has no frames");

    Var u = adapt(t, t.constant(features), adapter_);
    Var z = ssm_forward(t, u, layers_);

    ForwardTrace out;
    if (mean_pool_) {
        MeanPoolParams& mp = *mean_pool_;
        Var pooled = ops::mean_rows(t, z);
        Var hidden = ops::tanh(t, ops::affine(t, pooled, t.parameter(mp.hidden_weight), t.parameter(mp.hidden_bias)));
        Var logits = ops::affine(t, hidden, t.parameter(mp.out_weight), t.parameter(mp.out_bias));
        out.negative_logit = ops::element(t, logits, 0, 0);
        out.positive_logit = ops::element(t, logits, 0, 1);
        return out;
    }

    Evidence ev = pool(t, z, *evidence_);
    out.attention = ev.weights;
    out.prototypes = realize_prototypes(t);
    out.head = run_head(t, ev.vectors, *projection_, *out.prototypes, config_.head());
    out.negative_logit = out.head->logits.negative;
    out.positive_logit = out.head->logits.positive;
    return out;
}

Prototypes Model::realize_prototypes(Tape& t) {
    if (!prototypes_) throw StructuralError("the mean-pool variant has no prototypes");
    return phoenix::realize_prototypes(t, *prototypes_, config_.head());
}

Inference Model::infer(const Matrix& features) {
    Tape t;
    ForwardTrace tr = forward(t, features);
    Inference inf;
    inf.negative_logit = t.scalar(tr.negative_logit);
    inf.positive_logit = t.scalar(tr.positive_logit);
    inf.p_fake = fake_probability(inf.negative_logit, inf.positive_logit);
    if (tr.head) {
        inf.head = read_head_output(t, *tr.head);
        inf.attention = t.value(tr.attention);
    }
    return inf;
}

std::vector<ParamTensor*> Model::parameters() {
    std::vector<ParamTensor*> ps{&adapter_.weight, &adapter_.bias};
    for (SsmLayerParams& l : layers_) {
        for (ParamTensor* p : {&l.a_log, &l.w_delta, &l.b_delta, &l.w_b, &l.w_c, &l.skip, &l.norm_gain, &l.norm_shift}) {
            ps.push_back(p);
        }
    }
    if (evidence_) ps.push_back(&evidence_->queries);
    if (projection_) ps.push_back(&projection_->weight);
    if (prototypes_) {
        ps.push_back(&prototypes_->negative);
        ps.push_back(&prototypes_->positive);
    }
    if (mean_pool_) {
        for (ParamTensor* p : {&mean_pool_->hidden_weight, &mean_pool_->hidden_bias, &mean_pool_->out_weight,
                               &mean_pool_->out_bias}) {
            ps.push_back(p);
        }
    }
    return ps;
}

std::vector<const ParamTensor*> Model::parameters() const {
    auto mutable_ps = const_cast<Model*>(this)->parameters();
    return {mutable_ps.begin(), mutable_ps.end()};
}

ParamTensor* Model::find(std::string_view name) {
    for (ParamTensor* p : parameters()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

void Model::zero_grad() {
    for (ParamTensor* p : parameters()) p->zero_grad();
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const ParamTensor* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
}

}  // namespace phoenix
