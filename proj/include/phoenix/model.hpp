#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phoenix/backbone.hpp"
#include "phoenix/evidence.hpp"
#include "phoenix/head.hpp"

namespace phoenix {

/// Ablation axes: hyperbolic prototypes (full), Euclidean prototypes, a single
/// evidence vector, and a mean-pool + MLP classifier in place of evidence+head.
enum class Variant { kFull, kEuclidean, kSingleEvidence, kMeanPool };

std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view text);

struct ModelConfig {
    Eigen::Index input_dim = 64;   // D
    Eigen::Index model_dim = 256;  // d
    Eigen::Index ball_dim = 128;   // h
    Eigen::Index evidence = 4;     // M
    Eigen::Index prototypes = 4;   // K
    Eigen::Index layers = 2;
    double curvature = 1.0;
    double tau = 0.1;
    Variant variant = Variant::kFull;

    /// M actually used (the single-evidence variant forces 1).
    Eigen::Index evidence_slots() const noexcept { return variant == Variant::kSingleEvidence ? 1 : evidence; }
    bool has_prototypes() const noexcept { return variant != Variant::kMeanPool; }
    HeadConfig head() const noexcept;
    void validate() const;
};

/// Two-layer classifier for the mean-pool baseline: affine -> tanh -> affine(2).
struct MeanPoolParams {
    ParamTensor hidden_weight;
    ParamTensor hidden_bias;
    ParamTensor out_weight;
    ParamTensor out_bias;

    static MeanPoolParams init(Eigen::Index width, Rng& rng);
};

struct ForwardTrace {
    Var negative_logit;  // S_-
    Var positive_logit;  // S_+
    Var attention;       // M x T (invalid for mean-pool)
    std::optional<HeadTrace> head;
    std::optional<Prototypes> prototypes;
};

struct Inference {
    double negative_logit = 0.0;
    double positive_logit = 0.0;
    double p_fake = 0.5;
    std::optional<HeadOutput> head;
    Matrix attention;
};

class Model {
public:
    Model(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }

    /// Records the forward pass for one T x D feature sequence.
    ForwardTrace forward(Tape& t, const Matrix& features);

    /// Records the realized prototypes (Exp_0 of the tangents in the hyperbolic head).
    Prototypes realize_prototypes(Tape& t);

    Inference infer(const Matrix& features);

    /// Fixed enumeration order used by the optimizer and checkpoints.
    std::vector<ParamTensor*> parameters();
    std::vector<const ParamTensor*> parameters() const;
    ParamTensor* find(std::string_view name);

    void zero_grad();
    std::size_t parameter_count() const;

private:
    ModelConfig config_;
    AdapterParams adapter_;
    std::vector<SsmLayerParams> layers_;
    std::optional<EvidenceParams> evidence_;
    std::optional<ProjectionParams> projection_;
    std::optional<PrototypeParams> prototypes_;
    std::optional<MeanPoolParams> mean_pool_;
};

}  // namespace phoenix
