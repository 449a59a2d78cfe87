#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phoenix/data.hpp"
#include "phoenix/metrics.hpp"
#include "phoenix/model.hpp"
#include "phoenix/objective.hpp"

namespace phoenix {

struct TrainConfig {
    Eigen::Index epochs = 20;
    Eigen::Index batch_size = 32;
    double lr = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    ModelConfig model;
    LossWeights loss;

    void validate() const;
};

/// Decoupled-weight-decay Adam over a model's parameters. Moments are keyed by
/// position in Model::parameters().
class AdamW {
public:
    struct Options {
        double lr = 1e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.01;
    };

    AdamW() = default;
    AdamW(const std::vector<ParamTensor*>& params, Options options);

    /// theta <- theta - lr*wd*theta (if the tensor decays), then the
    /// bias-corrected adaptive step.
    void step(const std::vector<ParamTensor*>& params);

    const Options& options() const noexcept { return options_; }
    std::uint64_t steps() const noexcept { return step_; }
    std::vector<Matrix>& first_moments() noexcept { return m_; }
    std::vector<Matrix>& second_moments() noexcept { return v_; }
    const std::vector<Matrix>& first_moments() const noexcept { return m_; }
    const std::vector<Matrix>& second_moments() const noexcept { return v_; }
    void set_steps(std::uint64_t s) noexcept { step_ = s; }

private:
    Options options_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::uint64_t step_ = 0;
};

double global_grad_norm(const std::vector<ParamTensor*>& params);

/// Rescales all gradients so the global norm is at most max_norm. Returns the pre-clip norm.
double clip_grad_norm(const std::vector<ParamTensor*>& params, double max_norm);

struct EpochRecord {
    std::uint64_t epoch = 0;  // 1-based
    LossBreakdown loss;       // batch losses averaged over the epoch
    double wall_seconds = 0.0;
};

struct TrainResult {
    TrainConfig config;
    Model model;
    AdamW optimizer;
    double threshold = 0.5;
    double val_macro_f1 = 0.0;
    std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded epoch loop with global-norm clipping and AdamW, followed by
/// validation threshold selection on the final model.
TrainResult train(const TrainConfig& config, std::span<const FeatureSequence> train_set,
                  std::span<const FeatureSequence> val_set, const EpochCallback& on_epoch = {});

/// Scores every sequence (in order) with the given model.
std::vector<ScoreRecord> score(Model& model, std::span<const FeatureSequence> sequences);

struct Evaluation {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double eer = 0.0;
    std::size_t count = 0;
};

/// Accuracy and macro-F1 at `threshold`; EER when both classes are present (else NaN).
Evaluation evaluate(std::span<const ScoreRecord> records, double threshold);

}  // namespace phoenix
