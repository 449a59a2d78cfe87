#include "phoenix/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "phoenix/error.hpp"
#include "phoenix/manifold.hpp"

namespace phoenix {

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("AdamW betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
    model.validate();
    loss.validate();
}

AdamW::AdamW(const std::vector<ParamTensor*>& params, Options options) : options_(options) {
    for (const ParamTensor* p : params) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void AdamW::step(const std::vector<ParamTensor*>& params) {
    if (params.size() != m_.size()) throw StructuralError("AdamW: parameter list changed since construction");
    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(options_.beta1, t);
    const double correction2 = 1.0 - std::pow(options_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamTensor& p = *params[i];
        m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * p.grad;
        v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * p.grad.cwiseAbs2();
        if (p.decay && options_.weight_decay != 0.0) p.value *= 1.0 - options_.lr * options_.weight_decay;
        p.value.array() -= options_.lr * (m_[i].array() / correction1) /
                           ((v_[i].array() / correction2).sqrt() + options_.eps);
    }
}

double global_grad_norm(const std::vector<ParamTensor*>& params) {
    double sq = 0.0;
    for (const ParamTensor* p : params) sq += p->grad.squaredNorm();
    return std::sqrt(sq);
}

double clip_grad_norm(const std::vector<ParamTensor*>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm > max_norm) {
        const double k = max_norm / norm;
        for (ParamTensor* p : params) p->grad *= k;
    }
    return norm;
}

namespace {

void require_both_classes(std::span<const FeatureSequence> set, const char* name) {
    bool real = false;
    bool fake = false;
    for (const FeatureSequence& s : set) (s.label == Label::kFake ? fake : real) = true;
    if (set.empty()) throw ConfigError(std::string(name) + " split is empty");
    if (!real || !fake) throw ConfigError(std::string(name) + " split must contain both real and fake utterances");
}

void require_prototypes_inside(Model& model) {
    if (!model.config().has_prototypes()) return;
    Tape t;
    Prototypes protos = model.realize_prototypes(t);
    const double c = model.config().curvature;
    const double limit = (1.0 - manifold::kBallMargin) / std::sqrt(c) * (1.0 + 1e-12);
    for (Var v : {protos.negative, protos.positive}) {
        const Matrix& m = t.value(v);
        if (!m.allFinite()) throw NumericError("prototype coordinates became non-finite");
        if (model.config().variant == Variant::kEuclidean) continue;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m.row(i).norm() > limit) throw NumericError("realized prototype left the Poincare ball");
        }
    }
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const FeatureSequence> train_set,
                  std::span<const FeatureSequence> val_set, const EpochCallback& on_epoch) {
    config.validate();
    require_both_classes(train_set, "train");
    require_both_classes(val_set, "validation");

    TrainResult result{config, Model(config.model, config.seed), AdamW{}, 0.5, 0.0, {}};
    result.config.model.evidence = config.model.evidence_slots();
    Model& model = result.model;
    std::vector<ParamTensor*> params = model.parameters();
    result.optimizer = AdamW(params, AdamW::Options{config.lr, config.beta1, config.beta2, config.eps,
                                                     config.weight_decay});

    for (Eigen::Index epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const auto batches = batch_iter(train_set.size(), static_cast<std::size_t>(config.batch_size), config.seed,
                                        static_cast<std::uint64_t>(epoch));
        EpochRecord rec;
        rec.epoch = static_cast<std::uint64_t>(epoch);
        std::vector<const FeatureSequence*> batch;
        for (const auto& indices : batches) {
            batch.clear();
            for (std::size_t i : indices) batch.push_back(&train_set[i]);
            model.zero_grad();
            const LossBreakdown lb = loss_total(model, batch, config.loss, true);
            const double norm = global_grad_norm(params);
            if (!std::isfinite(norm)) {
                throw NumericError("non-finite gradient norm at epoch " + std::to_string(epoch));
            }
            clip_grad_norm(params, config.grad_clip);
            result.optimizer.step(params);
            require_prototypes_inside(model);
            rec.loss.cls += lb.cls;
            rec.loss.cluster += lb.cluster;
            rec.loss.sep += lb.sep;
            rec.loss.total += lb.total;
        }
        const double nb = static_cast<double>(batches.size());
        rec.loss.cls /= nb;
        rec.loss.cluster /= nb;
        rec.loss.sep /= nb;
        rec.loss.total /= nb;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }

    const std::vector<ScoreRecord> val_scores = score(model, val_set);
    const ThresholdChoice choice = select_threshold(val_scores);
    result.threshold = choice.threshold;
    result.val_macro_f1 = choice.macro_f1;
    return result;
}

std::vector<ScoreRecord> score(Model& model, std::span<const FeatureSequence> sequences) {
    std::vector<ScoreRecord> out;
    out.reserve(sequences.size());
    for (const FeatureSequence& s : sequences) {
        const Inference inf = model.infer(s.features);
        if (!std::isfinite(inf.p_fake)) throw NumericError("non-finite score for '" + s.id + "'");
        out.push_back(ScoreRecord{s.id, s.label, inf.p_fake, s.group, inf.negative_logit, inf.positive_logit});
    }
    return out;
}

Evaluation evaluate(std::span<const ScoreRecord> records, double threshold) {
    Evaluation e;
    const Classification c = accuracy_f1(records, threshold);
    e.accuracy = c.accuracy;
    e.macro_f1 = c.macro_f1;
    e.count = records.size();
    bool real = false;
    bool fake = false;
    for (const ScoreRecord& r : records) (r.label == Label::kFake ? fake : real) = true;
    e.eer = (real && fake) ? eer(records) : std::numeric_limits<double>::quiet_NaN();
    return e;
}

}  // namespace phoenix
