// phoenix: synthetic data generation, training, evaluation, ablation,
// gradient checking and prototype inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phoenix/checkpoint.hpp"
#include "phoenix/config.hpp"
#include "phoenix/error.hpp"
#include "phoenix/gradcheck.hpp"
#include "phoenix/inspect.hpp"

namespace fs = std::filesystem;
using namespace phoenix;

namespace {

// Flags bound to a default RunConfig so --help shows the defaults; only flags
// actually given on the command line override the config file.
class Overrides {
public:
    template <typename Get>
    void add(CLI::App* app, const std::string& flag, Get get, const std::string& help) {
        auto& slot = get(values_);
        CLI::Option* opt = app->add_option(flag, slot, help)->capture_default_str();
        items_.emplace_back(opt, [get](RunConfig& dst, RunConfig& src) { get(dst) = get(src); });
    }

    void add_variant(CLI::App* app) {
        variant_ = std::string(to_string(values_.train.model.variant));
        variant_opt_ = app->add_option("--variant", variant_, "Model variant")
                           ->check(CLI::IsMember({"full", "euclidean", "m1", "meanpool"}))
                           ->capture_default_str();
    }

    void add_config(CLI::App* app) {
        app->add_option("--config", config_path_, "JSON run config (version 1); flags override its values");
    }

    RunConfig resolve() {
        RunConfig cfg = config_path_.empty() ? RunConfig{} : load_run_config(config_path_);
        for (auto& [opt, apply] : items_) {
            if (opt->count() > 0) apply(cfg, values_);
        }
        if (variant_opt_ != nullptr && variant_opt_->count() > 0) cfg.train.model.variant = parse_variant(variant_);
        cfg.synth.validate();
        cfg.train.validate();
        return cfg;
    }

private:
    RunConfig values_;
    std::string config_path_;
    std::string variant_;
    CLI::Option* variant_opt_ = nullptr;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, RunConfig&)>>> items_;
};

void add_synth_flags(CLI::App* app, Overrides& o) {
    o.add(app, "--seed", [](RunConfig& c) -> auto& { return c.synth.seed; }, "Generator seed");
    o.add(app, "--dim", [](RunConfig& c) -> auto& { return c.synth.dim; }, "Feature dimension D");
    o.add(app, "--min-frames", [](RunConfig& c) -> auto& { return c.synth.min_frames; }, "Shortest utterance (frames)");
    o.add(app, "--max-frames", [](RunConfig& c) -> auto& { return c.synth.max_frames; }, "Longest utterance (frames)");
    o.add(app, "--modes", [](RunConfig& c) -> auto& { return c.synth.modes; }, "Number of fake modes G");
    o.add(app, "--artifact-fraction", [](RunConfig& c) -> auto& { return c.synth.artifact_fraction; },
          "Fraction of frames carrying the artifact (rho)");
    o.add(app, "--artifact-strength", [](RunConfig& c) -> auto& { return c.synth.artifact_strength; },
          "Artifact amplitude");
    o.add(app, "--noise-std", [](RunConfig& c) -> auto& { return c.synth.noise_std; }, "Base noise std");
    o.add(app, "--train-count", [](RunConfig& c) -> auto& { return c.synth.train_count; }, "Train utterances");
    o.add(app, "--dev-count", [](RunConfig& c) -> auto& { return c.synth.dev_count; }, "Dev utterances");
    o.add(app, "--test-count", [](RunConfig& c) -> auto& { return c.synth.test_count; }, "Test utterances");
}

void add_train_flags(CLI::App* app, Overrides& o) {
    o.add(app, "--seed", [](RunConfig& c) -> auto& { return c.train.seed; }, "Initialization and shuffling seed");
    o.add(app, "--epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }, "Training epochs");
    o.add(app, "--batch-size", [](RunConfig& c) -> auto& { return c.train.batch_size; }, "Utterances per batch");
    o.add(app, "--lr", [](RunConfig& c) -> auto& { return c.train.lr; }, "AdamW learning rate");
    o.add(app, "--weight-decay", [](RunConfig& c) -> auto& { return c.train.weight_decay; }, "Decoupled weight decay");
    o.add(app, "--beta1", [](RunConfig& c) -> auto& { return c.train.beta1; }, "AdamW beta1");
    o.add(app, "--beta2", [](RunConfig& c) -> auto& { return c.train.beta2; }, "AdamW beta2");
    o.add(app, "--adam-eps", [](RunConfig& c) -> auto& { return c.train.eps; }, "AdamW epsilon");
    o.add(app, "--grad-clip", [](RunConfig& c) -> auto& { return c.train.grad_clip; }, "Global gradient-norm clip");
    o.add(app, "--input-dim", [](RunConfig& c) -> auto& { return c.train.model.input_dim; }, "Feature dimension D");
    o.add(app, "--model-dim", [](RunConfig& c) -> auto& { return c.train.model.model_dim; }, "Adapter output dim d");
    o.add(app, "--ball-dim", [](RunConfig& c) -> auto& { return c.train.model.ball_dim; }, "Embedding dim h");
    o.add(app, "--evidence", [](RunConfig& c) -> auto& { return c.train.model.evidence; }, "Evidence vectors M");
    o.add(app, "--prototypes", [](RunConfig& c) -> auto& { return c.train.model.prototypes; },
          "Positive prototypes K");
    o.add(app, "--layers", [](RunConfig& c) -> auto& { return c.train.model.layers; }, "SSM layers");
    o.add(app, "--curvature", [](RunConfig& c) -> auto& { return c.train.model.curvature; }, "Ball curvature c");
    o.add(app, "--tau", [](RunConfig& c) -> auto& { return c.train.model.tau; }, "Distance temperature tau");
    o.add(app, "--lambda", [](RunConfig& c) -> auto& { return c.train.loss.lambda; }, "Cluster loss weight");
    o.add(app, "--beta", [](RunConfig& c) -> auto& { return c.train.loss.beta; }, "Separation loss weight");
    o.add(app, "--gamma", [](RunConfig& c) -> auto& { return c.train.loss.gamma; }, "Entropy term weight");
    o.add(app, "--entropy-sign", [](RunConfig& c) -> auto& { return c.train.loss.entropy_sign; },
          "Multiplier on the entropy term (+1 as written, -1 flipped)");
    o.add_variant(app);
}

std::string fmt(double v, const char* spec = "%.4f") {
    if (std::isnan(v)) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void require_dim(const std::vector<FeatureSequence>& seqs, Eigen::Index dim, const std::string& what) {
    for (const FeatureSequence& s : seqs) {
        if (s.features.cols() != dim) {
            throw StructuralError("dimension mismatch: " + what + " expects D=" + std::to_string(dim) + " but '" +
                                  s.id + "' has D=" + std::to_string(s.features.cols()));
        }
    }
}

bool dir_nonempty(const fs::path& p) { return fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p)); }

// ---------------------------------------------------------------------------

int cmd_gen(const RunConfig& cfg, const fs::path& out, bool force) {
    if (dir_nonempty(out)) {
        if (!force) throw ConfigError("destination " + out.string() + " is not empty (use --force to overwrite)");
        fs::remove_all(out / "features");
        fs::remove(out / "manifest.tsv");
    }
    const std::vector<FeatureSequence> seqs = synthesize(cfg.synth);
    const Manifest m = write_dataset(seqs, out);
    std::cout << "wrote " << seqs.size() << " utterances to " << out.string() << "\n";
    std::cout << "split\treal\tfake\n";
    for (const std::string& split : m.splits()) {
        std::size_t real = 0;
        std::size_t fake = 0;
        for (const ManifestEntry& e : m.entries()) {
            if (e.split == split) (e.label == Label::kFake ? fake : real) += 1;
        }
        std::cout << split << "\t" << real << "\t" << fake << "\n";
    }
    return 0;
}

struct TrainOutcome {
    TrainResult result;
    double seconds = 0.0;
};

TrainOutcome run_training(const TrainConfig& cfg, const Manifest& manifest, const std::string& train_split,
                          const std::string& val_split, const fs::path& out) {
    const std::vector<FeatureSequence> train_set = manifest.load_split(train_split);
    const std::vector<FeatureSequence> val_set = manifest.load_split(val_split);
    require_dim(train_set, cfg.model.input_dim, "the model configuration");
    require_dim(val_set, cfg.model.input_dim, "the model configuration");
    fs::create_directories(out);

    std::ofstream log(out / "train_log.jsonl", std::ios::trunc);
    if (!log) throw ConfigError("cannot write " + (out / "train_log.jsonl").string());
    const auto start = std::chrono::steady_clock::now();
    TrainResult result = train(cfg, train_set, val_set, [&](const EpochRecord& r) {
        nlohmann::ordered_json j{{"epoch", r.epoch},           {"loss_cls", r.loss.cls},
                                 {"loss_cluster", r.loss.cluster}, {"loss_sep", r.loss.sep},
                                 {"loss_total", r.loss.total}, {"wall_seconds", r.wall_seconds}};
        log << j.dump() << "\n" << std::flush;
        std::cerr << "epoch " << r.epoch << " loss_total " << fmt(r.loss.total, "%.6f") << " ("
                  << fmt(r.wall_seconds, "%.1f") << " s)\n";
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_checkpoint(result, out / "checkpoint.phnx");
    return TrainOutcome{std::move(result), seconds};
}

int cmd_train(const RunConfig& cfg, const fs::path& manifest, const std::string& train_split,
              const std::string& val_split, const fs::path& out) {
    const TrainOutcome o = run_training(cfg.train, Manifest::load(manifest), train_split, val_split, out);
    std::cout << "variant " << to_string(cfg.train.model.variant) << "\n"
              << "threshold " << fmt(o.result.threshold, "%.17g") << "\n"
              << "val_macro_f1 " << fmt(o.result.val_macro_f1) << "\n"
              << "checkpoint " << (out / "checkpoint.phnx").string() << "\n";
    return 0;
}

void print_metrics_table(const std::vector<ScoreRecord>& scores, double threshold) {
    std::vector<std::string> groups;
    for (const ScoreRecord& r : scores) {
        if (std::find(groups.begin(), groups.end(), r.group) == groups.end()) groups.push_back(r.group);
    }
    std::cout << "group\tcount\taccuracy\tmacro_f1\teer\n";
    auto row = [&](const std::string& name, const std::vector<ScoreRecord>& rs) {
        const Evaluation e = evaluate(rs, threshold);
        std::cout << name << "\t" << e.count << "\t" << fmt(e.accuracy) << "\t" << fmt(e.macro_f1) << "\t"
                  << fmt(e.eer) << "\n";
    };
    row("overall", scores);
    for (const std::string& g : groups) {
        std::vector<ScoreRecord> rs;
        for (const ScoreRecord& r : scores) {
            if (r.group == g) rs.push_back(r);
        }
        row(g.empty() ? "(untagged)" : g, rs);
    }
}

void write_scores(const std::vector<ScoreRecord>& scores, const fs::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + file.string());
    char buf[64];
    for (const ScoreRecord& r : scores) {
        std::snprintf(buf, sizeof buf, "%.17g", r.p_fake);
        out << r.id << "\t" << to_string(r.label) << "\t" << buf << "\n";
    }
}

int cmd_eval(const fs::path& checkpoint, const fs::path& manifest, const std::string& split,
             const std::string& scores_out) {
    TrainResult state = load_checkpoint(checkpoint);
    const std::vector<FeatureSequence> seqs = Manifest::load(manifest).load_split(split);
    require_dim(seqs, state.config.model.input_dim, "checkpoint " + checkpoint.string());
    const std::vector<ScoreRecord> scores = score(state.model, seqs);
    std::cout << "threshold " << fmt(state.threshold, "%.17g") << "\n";
    print_metrics_table(scores, state.threshold);
    if (!scores_out.empty()) write_scores(scores, scores_out);
    return 0;
}

int cmd_ablate(const RunConfig& cfg, const fs::path& manifest_path, const std::string& train_split,
               const std::string& val_split, const std::string& test_split, const fs::path& out) {
    const Manifest manifest = Manifest::load(manifest_path);
    const std::vector<FeatureSequence> test_set = manifest.load_split(test_split);
    std::string table = "variant\taccuracy\tmacro_f1\teer\tthreshold\tseconds\n";
    for (Variant v : {Variant::kFull, Variant::kEuclidean, Variant::kSingleEvidence, Variant::kMeanPool}) {
        TrainConfig tc = cfg.train;
        tc.model.variant = v;
        std::cerr << "== " << to_string(v) << "\n";
        TrainOutcome o = run_training(tc, manifest, train_split, val_split, out / std::string(to_string(v)));
        const Evaluation e = evaluate(score(o.result.model, test_set), o.result.threshold);
        table += std::string(to_string(v)) + "\t" + fmt(e.accuracy) + "\t" + fmt(e.macro_f1) + "\t" + fmt(e.eer) +
                 "\t" + fmt(o.result.threshold, "%.6f") + "\t" + fmt(o.seconds, "%.1f") + "\n";
    }
    std::ofstream(out / "ablation.tsv", std::ios::trunc) << table;
    std::cout << table;
    return 0;
}

int cmd_inspect(const fs::path& checkpoint, const std::string& manifest, const std::string& split,
                const std::string& attention_out) {
    TrainResult state = load_checkpoint(checkpoint);
    std::cout << format_geometry(prototype_geometry(state.model));
    if (manifest.empty()) return 0;
    const std::vector<FeatureSequence> seqs = Manifest::load(manifest).load_split(split);
    require_dim(seqs, state.config.model.input_dim, "checkpoint " + checkpoint.string());
    if (!attention_out.empty()) {
        std::ofstream out(attention_out, std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + attention_out);
        char buf[32];
        for (const FeatureSequence& s : seqs) {
            const Inference inf = state.model.infer(s.features);
            for (Eigen::Index m = 0; m < inf.attention.rows(); ++m) {
                out << s.id << "\t" << m;
                for (Eigen::Index t = 0; t < inf.attention.cols(); ++t) {
                    std::snprintf(buf, sizeof buf, "\t%.6g", inf.attention(m, t));
                    out << buf;
                }
                out << "\n";
            }
        }
    }
    std::cout << format_purity(mode_purity(state.model, seqs));
    return 0;
}

int cmd_grad_check(GradCheckConfig cfg, const std::string& variant) {
    cfg.model.variant = parse_variant(variant);
    const GradCheckReport report = finite_difference_check(cfg);
    std::cout << "variant " << variant << "\n" << format_report(report);
    return report.passed() ? 0 : static_cast<int>(ExitCode::kGeneric);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperbolic prototype classifier for codec-fake detection on frame-level features"};
    app.require_subcommand(1);

    // gen
    CLI::App* gen = app.add_subcommand("gen", "Write a synthetic multi-mode dataset (features + manifest.tsv)");
    Overrides gen_o;
    gen_o.add_config(gen);
    add_synth_flags(gen, gen_o);
    std::string gen_out;
    bool gen_force = false;
    gen->add_option("--out", gen_out, "Destination directory (must be absent or empty)")->required();
    gen->add_flag("--force", gen_force, "Overwrite the dataset in a non-empty destination");

    // train
    CLI::App* tr = app.add_subcommand("train", "Train one variant; writes checkpoint.phnx and train_log.jsonl");
    Overrides tr_o;
    tr_o.add_config(tr);
    add_train_flags(tr, tr_o);
    std::string tr_manifest;
    std::string tr_out;
    std::string tr_train_split = "train";
    std::string tr_val_split = "dev";
    tr->add_option("--manifest", tr_manifest, "Dataset manifest.tsv")->required();
    tr->add_option("--out", tr_out, "Output directory")->required();
    tr->add_option("--train-split", tr_train_split, "Training split")->capture_default_str();
    tr->add_option("--val-split", tr_val_split, "Threshold-selection split")->capture_default_str();

    // eval
    CLI::App* ev = app.add_subcommand("eval", "Score a split; print overall and per-group metrics");
    std::string ev_ckpt;
    std::string ev_manifest;
    std::string ev_split = "test";
    std::string ev_scores;
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("--manifest", ev_manifest, "Dataset manifest.tsv")->required();
    ev->add_option("--split", ev_split, "Split to evaluate")->capture_default_str();
    ev->add_option("--scores-out", ev_scores, "Write id<TAB>label<TAB>p_fake lines here");

    // ablate
    CLI::App* ab = app.add_subcommand("ablate", "Train full, euclidean, m1 and meanpool; compare on the test split");
    Overrides ab_o;
    ab_o.add_config(ab);
    add_train_flags(ab, ab_o);
    std::string ab_manifest;
    std::string ab_out;
    std::string ab_train_split = "train";
    std::string ab_val_split = "dev";
    std::string ab_test_split = "test";
    ab->add_option("--manifest", ab_manifest, "Dataset manifest.tsv")->required();
    ab->add_option("--out", ab_out, "Output directory (one subdirectory per variant)")->required();
    ab->add_option("--train-split", ab_train_split, "Training split")->capture_default_str();
    ab->add_option("--val-split", ab_val_split, "Threshold-selection split")->capture_default_str();
    ab->add_option("--test-split", ab_test_split, "Evaluation split")->capture_default_str();

    // inspect
    CLI::App* in = app.add_subcommand("inspect", "Prototype distances and, given a manifest, mode purity");
    std::string in_ckpt;
    std::string in_manifest;
    std::string in_split = "test";
    std::string in_attention;
    in->add_option("--checkpoint", in_ckpt, "Checkpoint file")->required();
    in->add_option("--manifest", in_manifest, "Dataset manifest.tsv with group tags");
    in->add_option("--split", in_split, "Split used for purity")->capture_default_str();
    in->add_option("--attention-out", in_attention, "Dump attention weights (id, slot, weights...)");

    // grad-check
    CLI::App* gc = app.add_subcommand("grad-check", "Finite-difference check of every parameter gradient");
    GradCheckConfig gc_cfg;
    std::string gc_variant = "full";
    gc->add_option("--variant", gc_variant, "Model variant")
        ->check(CLI::IsMember({"full", "euclidean", "m1", "meanpool"}))
        ->capture_default_str();
    gc->add_option("--seed", gc_cfg.seed, "Model and batch seed")->capture_default_str();
    gc->add_option("--input-dim", gc_cfg.model.input_dim, "Feature dimension D")->capture_default_str();
    gc->add_option("--model-dim", gc_cfg.model.model_dim, "Model width d")->capture_default_str();
    gc->add_option("--ball-dim", gc_cfg.model.ball_dim, "Embedding dim h")->capture_default_str();
    gc->add_option("--evidence", gc_cfg.model.evidence, "Evidence vectors M")->capture_default_str();
    gc->add_option("--prototypes", gc_cfg.model.prototypes, "Positive prototypes K")->capture_default_str();
    gc->add_option("--frames", gc_cfg.frames, "Frames per utterance T")->capture_default_str();
    gc->add_option("--lambda", gc_cfg.loss.lambda, "Cluster loss weight")->capture_default_str();
    gc->add_option("--beta", gc_cfg.loss.beta, "Separation loss weight")->capture_default_str();
    gc->add_option("--gamma", gc_cfg.loss.gamma, "Entropy term weight")->capture_default_str();
    gc->add_option("--step", gc_cfg.step, "Central-difference step")->capture_default_str();
    gc->add_option("--tolerance", gc_cfg.tolerance, "Maximum relative error")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
    }

    try {
        if (*gen) return cmd_gen(gen_o.resolve(), gen_out, gen_force);
        if (*tr) return cmd_train(tr_o.resolve(), tr_manifest, tr_train_split, tr_val_split, tr_out);
        if (*ev) return cmd_eval(ev_ckpt, ev_manifest, ev_split, ev_scores);
        if (*ab) return cmd_ablate(ab_o.resolve(), ab_manifest, ab_train_split, ab_val_split, ab_test_split, ab_out);
        if (*in) return cmd_inspect(in_ckpt, in_manifest, in_split, in_attention);
        if (*gc) return cmd_grad_check(gc_cfg, gc_variant);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::kGeneric);
    }
    return 0;
}
