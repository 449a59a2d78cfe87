#include "phoenix/config.hpp"

#include <fstream>
#include <sstream>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "phoenix/error.hpp"

namespace phoenix {

using nlohmann::ordered_json;

namespace {

// Reads typed fields out of one JSON object and remembers which keys were used.
class Section {
public:
    Section(const ordered_json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
        if (!obj_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        known_.push_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) throw ConfigError("");
                out = it->template get<double>();
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!it->is_number_unsigned()) throw ConfigError("");
                out = it->template get<T>();
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ConfigError("");
                out = it->template get<T>();
            } else {
                out = it->template get<T>();
            }
        } catch (const std::exception&) {
            throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
        }
    }

    void reject_unknown() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            bool ok = false;
            for (const std::string& k : known_) ok = ok || k == it.key();
            if (!ok) throw ConfigError("unknown config key '" + name_ + "." + it.key() + "'");
        }
    }

private:
    const ordered_json& obj_;
    std::string name_;
    std::vector<std::string> known_;
};

void read_synth(const ordered_json& j, SynthConfig& s) {
    Section sec(j, "synth");
    sec.read("dim", s.dim);
    sec.read("min_frames", s.min_frames);
    sec.read("max_frames", s.max_frames);
    sec.read("modes", s.modes);
    sec.read("artifact_fraction", s.artifact_fraction);
    sec.read("artifact_strength", s.artifact_strength);
    sec.read("noise_std", s.noise_std);
    sec.read("train_count", s.train_count);
    sec.read("dev_count", s.dev_count);
    sec.read("test_count", s.test_count);
    sec.read("seed", s.seed);
    sec.reject_unknown();
}

void read_train(const ordered_json& j, TrainConfig& t) {
    Section sec(j, "train");
    sec.read("epochs", t.epochs);
    sec.read("batch_size", t.batch_size);
    sec.read("lr", t.lr);
    sec.read("weight_decay", t.weight_decay);
    sec.read("beta1", t.beta1);
    sec.read("beta2", t.beta2);
    sec.read("eps", t.eps);
    sec.read("grad_clip", t.grad_clip);
    sec.read("seed", t.seed);
    sec.read("input_dim", t.model.input_dim);
    sec.read("model_dim", t.model.model_dim);
    sec.read("ball_dim", t.model.ball_dim);
    sec.read("evidence", t.model.evidence);
    sec.read("prototypes", t.model.prototypes);
    sec.read("layers", t.model.layers);
    sec.read("curvature", t.model.curvature);
    sec.read("tau", t.model.tau);
    std::string variant(to_string(t.model.variant));
    sec.read("variant", variant);
    t.model.variant = parse_variant(variant);
    sec.read("lambda", t.loss.lambda);
    sec.read("beta", t.loss.beta);
    sec.read("gamma", t.loss.gamma);
    sec.read("entropy_sign", t.loss.entropy_sign);
    sec.reject_unknown();
}

ordered_json synth_json(const SynthConfig& s) {
    return ordered_json{{"dim", s.dim},
                        {"min_frames", s.min_frames},
                        {"max_frames", s.max_frames},
                        {"modes", s.modes},
                        {"artifact_fraction", s.artifact_fraction},
                        {"artifact_strength", s.artifact_strength},
                        {"noise_std", s.noise_std},
                        {"train_count", s.train_count},
                        {"dev_count", s.dev_count},
                        {"test_count", s.test_count},
                        {"seed", s.seed}};
}

ordered_json train_json(const TrainConfig& t) {
    return ordered_json{{"epochs", t.epochs},
                        {"batch_size", t.batch_size},
                        {"lr", t.lr},
                        {"weight_decay", t.weight_decay},
                        {"beta1", t.beta1},
                        {"beta2", t.beta2},
                        {"eps", t.eps},
                        {"grad_clip", t.grad_clip},
                        {"seed", t.seed},
                        {"input_dim", t.model.input_dim},
                        {"model_dim", t.model.model_dim},
                        {"ball_dim", t.model.ball_dim},
                        {"evidence", t.model.evidence},
                        {"prototypes", t.model.prototypes},
                        {"layers", t.model.layers},
                        {"curvature", t.model.curvature},
                        {"tau", t.model.tau},
                        {"variant", std::string(to_string(t.model.variant))},
                        {"lambda", t.loss.lambda},
                        {"beta", t.loss.beta},
                        {"gamma", t.loss.gamma},
                        {"entropy_sign", t.loss.entropy_sign}};
}

ordered_json parse_object(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    const ordered_json j = parse_object(json_text);
    RunConfig cfg;
    auto version = j.find("version");
    if (version == j.end()) throw ConfigError("config is missing the 'version' key");
    if (!version->is_number_integer() || version->get<int>() != kRunConfigVersion) {
        throw ConfigError("unsupported config version " + version->dump() + " (expected " +
                          std::to_string(kRunConfigVersion) + ")");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "version") continue;
        if (it.key() == "synth") {
            read_synth(it.value(), cfg.synth);
        } else if (it.key() == "train") {
            read_train(it.value(), cfg.train);
        } else {
            throw ConfigError("unknown config key '" + it.key() + "'");
        }
    }
    cfg.synth.validate();
    cfg.train.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& config) {
    ordered_json j{{"version", kRunConfigVersion}, {"synth", synth_json(config.synth)}, {"train", train_json(config.train)}};
    return j.dump(2);
}

std::string train_config_to_json(const TrainConfig& config) {
    return ordered_json{{"version", kRunConfigVersion}, {"train", train_json(config)}}.dump();
}

TrainConfig train_config_from_json(const std::string& json_text) {
    const ordered_json j = parse_object(json_text);
    auto it = j.find("train");
    if (it == j.end()) throw ConfigError("config snapshot has no 'train' section");
    TrainConfig t;
    read_train(*it, t);
    t.validate();
    return t;
}

}  // namespace phoenix
