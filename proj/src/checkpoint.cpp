#include "phoenix/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>

#include "phoenix/config.hpp"
#include "phoenix/error.hpp"

namespace phoenix {

namespace {

constexpr std::uint8_t kTensor = 1;
constexpr std::uint8_t kText = 2;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_name(std::string& out, std::string_view name, std::uint8_t kind) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    out.push_back(static_cast<char>(kind));
}

void put_tensor(std::string& out, std::string_view name, const Matrix& m) {
    put_name(out, name, kTensor);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(m.data()[i]));
}

void put_text(std::string& out, std::string_view name, std::string_view text) {
    put_name(out, name, kText);
    put_u32(out, static_cast<std::uint32_t>(text.size()));
    out.append(text);
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

struct Entry {
    std::uint8_t kind = 0;
    Matrix tensor;
    std::string text;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }
    bool done() const noexcept { return pos_ == bytes_.size(); }

    const unsigned char* take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("checkpoint truncated at byte offset " + std::to_string(pos_) + " while reading " +
                              what + " (need " + std::to_string(n) + " bytes, " +
                              std::to_string(bytes_.size() - pos_) + " left)");
        }
        const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
        pos_ += n;
        return p;
    }

    std::uint32_t u32(const char* what) {
        const unsigned char* p = take(4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }

    std::uint64_t u64(const char* what) {
        const unsigned char* p = take(8, what);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        return v;
    }

    std::string str(std::size_t n, const char* what) {
        const unsigned char* p = take(n, what);
        return std::string(reinterpret_cast<const char*>(p), n);
    }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::map<std::string, Entry> read_entries(std::string_view bytes) {
    Reader r(bytes);
    const std::string magic = r.str(4, "magic");
    if (magic != std::string_view(kCheckpointMagic, 4)) throw FormatError("bad checkpoint magic at byte offset 0");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + " at byte offset 4");
    }
    const std::uint32_t count = r.u32("entry count");
    std::map<std::string, Entry> entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        const std::uint32_t name_len = r.u32("entry name length");
        std::string name = r.str(name_len, "entry name");
        Entry e;
        e.kind = *r.take(1, "entry kind");
        if (e.kind == kTensor) {
            const std::uint32_t rows = r.u32("tensor rows");
            const std::uint32_t cols = r.u32("tensor cols");
            e.tensor.resize(rows, cols);
            for (Eigen::Index k = 0; k < e.tensor.size(); ++k) {
                e.tensor.data()[k] = std::bit_cast<double>(r.u64("tensor data"));
            }
        } else if (e.kind == kText) {
            e.text = r.str(r.u32("text length"), "text");
        } else {
            throw FormatError("unknown entry kind " + std::to_string(e.kind) + " at byte offset " +
                              std::to_string(at));
        }
        if (!entries.emplace(name, std::move(e)).second) {
            throw FormatError("duplicate checkpoint entry '" + name + "' at byte offset " + std::to_string(at));
        }
    }
    if (!r.done()) throw FormatError("trailing bytes after checkpoint entries at byte offset " + std::to_string(r.offset()));
    return entries;
}

const Entry& need(const std::map<std::string, Entry>& entries, const std::string& name, std::uint8_t kind) {
    auto it = entries.find(name);
    if (it == entries.end()) throw FormatError("checkpoint is missing entry '" + name + "'");
    if (it->second.kind != kind) throw FormatError("checkpoint entry '" + name + "' has the wrong kind");
    return it->second;
}

const Matrix& need_tensor(const std::map<std::string, Entry>& entries, const std::string& name, Eigen::Index rows,
                          Eigen::Index cols) {
    const Matrix& m = need(entries, name, kTensor).tensor;
    if (m.rows() != rows || m.cols() != cols) {
        throw FormatError("checkpoint entry '" + name + "' is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", model expects " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    }
    return m;
}

std::uint64_t parse_u64(const std::string& text, const std::string& name) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument(name);
        return v;
    } catch (const std::exception&) {
        throw FormatError("checkpoint entry '" + name + "' is not an unsigned integer");
    }
}

}  // namespace

std::string encode_checkpoint(const TrainResult& state) {
    const std::vector<const ParamTensor*> params = state.model.parameters();
    const auto& m = state.optimizer.first_moments();
    const auto& v = state.optimizer.second_moments();
    if (m.size() != params.size() || v.size() != params.size()) {
        throw StructuralError("optimizer moments do not match the model's parameters");
    }
    std::string out(kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(6 + 3 * params.size()));
    put_text(out, "config", train_config_to_json(state.config));
    put_tensor(out, "threshold", scalar(state.threshold));
    put_tensor(out, "val_macro_f1", scalar(state.val_macro_f1));
    put_text(out, "rng.seed", std::to_string(state.config.seed));
    put_text(out, "rng.next_epoch", std::to_string(state.config.epochs + 1));
    put_text(out, "adamw.step", std::to_string(state.optimizer.steps()));
    for (const ParamTensor* p : params) put_tensor(out, "param/" + p->name, p->value);
    for (std::size_t i = 0; i < params.size(); ++i) put_tensor(out, "adamw.m/" + params[i]->name, m[i]);
    for (std::size_t i = 0; i < params.size(); ++i) put_tensor(out, "adamw.v/" + params[i]->name, v[i]);
    return out;
}

TrainResult decode_checkpoint(std::string_view bytes) {
    const auto entries = read_entries(bytes);
    const TrainConfig config = train_config_from_json(need(entries, "config", kText).text);
    if (parse_u64(need(entries, "rng.seed", kText).text, "rng.seed") != config.seed) {
        throw FormatError("checkpoint rng.seed disagrees with its config snapshot");
    }
    parse_u64(need(entries, "rng.next_epoch", kText).text, "rng.next_epoch");

    TrainResult state{config, Model(config.model, config.seed), AdamW{}, 0.5, 0.0, {}};
    std::vector<ParamTensor*> params = state.model.parameters();
    state.optimizer = AdamW(params, AdamW::Options{config.lr, config.beta1, config.beta2, config.eps,
                                                    config.weight_decay});
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamTensor& p = *params[i];
        p.value = need_tensor(entries, "param/" + p.name, p.value.rows(), p.value.cols());
        state.optimizer.first_moments()[i] = need_tensor(entries, "adamw.m/" + p.name, p.value.rows(), p.value.cols());
        state.optimizer.second_moments()[i] =
            need_tensor(entries, "adamw.v/" + p.name, p.value.rows(), p.value.cols());
        p.zero_grad();
    }
    if (entries.size() != 6 + 3 * params.size()) {
        throw FormatError("checkpoint holds " + std::to_string(entries.size()) + " entries, model expects " +
                          std::to_string(6 + 3 * params.size()));
    }
    state.optimizer.set_steps(parse_u64(need(entries, "adamw.step", kText).text, "adamw.step"));
    state.threshold = need_tensor(entries, "threshold", 1, 1)(0, 0);
    state.val_macro_f1 = need_tensor(entries, "val_macro_f1", 1, 1)(0, 0);
    return state;
}

void save_checkpoint(const TrainResult& state, const std::filesystem::path& file) {
    const std::string bytes = encode_checkpoint(state);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint " + file.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("failed writing checkpoint " + file.string());
}

TrainResult load_checkpoint(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + file.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_checkpoint(bytes);
    } catch (const FormatError& e) {
        throw FormatError(file.string() + ": " + e.what());
    }
}

}  // namespace phoenix
