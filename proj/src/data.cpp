#include "phoenix/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "phoenix/error.hpp"
#include "phoenix/random.hpp"

namespace phoenix {

namespace fs = std::filesystem;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

}  // namespace

FeatureMatrix read_feature_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open feature file " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::string where = path.string() + ": ";

    if (bytes.size() < kFeatureHeaderBytes) {
        throw FormatError(where + "truncated header at byte offset " + std::to_string(bytes.size()) + " (need " +
                          std::to_string(kFeatureHeaderBytes) + " bytes)");
    }
    if (!std::equal(std::begin(kFeatureMagic), std::end(kFeatureMagic), bytes.begin())) {
        throw FormatError(where + "bad magic at byte offset 0 (expected HCFD)");
    }
    const std::uint32_t version = get_u32(p + 4);
    if (version != kFeatureFormatVersion) {
        throw FormatError(where + "unsupported format version " + std::to_string(version) + " at byte offset 4");
    }
    const std::uint32_t frames = get_u32(p + 8);
    const std::uint32_t dim = get_u32(p + 12);
    if (frames < 1) throw FormatError(where + "frame count must be >= 1 (byte offset 8)");
    const std::uint64_t expected = kFeatureHeaderBytes + std::uint64_t{frames} * dim * 4u;
    if (bytes.size() != expected) {
        throw FormatError(where + "payload length mismatch: expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size()) + " (first bad byte offset " +
                          std::to_string(std::min<std::uint64_t>(bytes.size(), expected)) + ")");
    }
    FeatureMatrix m(frames, dim);
    const unsigned char* payload = p + kFeatureHeaderBytes;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const float v = std::bit_cast<float>(get_u32(payload + 4 * i));
        if (!std::isfinite(v)) {
            throw FormatError(where + "non-finite value at byte offset " +
                              std::to_string(kFeatureHeaderBytes + 4 * static_cast<std::size_t>(i)));
        }
        m.data()[i] = v;
    }
    return m;
}

void write_feature_file(const FeatureMatrix& features, const fs::path& path) {
    if (features.rows() < 1) throw StructuralError("feature file needs at least one frame");
    if (!features.allFinite()) throw NumericError("refusing to write non-finite features to " + path.string());
    std::string out(kFeatureMagic, 4);
    put_u32(out, kFeatureFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(features.rows()));
    put_u32(out, static_cast<std::uint32_t>(features.cols()));
    out.reserve(kFeatureHeaderBytes + 4 * static_cast<std::size_t>(features.size()));
    for (Eigen::Index i = 0; i < features.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(features.data()[i]));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open " + path.string() + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("write failed for " + path.string());
}

Manifest::Manifest(std::vector<ManifestEntry> entries, fs::path root)
    : entries_(std::move(entries)), root_(std::move(root)) {
    std::unordered_set<std::string> seen;
    for (const ManifestEntry& e : entries_) {
        if (!seen.insert(e.id).second) throw FormatError("duplicate utterance id '" + e.id + "' in manifest");
    }
}

Manifest Manifest::load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw FormatError("cannot open manifest " + file.string());
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw FormatError(file.string() + ":1: expected header '" + std::string(kHeader) + "'");
    }
    std::vector<ManifestEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 5) {
            throw FormatError(file.string() + ":" + std::to_string(lineno) + ": expected 5 tab-separated fields, got " +
                              std::to_string(fields.size()));
        }
        try {
            entries.push_back(ManifestEntry{fields[0], fields[1], parse_label(fields[2]), fields[3], fields[4]});
        } catch (const FormatError& e) {
            throw FormatError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return Manifest(std::move(entries), file.parent_path());
}

void Manifest::save(const fs::path& file) const {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + file.string() + " for writing");
    out << kHeader << '\n';
    for (const ManifestEntry& e : entries_) {
        out << e.id << '\t' << e.path << '\t' << to_string(e.label) << '\t' << e.split << '\t' << e.group << '\n';
    }
}

std::vector<std::string> Manifest::splits() const {
    std::vector<std::string> names;
    for (const ManifestEntry& e : entries_) {
        if (std::find(names.begin(), names.end(), e.split) == names.end()) names.push_back(e.split);
    }
    return names;
}

bool Manifest::has_split(std::string_view split) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const ManifestEntry& e) { return e.split == split; });
}

std::vector<FeatureSequence> Manifest::load_split(std::string_view split) const {
    if (!has_split(split)) {
        std::string avail;
        for (const std::string& s : splits()) avail += (avail.empty() ? "" : ", ") + s;
        throw StructuralError("unknown split '" + std::string(split) + "'; available splits: " + avail);
    }
    std::vector<FeatureSequence> out;
    for (const ManifestEntry& e : entries_) {
        if (e.split != split) continue;
        const FeatureMatrix f = read_feature_file(root_ / e.path);
        out.push_back(FeatureSequence{e.id, f.cast<double>(), e.label, e.split, e.group});
    }
    return out;
}

void SynthConfig::validate() const {
    if (dim < 1) throw ConfigError("synth dim must be >= 1");
    if (min_frames < 1 || max_frames < min_frames) throw ConfigError("synth frame range must satisfy 1 <= min <= max");
    if (modes < 1) throw ConfigError("synth modes must be >= 1");
    if (modes > dim) throw ConfigError("synth modes cannot exceed dim (directions must be orthonormal)");
    if (!(artifact_fraction >= 0.0 && artifact_fraction <= 1.0)) {
        throw ConfigError("synth artifact_fraction must lie in [0, 1]");
    }
    if (!(noise_std >= 0.0)) throw ConfigError("synth noise_std must be >= 0");
    if (train_count < 0 || dev_count < 0 || test_count < 0) throw ConfigError("synth counts must be >= 0");
}

std::vector<FeatureSequence> synthesize(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Orthonormal artifact directions by Gram-Schmidt on Gaussian draws.
    Matrix directions(config.modes, config.dim);
    for (Eigen::Index g = 0; g < config.modes; ++g) {
        Eigen::RowVectorXd v(config.dim);
        for (Eigen::Index j = 0; j < config.dim; ++j) v(j) = gauss(rng);
        for (Eigen::Index k = 0; k < g; ++k) v -= v.dot(directions.row(k)) * directions.row(k);
        directions.row(g) = v / v.norm();
    }

    std::uniform_int_distribution<Eigen::Index> frames_dist(config.min_frames, config.max_frames);
    std::uniform_int_distribution<Eigen::Index> mode_dist(0, config.modes - 1);
    std::normal_distribution<double> noise(0.0, config.noise_std > 0.0 ? config.noise_std : 1.0);
    const double noise_scale = config.noise_std > 0.0 ? 1.0 : 0.0;

    std::vector<FeatureSequence> out;
    const std::pair<const char*, Eigen::Index> splits[] = {
        {"train", config.train_count}, {"dev", config.dev_count}, {"test", config.test_count}};
    for (const auto& [split, count] : splits) {
        for (Eigen::Index i = 0; i < count; ++i) {
            const Label label = (i % 2 == 1) ? Label::kFake : Label::kReal;
            const Eigen::Index frames = frames_dist(rng);

            Matrix raw(frames + 2, config.dim);
            for (Eigen::Index k = 0; k < raw.size(); ++k) raw.data()[k] = noise_scale * noise(rng);
            Matrix x(frames, config.dim);
            for (Eigen::Index t = 0; t < frames; ++t) x.row(t) = (raw.row(t) + raw.row(t + 1) + raw.row(t + 2)) / 3.0;

            std::string group = "real";
            if (label == Label::kFake) {
                const Eigen::Index mode = mode_dist(rng);
                group = "mode" + std::to_string(mode);
                Eigen::Index hits = static_cast<Eigen::Index>(std::lround(config.artifact_fraction * frames));
                if (config.artifact_fraction > 0.0) hits = std::max<Eigen::Index>(hits, 1);
                std::vector<Eigen::Index> order(static_cast<std::size_t>(frames));
                std::iota(order.begin(), order.end(), 0);
                std::shuffle(order.begin(), order.end(), rng);
                for (Eigen::Index h = 0; h < hits; ++h) {
                    x.row(order[static_cast<std::size_t>(h)]) += config.artifact_strength * directions.row(mode);
                }
            }
            std::ostringstream id;
            id << split << '_' << std::setfill('0') << std::setw(5) << i;
            out.push_back(FeatureSequence{id.str(), x.cast<float>().cast<double>(), label, split, group});
        }
    }
    return out;
}

Manifest write_dataset(const std::vector<FeatureSequence>& sequences, const fs::path& out_dir) {
    fs::create_directories(out_dir / "features");
    std::vector<ManifestEntry> entries;
    for (const FeatureSequence& s : sequences) {
        const std::string rel = "features/" + s.id + ".hcfd";
        write_feature_file(s.features.cast<float>(), out_dir / rel);
        entries.push_back(ManifestEntry{s.id, rel, s.label, s.split, s.group});
    }
    Manifest m(std::move(entries), out_dir);
    m.save(out_dir / "manifest.tsv");
    return m;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                                 std::uint64_t epoch) {
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32), 0x5eedu};
    Rng rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < count; start += batch_size) {
        const std::size_t end = std::min(count, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace phoenix
