#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "phoenix/label.hpp"
#include "phoenix/linalg.hpp"

namespace phoenix {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Feature file layout (little-endian):
//   bytes 0..3   magic "HCFD"
//   bytes 4..7   u32 format version
//   bytes 8..11  u32 T (frames, >= 1)
//   bytes 12..15 u32 D (feature dimension)
//   then T*D f32 values, frame-major.
inline constexpr char kFeatureMagic[4] = {'H', 'C', 'F', 'D'};
inline constexpr std::uint32_t kFeatureFormatVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 16;

FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const FeatureMatrix& features, const std::filesystem::path& path);

/// An utterance's frame-level features and its annotations.
struct FeatureSequence {
    std::string id;
    Matrix features;  // T x D
    Label label = Label::kReal;
    std::string split;
    std::string group;
};

struct ManifestEntry {
    std::string id;
    std::string path;  // relative to the manifest's directory
    Label label = Label::kReal;
    std::string split;
    std::string group;
};

/// Tab-separated text with header `id path label split group`.
class Manifest {
public:
    static constexpr std::string_view kHeader = "id\tpath\tlabel\tsplit\tgroup";

    Manifest() = default;
    Manifest(std::vector<ManifestEntry> entries, std::filesystem::path root);

    static Manifest load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;

    const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
    const std::filesystem::path& root() const noexcept { return root_; }

    /// Split names in first-appearance order.
    std::vector<std::string> splits() const;
    bool has_split(std::string_view split) const;

    /// Loads every utterance of `split`; unknown split -> StructuralError listing the available ones.
    std::vector<FeatureSequence> load_split(std::string_view split) const;

private:
    std::vector<ManifestEntry> entries_;
    std::filesystem::path root_;
};

struct SynthConfig {
    Eigen::Index dim = 64;
    Eigen::Index min_frames = 40;
    Eigen::Index max_frames = 120;
    Eigen::Index modes = 4;             // G
    double artifact_fraction = 0.2;     // rho
    double artifact_strength = 2.0;
    double noise_std = 1.0;
    Eigen::Index train_count = 400;
    Eigen::Index dev_count = 100;
    Eigen::Index test_count = 100;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Pure function of the config: real utterances are temporally smoothed
/// Gaussian noise; fake ones add strength * delta_g on a rho-fraction of frames,
/// with g drawn uniformly per utterance and delta_g orthonormal. Values are
/// rounded to f32 so in-memory and on-disk datasets agree exactly.
std::vector<FeatureSequence> synthesize(const SynthConfig& config);

/// Writes features/<id>.hcfd and manifest.tsv under `out_dir`.
Manifest write_dataset(const std::vector<FeatureSequence>& sequences, const std::filesystem::path& out_dir);

/// Deterministic batches of indices into [0, count): one permutation per
/// (seed, epoch); the last partial batch is kept.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t count, std::size_t batch_size, std::uint64_t seed,
                                                 std::uint64_t epoch);

}  // namespace phoenix
