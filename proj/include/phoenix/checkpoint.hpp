#pragma once

// Binary checkpoint, little-endian:
//   "PHNX" | u32 version | u32 entry count | entries...
// entry: u32 name length | name | u8 kind | payload
//   kind 1 (tensor): u32 rows | u32 cols | rows*cols f64, row-major
//   kind 2 (text):   u32 length | bytes
// Entries: config (JSON text), threshold, val_macro_f1, rng.seed, rng.next_epoch,
// adamw.step, then param/<name>, adamw.m/<name>, adamw.v/<name> per tensor.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "phoenix/trainer.hpp"

namespace phoenix {

inline constexpr char kCheckpointMagic[4] = {'P', 'H', 'N', 'X'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const TrainResult& state);
TrainResult decode_checkpoint(std::string_view bytes);

void save_checkpoint(const TrainResult& state, const std::filesystem::path& file);
TrainResult load_checkpoint(const std::filesystem::path& file);

}  // namespace phoenix
