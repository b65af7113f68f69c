#pragma once

#include "rankbench/model.hpp"

#include <cstdint>
#include <filesystem>

namespace rankbench {

// Checkpoint container, all integers little-endian:
//
//   bytes 0..7   magic "RBCKPT\0\0"
//   u32          format version (kCheckpointVersion)
//   u32          header length, followed by that many bytes of UTF-8 JSON:
//                {"format_version", "seed", "model": {...ModelConfig...}}
//   u32          tensor count
//   per tensor:  u32 name length, name bytes, u32 rank, u32 dims[rank],
//                prod(dims) IEEE-754 float32 values
//
// Tensors are the trainable parameters in parameter_layout() order followed
// by "positional_encoding" [T, D].
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);

// Values are widened back to double; they carry float32 precision.
ModelParams load_checkpoint(const std::filesystem::path& path);

// Rounds every value to float32, i.e. what a save/load round trip yields.
ModelParams quantize_to_checkpoint_precision(ModelParams params);

}  // namespace rankbench
