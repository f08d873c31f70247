#pragma once

#include <filesystem>
#include <variant>

#include "relight/losses.hpp"
#include "relight/network.hpp"

namespace relight::train {

/// Anything the checkpoint container can hold. The header records which
/// alternative (kind + element type) the payload is.
using CheckpointPayload =
    std::variant<nn::ShadowTransferModel<float>, nn::ShadowTransferModel<double>,
                 nn::SunEstNet<float>, nn::SunEstNet<double>,
                 nn::FeatureExtractor<float>, nn::FeatureExtractor<double>>;

struct Checkpoint {
  uint64_t seed = 0;
  CheckpointPayload payload;
};

/// Binary container: magic, length-prefixed JSON header naming every tensor
/// (name, shape, element type, byte offset, length) plus config and seed,
/// then a contiguous little-endian payload. Save -> load round-trips
/// bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws CorruptCheckpoint on structural damage (bad magic, version,
/// truncation, overlapping or out-of-bounds tensors).
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace relight::train
