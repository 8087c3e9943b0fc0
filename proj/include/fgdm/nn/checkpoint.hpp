// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "fgdm/nn/model.hpp"
#include "fgdm/schedule.hpp"

namespace fgdm::nn {

/// Frozen weights plus everything needed to run translation with them.
struct Checkpoint {
    Generator<float> generator;
    std::optional<Discriminator<float>> discriminator;
    NoiseSchedule schedule;
    /// Free-form: eta_range, training config, dataset manifest hash, ...
    nlohmann::json metadata;
    /// SHA-256 of the file bytes (filled on load and on save).
    std::string sha256;
};

/// Layout: 8-byte magic "FGDMCKPT", u32 version, u64 header length, JSON
/// header, then the generator blob and the optional discriminator blob as
/// little-endian float32.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Returns the SHA-256 of what was written.
std::string save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fgdm::nn
