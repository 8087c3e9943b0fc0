// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

namespace fgdm {

std::string_view tool_version();

/// Record written as manifest.json next to every artifact set the CLI produces.
struct ExperimentManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string checkpoint_sha256;  // empty when no checkpoint is involved
    std::vector<std::string> artifacts;
    std::string tool_version;
    std::string started_utc;
    std::string finished_utc;

    nlohmann::json to_json() const;
    static ExperimentManifest from_json(const nlohmann::json& j);
};

/// ISO-8601 UTC timestamp, second resolution.
std::string utc_now();

/// Writes dir/manifest.json. Keys of `extra` are merged at top level, so a
/// dataset directory keeps a single manifest holding both records.
void write_manifest(const std::filesystem::path& dir, const ExperimentManifest& m,
                    const nlohmann::json& extra = nlohmann::json::object());

}  // namespace fgdm
