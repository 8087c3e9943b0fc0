// SPDX-License-Identifier: Apache-2.0
#include "fgdm/manifest.hpp"

#include <chrono>
#include <ctime>

#include "fgdm/io.hpp"

#ifndef FGDM_VERSION
#define FGDM_VERSION "0.0.0"
#endif

namespace fgdm {

std::string_view tool_version() { return FGDM_VERSION; }

nlohmann::json ExperimentManifest::to_json() const {
    return {{"command", command},           {"config", config},     {"seed", seed},
            {"checkpoint_sha256", checkpoint_sha256}, {"artifacts", artifacts}, {"tool_version", tool_version},
            {"started_utc", started_utc},   {"finished_utc", finished_utc}};
}

ExperimentManifest ExperimentManifest::from_json(const nlohmann::json& j) {
    ExperimentManifest m;
    m.command = j.value("command", "");
    m.config = j.value("config", nlohmann::json::object());
    m.seed = j.value("seed", std::uint64_t{0});
    m.checkpoint_sha256 = j.value("checkpoint_sha256", "");
    m.artifacts = j.value("artifacts", std::vector<std::string>{});
    m.tool_version = j.value("tool_version", "");
    m.started_utc = j.value("started_utc", "");
    m.finished_utc = j.value("finished_utc", "");
    return m;
}

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::filesystem::path& dir, const ExperimentManifest& m, const nlohmann::json& extra) {
    nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
    j["experiment"] = m.to_json();
    const std::string text = j.dump(2) + "\n";
    write_file(dir / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace fgdm
