// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/nn/checkpoint.hpp"

namespace httplib {
class Server;
}

namespace fgdm {

struct ServiceConfig {
    std::size_t max_upload_bytes = std::size_t{8} << 20;
    int default_nbins = 64;
    /// Static UI bundle mounted at "/" when non-empty.
    std::filesystem::path ui_dir;
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
    std::map<std::string, std::string> headers;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Session state behind the HTTP API. Handlers are plain member functions
/// so they can be driven without a socket; mount() wires them to routes.
class Service {
public:
    Service(ServiceConfig cfg, std::optional<nn::Checkpoint> ckpt);

    /// Registers an image and returns its id. `prefix` picks the id family.
    std::string add_image(ImageGrid img, std::string_view prefix = "img");
    std::optional<ImageGrid> image(const std::string& id) const;
    /// Registers dataset sources as source-NNNN and targets as target-NNNN.
    int preload_dataset(const std::filesystem::path& dir);

    /// Body: PNG bytes, or JSON {height, width, data} with data either a
    /// number array or base64 little-endian float32.
    ApiResponse post_images(std::string_view body);
    /// Body: {image_id, eta, tilde_t, seed, ablation}.
    ApiResponse post_translate(std::string_view body);
    ApiResponse get_spectrum(const std::map<std::string, std::string>& query) const;
    ApiResponse get_history() const;
    ApiResponse get_info() const;
    /// Exact float32 values of a stored image.
    ApiResponse get_image_raw(const std::string& id) const;

    void mount(httplib::Server& srv);

private:
    ServiceConfig cfg_;
    std::optional<nn::Checkpoint> ckpt_;
    mutable std::shared_mutex images_mu_;
    std::map<std::string, ImageGrid> images_;
    std::atomic<long> next_id_{0};
    mutable std::mutex history_mu_;
    nlohmann::json history_ = nlohmann::json::array();
};

/// Blocks serving until the process is stopped.
void serve(Service& svc, const std::string& host, int port);

}  // namespace fgdm
