// SPDX-License-Identifier: Apache-2.0
#include "fgdm/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "fgdm/errors.hpp"
#include "fgdm/io.hpp"
#include "fgdm/metrics.hpp"
#include "fgdm/phantoms.hpp"
#include "fgdm/spectral.hpp"
#include "fgdm/translate.hpp"

namespace fgdm {

namespace {

using nlohmann::json;

ApiResponse reply(int status, const json& j) { return {status, j.dump(), "application/json", {}}; }

ApiResponse error(int status, const std::string& msg, const std::string& field = "") {
    json j = {{"error", msg}};
    if (!field.empty()) j["field"] = field;
    return reply(status, j);
}

std::span<const std::uint8_t> bytes_of(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

bool looks_like_png(std::string_view b) { return b.size() >= 8 && std::memcmp(b.data(), "\x89PNG\r\n\x1a\n", 8) == 0; }

std::string png_b64(const ImageGrid& img) { return base64_encode(encode_png(clamp_unit(img))); }

/// Display-only: the noisy starting state is stretched from [-1, 2] to [0, 1].
ImageGrid display_low(const ImageGrid& low) {
    ImageGrid out = low;
    for (double& v : out.values()) v = std::clamp((v + 1.0) / 3.0, 0.0, 1.0);
    return out;
}

ImageGrid decode_json_image(const json& j) {
    const int h = j.at("height").get<int>();
    const int w = j.at("width").get<int>();
    if (h < 1 || w < 1) throw FormatError("height and width must be positive");
    const auto& d = j.at("data");
    if (d.is_string()) return decode_raw(base64_decode(d.get<std::string>()), h, w);
    if (!d.is_array() || d.size() != static_cast<std::size_t>(h) * w) throw FormatError("data has the wrong length");
    std::vector<double> v;
    v.reserve(d.size());
    for (const auto& x : d) {
        if (!x.is_number()) throw FormatError("data must be numeric");
        v.push_back(x.get<double>());
    }
    return ImageGrid(h, w, std::move(v));
}

}  // namespace

Service::Service(ServiceConfig cfg, std::optional<nn::Checkpoint> ckpt) : cfg_(std::move(cfg)), ckpt_(std::move(ckpt)) {}

std::string Service::add_image(ImageGrid img, std::string_view prefix) {
    const long n = next_id_.fetch_add(1);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06ld", n);
    std::string id = std::string(prefix) + "-" + buf;
    std::unique_lock lock(images_mu_);
    images_.emplace(id, std::move(img));
    return id;
}

std::optional<ImageGrid> Service::image(const std::string& id) const {
    std::shared_lock lock(images_mu_);
    auto it = images_.find(id);
    if (it == images_.end()) return std::nullopt;
    return it->second;
}

int Service::preload_dataset(const std::filesystem::path& dir) {
    const auto man = read_manifest(dir);
    std::unique_lock lock(images_mu_);
    char buf[32];
    for (int i = 0; i < man.count; ++i) {
        std::snprintf(buf, sizeof buf, "source-%04d", i);
        images_[buf] = load_image(source_path(dir, i));
        std::snprintf(buf, sizeof buf, "target-%04d", i);
        images_[buf] = load_image(target_path(dir, i));
    }
    return man.count;
}

ApiResponse Service::post_images(std::string_view body) {
    if (body.size() > cfg_.max_upload_bytes) return error(413, "payload exceeds the upload limit");
    if (body.empty()) return error(400, "empty payload");
    ImageGrid img;
    try {
        if (looks_like_png(body)) {
            img = decode_png(bytes_of(body));
        } else {
            img = decode_json_image(json::parse(body));
        }
    } catch (const json::exception& e) {
        return error(400, std::string("malformed image payload: ") + e.what());
    } catch (const Error& e) {
        return error(400, std::string("malformed image payload: ") + e.what());
    }
    if (!img.all_finite()) return error(400, "image contains non-finite values");
    const int h = img.height(), w = img.width();
    const std::string id = add_image(std::move(img));
    return reply(200, {{"image_id", id}, {"height", h}, {"width", w}});
}

ApiResponse Service::post_translate(std::string_view body) {
    json req;
    try {
        req = json::parse(body);
    } catch (const json::exception& e) {
        return error(400, std::string("body is not valid JSON: ") + e.what());
    }
    if (!req.is_object()) return error(400, "body must be a JSON object");
    if (!ckpt_) return error(409, "no checkpoint loaded");
    const int T = ckpt_->schedule.T();

    if (!req.contains("image_id") || !req["image_id"].is_string()) return error(422, "image_id must be a string", "image_id");
    const std::string id = req["image_id"].get<std::string>();
    const auto src = image(id);
    if (!src) return error(404, "unknown image_id '" + id + "'");

    TranslationConfig cfg;
    if (req.contains("eta")) {
        if (!req["eta"].is_number() || !(req["eta"].get<double>() >= 0.0) || !std::isfinite(req["eta"].get<double>()))
            return error(422, "eta must be a non-negative number", "eta");
        cfg.eta = req["eta"].get<double>();
    }
    if (req.contains("tilde_t")) {
        if (!req["tilde_t"].is_number_integer()) return error(422, "tilde_t must be an integer", "tilde_t");
        cfg.tilde_T = req["tilde_t"].get<int>();
    }
    if (cfg.tilde_T < 1 || cfg.tilde_T > T)
        return error(422, "tilde_t must lie in [1," + std::to_string(T) + "]", "tilde_t");
    if (req.contains("seed")) {
        if (!req["seed"].is_number_unsigned()) return error(422, "seed must be a non-negative integer", "seed");
        cfg.seed = req["seed"].get<std::uint64_t>();
    }
    if (req.contains("ablation")) {
        try {
            cfg.ablation = parse_ablation(req["ablation"].is_string() ? req["ablation"].get<std::string>() : "");
        } catch (const ArgumentError& e) {
            return error(422, e.what(), "ablation");
        }
    }
    if (src->height() % 4 || src->width() % 4 || src->height() < 11 || src->width() < 11)
        return error(422, "image sides must be multiples of 4 and at least 12", "image_id");

    const auto t0 = std::chrono::steady_clock::now();
    const TranslationResult r = translate(*src, cfg, ckpt_->generator, ckpt_->schedule);
    const json metrics = {{"psnr_source", psnr(r.output, *src)},
                          {"ssim_source", ssim(r.output, *src)},
                          {"freq_mse_source", frequency_mse(r.output, *src)}};
    const std::string rid = add_image(r.output, "result");
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    json resp = {{"result_id", rid},
                 {"result_image", png_b64(r.output)},
                 {"h_image", png_b64(r.high)},
                 {"l_image", png_b64(display_low(r.low))},
                 {"source_image", png_b64(*src)},
                 {"metrics", metrics},
                 {"config", cfg.to_json()},
                 {"elapsed_ms", ms}};
    {
        std::lock_guard lock(history_mu_);
        history_.push_back({{"index", history_.size()},
                            {"request", req},
                            {"config", cfg.to_json()},
                            {"image_id", id},
                            {"result_id", rid},
                            {"metrics", metrics}});
    }
    return reply(200, resp);
}

ApiResponse Service::get_spectrum(const std::map<std::string, std::string>& q) const {
    auto it = q.find("image_id");
    if (it == q.end()) return error(422, "image_id is required", "image_id");
    const auto a = image(it->second);
    if (!a) return error(404, "unknown image_id '" + it->second + "'");
    int nbins = cfg_.default_nbins;
    if (auto nb = q.find("nbins"); nb != q.end()) {
        try {
            std::size_t used = 0;
            nbins = std::stoi(nb->second, &used);
            if (used != nb->second.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            return error(422, "nbins must be an integer", "nbins");
        }
        if (nbins < 2) return error(422, "nbins must be >= 2", "nbins");
    }
    SpectralProfile prof;
    if (auto c = q.find("compare_id"); c != q.end()) {
        const auto b = image(c->second);
        if (!b) return error(404, "unknown compare_id '" + c->second + "'");
        if (!a->same_shape(*b)) return error(422, "image_id and compare_id differ in shape", "compare_id");
        prof = radial_frequency_mse(*a, *b, nbins);
    } else {
        prof = radial_psd(*a, nbins);
    }
    json rows = json::array();
    for (int i = 0; i < prof.nbins(); ++i) rows.push_back({prof.center(i), prof.values[static_cast<std::size_t>(i)]});
    return reply(200, {{"profile", rows}, {"nbins", nbins}});
}

ApiResponse Service::get_history() const {
    std::lock_guard lock(history_mu_);
    return reply(200, history_);
}

ApiResponse Service::get_info() const {
    json j = {{"checkpoint_loaded", ckpt_.has_value()}, {"eta_range", {1, 25}}};
    if (ckpt_) {
        j["T"] = ckpt_->schedule.T();
        j["checkpoint_sha256"] = ckpt_->sha256;
        if (ckpt_->metadata.contains("eta_range")) j["eta_range"] = ckpt_->metadata["eta_range"];
    }
    return reply(200, j);
}

ApiResponse Service::get_image_raw(const std::string& id) const {
    const auto img = image(id);
    if (!img) return error(404, "unknown image_id '" + id + "'");
    const auto raw = encode_raw(*img);
    ApiResponse r{200, std::string(raw.begin(), raw.end()), "application/octet-stream", {}};
    r.headers["X-Image-Height"] = std::to_string(img->height());
    r.headers["X-Image-Width"] = std::to_string(img->width());
    return r;
}

void Service::mount(httplib::Server& srv) {
    auto send = [](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        for (const auto& [k, v] : r.headers) res.set_header(k, v);
        res.set_content(r.body, r.content_type);
    };
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Expose-Headers", "X-Image-Height, X-Image-Width"}});
    srv.set_payload_max_length(cfg_.max_upload_bytes);
    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.Post("/api/images", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, post_images(req.body));
    });
    srv.Post("/api/translate", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, post_translate(req.body));
    });
    srv.Get("/api/spectrum", [this, send](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> q;
        for (const auto& [k, v] : req.params) q[k] = v;
        send(res, get_spectrum(q));
    });
    srv.Get("/api/history", [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_history()); });
    srv.Get("/api/info", [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_info()); });
    srv.Get(R"(/api/images/([A-Za-z0-9_-]+)/raw)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_image_raw(req.matches[1]));
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string msg = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            msg = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", msg}}.dump(), "application/json");
    });
    if (!cfg_.ui_dir.empty()) srv.set_mount_point("/", cfg_.ui_dir.string());
}

void serve(Service& svc, const std::string& host, int port) {
    httplib::Server srv;
    svc.mount(srv);
    if (!srv.listen(host, port)) throw IoError("could not listen on " + host + ":" + std::to_string(port));
}

}  // namespace fgdm
