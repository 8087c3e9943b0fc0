// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <httplib.h>

#include <cstring>
#include <thread>

#include "fgdm/io.hpp"
#include "fgdm/phantoms.hpp"
#include "fgdm/service.hpp"
#include "helpers.hpp"

using namespace fgdm;
using nlohmann::json;

namespace {

nn::Checkpoint tiny_checkpoint() {
    return {nn::Generator<float>(nn::GeneratorArch{4, 2, 8, 8}, 1), std::nullopt, make_schedule(8),
            {{"eta_range", {1, 25}}}, "abc"};
}

std::string png_body(const ImageGrid& img) {
    const auto b = encode_png(img);
    return std::string(b.begin(), b.end());
}

ImageGrid decode_b64_png(const json& v) { return decode_png(base64_decode(v.get<std::string>())); }

}  // namespace

TEST_SUITE("service") {
    TEST_CASE("image upload") {
        Service svc({}, std::nullopt);
        const ImageGrid img = testing::random_image(64, 64, 1);
        const ApiResponse a = svc.post_images(png_body(img));
        REQUIRE(a.status == 200);
        const ApiResponse b = svc.post_images(png_body(img));
        CHECK(a.json()["image_id"] != b.json()["image_id"]);
        CHECK(a.json()["height"] == 64);

        std::string trunc = png_body(img);
        trunc.resize(trunc.size() / 2);
        CHECK(svc.post_images(trunc).status == 400);
        CHECK(svc.post_images("").status == 400);
        CHECK(svc.post_images("{\"height\": 2}").status == 400);

        std::vector<float> f(16, 0.25f);
        std::vector<std::uint8_t> raw(f.size() * 4);
        std::memcpy(raw.data(), f.data(), raw.size());
        const ApiResponse j = svc.post_images(json{{"height", 4}, {"width", 4}, {"data", base64_encode(raw)}}.dump());
        REQUIRE(j.status == 200);
        CHECK(*svc.image(j.json()["image_id"]) == ImageGrid(4, 4, 0.25));
        const ApiResponse arr = svc.post_images(json{{"height", 1}, {"width", 2}, {"data", {0.5, 1.5}}}.dump());
        REQUIRE(arr.status == 200);
        CHECK((*svc.image(arr.json()["image_id"]))(0, 1) == 1.5);

        ServiceConfig small;
        small.max_upload_bytes = 100;
        Service lim(small, std::nullopt);
        CHECK(lim.post_images(png_body(img)).status == 413);
    }

    TEST_CASE("translate endpoint") {
        Service svc({}, tiny_checkpoint());
        Rng rng(2);
        const std::string id = svc.add_image(make_target_phantom(PhantomSpec{}, rng));
        const ApiResponse r = svc.post_translate(json{{"image_id", id}}.dump());
        REQUIRE(r.status == 200);
        const json j = r.json();
        for (const char* k : {"result_image", "h_image", "l_image", "source_image"})
            CHECK(decode_b64_png(j[k]).height() == 64);
        CHECK(j["config"]["eta"] == 10.0);
        CHECK(j["config"]["tilde_t"] == 4);
        CHECK(j["metrics"].contains("psnr_source"));
        CHECK(svc.image(j["result_id"]).has_value());

        const json req = {{"image_id", id}, {"eta", 15}, {"tilde_t", 2}, {"seed", 7}};
        CHECK(svc.post_translate(req.dump()).json()["result_image"] == svc.post_translate(req.dump()).json()["result_image"]);

        const ApiResponse nh = svc.post_translate(json{{"image_id", id}, {"ablation", "no_high_freq"}}.dump());
        REQUIRE(nh.status == 200);
        CHECK(decode_b64_png(nh.json()["h_image"]) == ImageGrid(64, 64));

        const ApiResponse big = svc.post_translate(json{{"image_id", id}, {"tilde_t", 99}}.dump());
        CHECK(big.status == 422);
        CHECK(big.json()["field"] == "tilde_t");
        CHECK(svc.post_translate(json{{"image_id", id}, {"eta", -1}}.dump()).status == 422);
        CHECK(svc.post_translate(json{{"image_id", id}, {"ablation", "x"}}.dump()).status == 422);
        CHECK(svc.post_translate(json{{"image_id", "img-999999"}}.dump()).status == 404);
        CHECK(svc.post_translate("{not json").status == 400);

        Service bare({}, std::nullopt);
        const std::string bid = bare.add_image(ImageGrid(64, 64));
        CHECK(bare.post_translate(json{{"image_id", bid}}.dump()).status == 409);
    }

    TEST_CASE("history") {
        Service svc({}, tiny_checkpoint());
        CHECK(svc.get_history().json() == json::array());
        const std::string id = svc.add_image(testing::random_image(32, 32, 3));
        std::vector<json> reqs;
        for (int k = 0; k < 3; ++k) {
            reqs.push_back({{"image_id", id}, {"eta", 5 + 5 * k}, {"tilde_t", 1 + k}, {"seed", k}});
            REQUIRE(svc.post_translate(reqs.back().dump()).status == 200);
        }
        const json h = svc.get_history().json();
        REQUIRE(h.size() == 3);
        for (int k = 0; k < 3; ++k) {
            CHECK(h[k]["index"] == k);
            CHECK(h[k]["request"] == reqs[k]);
            CHECK(h[k]["config"]["tilde_t"] == 1 + k);
        }
    }

    TEST_CASE("spectrum endpoint") {
        Service svc({}, std::nullopt);
        const PhantomSpec p;
        const DegradationSpec d;
        auto [tgt, src] = make_pair(0, p, d);
        const std::string a = svc.add_image(src), b = svc.add_image(tgt);
        const json self = svc.get_spectrum({{"image_id", a}, {"compare_id", a}}).json();
        CHECK(self["profile"].size() == 64);
        for (const auto& row : self["profile"]) CHECK(row[1] == 0.0);
        const json diff = svc.get_spectrum({{"image_id", a}, {"compare_id", b}}).json();
        double best = -1, at = 0;
        for (const auto& row : diff["profile"])
            if (row[1].get<double>() > best) best = row[1], at = row[0];
        CHECK(at >= d.f_lo);
        CHECK(at <= d.f_hi + 0.006);
        CHECK(svc.get_spectrum({{"image_id", a}, {"nbins", "16"}}).json()["profile"].size() == 16);
        CHECK(svc.get_spectrum({{"image_id", a}, {"nbins", "1"}}).status == 422);
        CHECK(svc.get_spectrum({}).status == 422);
        CHECK(svc.get_spectrum({{"image_id", "nope"}}).status == 404);
        const std::string small = svc.add_image(ImageGrid(8, 8));
        CHECK(svc.get_spectrum({{"image_id", a}, {"compare_id", small}}).status == 422);
    }

    TEST_CASE("dataset preload and raw images") {
        testing::TempDir dir("svc");
        make_paired_dataset(3, PhantomSpec{}, DegradationSpec{}, dir.path());
        Service svc({}, std::nullopt);
        CHECK(svc.preload_dataset(dir.path()) == 3);
        REQUIRE(svc.image("source-0002").has_value());
        const ApiResponse raw = svc.get_image_raw("target-0001");
        CHECK(raw.content_type == "application/octet-stream");
        CHECK(raw.headers.at("X-Image-Height") == "64");
        const auto bytes = std::vector<std::uint8_t>(raw.body.begin(), raw.body.end());
        CHECK(decode_raw(bytes, 64, 64) == *svc.image("target-0001"));
        CHECK(svc.get_image_raw("none").status == 404);
        CHECK(svc.get_info().json()["checkpoint_loaded"] == false);
    }

    TEST_CASE("http round trip") {
        Service svc({}, tiny_checkpoint());
        httplib::Server srv;
        svc.mount(srv);
        const int port = srv.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        std::thread th([&] { srv.listen_after_bind(); });
        srv.wait_until_ready();

        httplib::Client cli("127.0.0.1", port);
        const auto up = cli.Post("/api/images", png_body(testing::random_image(32, 32, 4)), "image/png");
        REQUIRE(up);
        CHECK(up->status == 200);
        CHECK(up->get_header_value("Access-Control-Allow-Origin") == "*");
        const std::string id = json::parse(up->body)["image_id"];

        const auto pre = cli.Options("/api/translate");
        REQUIRE(pre);
        CHECK(pre->status == 204);

        const auto tr = cli.Post("/api/translate", json{{"image_id", id}, {"tilde_t", 2}}.dump(), "application/json");
        REQUIRE(tr);
        CHECK(tr->status == 200);
        const auto bad = cli.Post("/api/translate", json{{"image_id", id}, {"tilde_t", 99}}.dump(), "application/json");
        REQUIRE(bad);
        CHECK(bad->status == 422);

        const auto sp = cli.Get("/api/spectrum?image_id=" + id + "&nbins=8");
        REQUIRE(sp);
        CHECK(json::parse(sp->body)["profile"].size() == 8);
        const auto hist = cli.Get("/api/history");
        REQUIRE(hist);
        CHECK(json::parse(hist->body).size() == 1);
        const auto info = cli.Get("/api/info");
        REQUIRE(info);
        CHECK(json::parse(info->body)["T"] == 8);
        const auto raw = cli.Get("/api/images/" + id + "/raw");
        REQUIRE(raw);
        CHECK(raw->get_header_value("X-Image-Width") == "32");
        CHECK(raw->body.size() == 32 * 32 * 4);

        srv.stop();
        th.join();
    }
}
