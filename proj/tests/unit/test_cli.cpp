// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fgdm/cli.hpp"
#include "fgdm/io.hpp"
#include "fgdm/nn/checkpoint.hpp"
#include "fgdm/phantoms.hpp"
#include "helpers.hpp"

using namespace fgdm;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run fgdm_run(std::vector<std::string> args) {
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    return {code, o.str(), e.str()};
}

int count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("help and version") {
        const Run h = fgdm_run({"--help"});
        CHECK(h.code == 0);
        CHECK(h.out.find("translate") != std::string::npos);
        CHECK(fgdm_run({"--version"}).code == 0);
        CHECK(fgdm_run({"train", "--help"}).code == 0);
    }

    TEST_CASE("usage errors exit 1") {
        const Run r = fgdm_run({"translate", "--in", "x.png"});
        CHECK(r.code == 1);
        CHECK(r.err.find("--ckpt") != std::string::npos);
        CHECK(fgdm_run({"no-such-command"}).code == 1);
        CHECK(fgdm_run({"translate", "--ckpt", "a", "--in", "b", "--ablation", "bogus"}).code == 1);
    }

    TEST_CASE("runtime errors exit 2") {
        testing::TempDir dir("cli");
        const Run r = fgdm_run({"translate", "--ckpt", (dir / "missing.fgdm").string(), "--in", (dir / "x.png").string()});
        CHECK(r.code == 2);
        CHECK_FALSE(r.err.empty());
    }

    TEST_CASE("end to end smoke run") {
        testing::TempDir dir("e2e");
        const std::string data = (dir / "data").string(), model = (dir / "model/m.fgdm").string();
        REQUIRE(fgdm_run({"--seed", "1", "gen-data", "--n", "64", "--out", data}).code == 0);
        CHECK(fs::exists(dir / "data/manifest.json"));
        CHECK(fs::exists(dir / "data/source/0063.f32"));

        const Run t = fgdm_run({"--seed", "2", "train", "--data", data, "--epochs", "2", "--width", "4", "--out", model});
        REQUIRE_MESSAGE(t.code == 0, t.err);
        CHECK(fs::exists(dir / "model/m.fgdm"));
        CHECK(fs::exists(dir / "model/manifest.json"));
        CHECK(fs::exists(dir / "model/train_log.json"));
        CHECK(count_lines(dir / "model/train_log.csv") == 3);
        const nlohmann::json man = nlohmann::json::parse(read_file(dir / "model/manifest.json"));
        CHECK(man["experiment"]["checkpoint_sha256"] == sha256_hex(read_file(dir / "model/m.fgdm")));

        const std::string tdir = (dir / "translated").string();
        const Run tr = fgdm_run({"--seed", "3", "translate", "--ckpt", model, "--in", data, "--out", tdir});
        REQUIRE_MESSAGE(tr.code == 0, tr.err);
        CHECK(fs::exists(dir / "translated/0000.f32"));
        CHECK(fs::exists(dir / "translated/0063.f32"));

        const Run single = fgdm_run({"translate", "--ckpt", model, "--in", (dir / "data/source/0001.f32").string(),
                                     "--out", (dir / "one/out.png").string(), "--save-conditions",
                                     "--dump-intermediates", (dir / "steps").string()});
        REQUIRE_MESSAGE(single.code == 0, single.err);
        CHECK(fs::exists(dir / "one/out.png"));
        CHECK(fs::exists(dir / "one/out_high.f32"));
        CHECK(fs::exists(dir / "one/out_low.f32"));
        int steps = 0;
        for (const auto& e : fs::directory_iterator(dir / "steps"))
            if (e.path().extension() == ".f32") ++steps;
        CHECK(steps == 4);

        const Run ev = fgdm_run({"evaluate", "--translated", tdir, "--data", data, "--report", (dir / "eval/report.csv").string()});
        REQUIRE_MESSAGE(ev.code == 0, ev.err);
        CHECK(count_lines(dir / "eval/report.csv") == 66);
        CHECK(fs::exists(dir / "eval/report.json"));

        const Run sw = fgdm_run({"sweep", "--ckpt", model, "--data", data, "--count", "2", "--etas", "5,10",
                                 "--tilde-ts", "1,2,3", "--report", (dir / "sweep/s.csv").string()});
        REQUIRE_MESSAGE(sw.code == 0, sw.err);
        CHECK(count_lines(dir / "sweep/s.csv") == 7);
        CHECK(fs::exists(dir / "sweep/s.json"));

        const Run an = fgdm_run({"analyze", "--data", data, "--count", "8", "--out", (dir / "an").string()});
        REQUIRE_MESSAGE(an.code == 0, an.err);
        CHECK(count_lines(dir / "an/freq_mse_profile.csv") == 65);
        CHECK(fs::exists(dir / "an/target_psd.csv"));
        CHECK(fs::exists(dir / "an/analysis.json"));

        const Run fi = fgdm_run({"filter", "--in", (dir / "data/target/0000.f32").string(), "--out", (dir / "flt").string()});
        REQUIRE_MESSAGE(fi.code == 0, fi.err);
        CHECK(fs::exists(dir / "flt/high.png"));
        CHECK(fs::exists(dir / "flt/low.f32"));
    }

    TEST_CASE("flags override config which overrides defaults") {
        testing::TempDir dir("prec");
        const std::string data = (dir / "data").string();
        REQUIRE(fgdm_run({"gen-data", "--n", "8", "--size", "32", "--out", data}).code == 0);
        CHECK(read_manifest(dir / "data").phantom.size == 32);
        {
            std::ofstream cfg(dir / "cfg.json");
            cfg << R"({"training": {"epochs": 1, "batch_size": 4}, "phantom": {"size": 48}})";
        }
        const std::string cfg = (dir / "cfg.json").string();
        REQUIRE(fgdm_run({"--config", cfg, "train", "--data", data, "--width", "4", "--out", (dir / "a/m.fgdm").string()}).code == 0);
        CHECK(count_lines(dir / "a/train_log.csv") == 2);
        REQUIRE(fgdm_run({"--config", cfg, "train", "--data", data, "--width", "4", "--epochs", "2", "--betas", "0.5,0.9",
                          "--out", (dir / "b/m.fgdm").string()})
                    .code == 0);
        CHECK(count_lines(dir / "b/train_log.csv") == 3);
        const nn::Checkpoint ck = nn::load_checkpoint(dir / "b/m.fgdm");
        CHECK(ck.metadata["training"]["batch_size"] == 4);
        CHECK(ck.metadata["training"]["beta1"] == 0.5);
        CHECK(ck.metadata["training"]["beta2"] == 0.9);
        CHECK(nn::load_checkpoint(dir / "a/m.fgdm").metadata["training"]["beta1"] == 0.9);

        REQUIRE(fgdm_run({"--config", cfg, "gen-data", "--n", "2", "--out", (dir / "d48").string()}).code == 0);
        CHECK(read_manifest(dir / "d48").phantom.size == 48);
        REQUIRE(fgdm_run({"--config", cfg, "gen-data", "--n", "2", "--size", "40", "--out", (dir / "d40").string()}).code == 0);
        CHECK(read_manifest(dir / "d40").phantom.size == 40);
    }
}
