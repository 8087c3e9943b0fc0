// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "fgdm/errors.hpp"
#include "fgdm/metrics.hpp"
#include "fgdm/spectral.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fgdm;

TEST_SUITE("metrics") {
    TEST_CASE("psnr") {
        const ImageGrid a = testing::random_image(20, 20, 1);
        CHECK(psnr(a, a) == kPsnrCap);
        CHECK(psnr(ImageGrid(8, 8, 0.0), ImageGrid(8, 8, 0.1)) == doctest::Approx(20.0));
        const ImageGrid b = testing::random_image(20, 20, 2);
        CHECK(std::abs(psnr(a, b) - oracle::psnr(a, b)) < 1e-9);
        CHECK(psnr(a, b) == psnr(b, a));
        CHECK_THROWS_AS(psnr(a, ImageGrid(20, 21)), ArgumentError);
    }

    TEST_CASE("ssim closed forms") {
        const ImageGrid a = testing::random_image(24, 24, 3);
        CHECK(ssim(a, a) == 1.0);
        const double c1 = 1e-4;
        CHECK(ssim(ImageGrid(16, 16, 0.0), ImageGrid(16, 16, 1.0)) == doctest::Approx(c1 / (1 + c1)).epsilon(1e-9));
        CHECK_THROWS_AS(ssim(ImageGrid(8, 8), ImageGrid(8, 8)), ArgumentError);
    }

    TEST_CASE("ssim matches a sliding-window oracle") {
        for (std::uint64_t s = 0; s < 3; ++s) {
            const ImageGrid a = testing::random_image(23, 31, 10 + s);
            ImageGrid b = a;
            Rng rng(s);
            std::normal_distribution<double> nd(0, 0.1);
            for (double& v : b.values()) v += nd(rng);
            CHECK(std::abs(ssim(a, b) - oracle::ssim(a, b)) < 1e-6);
            CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
        }
    }

    TEST_CASE("ssim falls as noise rises") {
        const ImageGrid a = testing::random_image(32, 32, 4);
        double prev = 1.0;
        for (double sd : {0.01, 0.03, 0.1, 0.3}) {
            ImageGrid b = a;
            Rng rng(5);
            std::normal_distribution<double> nd(0, sd);
            for (double& v : b.values()) v += nd(rng);
            const double s = ssim(a, b);
            CHECK(s < prev);
            prev = s;
        }
    }

    TEST_CASE("evaluate") {
        std::vector<ImageGrid> tr, src, tgt;
        for (int i = 0; i < 10; ++i) {
            tr.push_back(testing::random_image(16, 16, 100 + i));
            src.push_back(testing::random_image(16, 16, 200 + i));
            tgt.push_back(testing::random_image(16, 16, 300 + i));
        }
        const EvalReport r = evaluate(tr, src, tgt);
        CHECK(r.rows.size() == 10);
        double ps = 0, ss = 0, ft = 0;
        for (int i = 0; i < 10; ++i) {
            ps += oracle::psnr(tr[i], src[i]) / 10;
            ss += oracle::ssim(tr[i], tgt[i]) / 10;
            ft += oracle::frequency_mse(tr[i], tgt[i]) / 10;
        }
        CHECK(r.mean.psnr_source == doctest::Approx(ps).epsilon(1e-9));
        CHECK(*r.mean.ssim_target == doctest::Approx(ss).epsilon(1e-6));
        CHECK(*r.mean.freq_mse_target == doctest::Approx(ft).epsilon(1e-9));
        CHECK_FALSE(r.has_feature);

        const EvalReport same = evaluate(tgt, src, tgt);
        CHECK(*same.mean.psnr_target == kPsnrCap);
        CHECK(*same.mean.ssim_target == 1.0);

        const EvalReport one = evaluate(std::span(tr).first(1), std::span(src).first(1));
        CHECK(one.mean.psnr_source == one.rows[0].psnr_source);
        CHECK(one.mean.ssim_source == one.rows[0].ssim_source);
        CHECK_FALSE(one.mean.psnr_target.has_value());

        const EvalReport feat = evaluate(tr, src, tgt, [](const ImageGrid& a, const ImageGrid& b) { return a.mean() - b.mean(); });
        CHECK(feat.has_feature);
        CHECK(feat.to_csv().find("feature_distance") != std::string::npos);
        CHECK(feat.to_json()["rows"].size() == 10);
        CHECK_THROWS_AS(evaluate(tr, std::span(src).first(3)), ArgumentError);
        CHECK_THROWS_AS(evaluate(std::vector<ImageGrid>{}, std::vector<ImageGrid>{}), ArgumentError);
    }
}
