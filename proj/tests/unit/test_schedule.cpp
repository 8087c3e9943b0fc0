// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fgdm/errors.hpp"
#include "fgdm/schedule.hpp"
#include "helpers.hpp"

using namespace fgdm;

TEST_SUITE("schedule") {
    TEST_CASE("cosine schedule shape and values") {
        const NoiseSchedule one = make_schedule(1);
        REQUIRE(one.T() == 1);
        CHECK(one.alpha(1) > 0.0);
        CHECK(one.alpha(1) < 1.0);

        const NoiseSchedule s = make_schedule(8);
        for (int t = 2; t <= 8; ++t) CHECK(s.alpha(t) < s.alpha(t - 1));
        CHECK(s.alpha(0) == 1.0);
        CHECK(s.sigma2() == 1.0);

        // Re-evaluate the closed form by hand, long-double arithmetic.
        const long double pi = std::numbers::pi_v<long double>;
        const long double off = 0.008L;
        for (int t = 1; t <= 8; ++t) {
            const long double num = std::cos(((t / 8.0L) + off) / (1 + off) * pi / 2);
            const long double den = std::cos(off / (1 + off) * pi / 2);
            long double want = (num * num) / (den * den);
            if (want < 1e-5L) want = 1e-5L;
            CHECK(s.alpha(t) == doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
        }
        CHECK(s.alpha(8) == doctest::Approx(1e-5));
        CHECK_THROWS_AS(make_schedule(0), ArgumentError);
        CHECK_THROWS_AS(s.alpha(9), ArgumentError);
    }

    TEST_CASE("schedule validation and json") {
        CHECK_THROWS_AS(NoiseSchedule({0.5, 0.5}, 1.0), ArgumentError);
        CHECK_THROWS_AS(NoiseSchedule({1.2}, 1.0), ArgumentError);
        CHECK_THROWS_AS(NoiseSchedule({0.5}, 0.0), ArgumentError);
        const NoiseSchedule s = make_schedule(8);
        const NoiseSchedule r = NoiseSchedule::from_json(s.to_json());
        CHECK(r.alphas() == s.alphas());
        CHECK(r.sigma2() == s.sigma2());
        CHECK_THROWS_AS(NoiseSchedule::from_json(nlohmann::json{{"T", 3}}), FormatError);
    }

    TEST_CASE("marginal stats by substitution") {
        const NoiseSchedule q({0.25}, 1.0);
        const MarginalStats m = forward_marginal_stats(ImageGrid(4, 4, 1.0), 1, q);
        CHECK(m.mean == ImageGrid(4, 4, 0.5));
        CHECK(m.var == doctest::Approx(0.75));

        const NoiseSchedule id({1.0}, 1.0);
        const ImageGrid x = testing::random_image(4, 4, 1);
        const MarginalStats mi = forward_marginal_stats(x, 1, id);
        CHECK(mi.mean == x);
        CHECK(mi.var == 0.0);
        CHECK_THROWS_AS(forward_marginal_stats(x, 2, id), ArgumentError);
    }

    TEST_CASE("forward sample Monte-Carlo matches marginals") {
        const NoiseSchedule s = make_schedule(8);
        const int t = 4;
        const double a = s.alpha(t);
        ImageGrid s0(2, 2);
        s0(0, 0) = 0.0;
        s0(0, 1) = 0.3;
        s0(1, 0) = 0.7;
        s0(1, 1) = 1.0;
        Rng rng(5);
        const int n = 100000;
        std::vector<double> sum(4, 0.0), sq(4, 0.0);
        for (int k = 0; k < n; ++k) {
            const ImageGrid x = forward_sample(s0, t, s, rng);
            for (std::size_t i = 0; i < 4; ++i) {
                sum[i] += x.values()[i];
                sq[i] += x.values()[i] * x.values()[i];
            }
        }
        const double var = 1.0 - a;
        for (std::size_t i = 0; i < 4; ++i) {
            const double mean = sum[i] / n;
            const double v = sq[i] / n - mean * mean;
            CHECK(std::abs(mean - std::sqrt(a) * s0.values()[i]) < 3.0 * std::sqrt(var / n));
            CHECK(std::abs(v - var) < 3.0 * var * std::sqrt(2.0 / (n - 1)));
        }
    }

    TEST_CASE("forward sample limits and determinism") {
        const ImageGrid x = testing::random_image(8, 8, 2);
        Rng r1(9);
        CHECK(forward_sample(x, 1, NoiseSchedule({1.0}, 1.0), r1) == x);

        Rng r2(9);
        const ImageGrid noise = forward_sample(ImageGrid(256, 256, 0.7), 1, NoiseSchedule({0.0}, 1.0), r2);
        CHECK(std::abs(noise.mean()) < 3.0 / 256.0);

        const NoiseSchedule s = make_schedule(8);
        Rng a(3), b(3);
        CHECK(forward_sample(x, 5, s, a) == forward_sample(x, 5, s, b));
    }

    TEST_CASE("posterior coefficients agree with Gaussian conditioning") {
        // Condition s_{t-1} on s_t with s_t = sqrt(r) s_{t-1} + sqrt(1 - r) e.
        const NoiseSchedule s = make_schedule(8);
        for (int t = 2; t <= 8; ++t) {
            const double ap = s.alpha(t - 1), at = s.alpha(t), r = at / ap;
            const double cov = std::sqrt(r) * (1 - ap);
            const double vt = 1 - at;
            const double k = cov / vt;
            const PosteriorCoefs c = posterior_coefficients(s, t);
            CHECK(c.coef_st == doctest::Approx(k).epsilon(1e-10));
            CHECK(c.coef_s0 == doctest::Approx(std::sqrt(ap) - k * std::sqrt(at)).epsilon(1e-10));
            CHECK(c.var == doctest::Approx((1 - ap) - cov * k).epsilon(1e-10));
        }
        const PosteriorCoefs flat = posterior_coefficients(0.4, 0.4);
        CHECK(flat.coef_st == doctest::Approx(1.0));
        CHECK(flat.coef_s0 == doctest::Approx(0.0));
        CHECK(flat.var == doctest::Approx(0.0));
        CHECK_THROWS_AS(posterior_coefficients(1.0, 1.0), DomainError);
    }

    TEST_CASE("posterior sample terminal step draws nothing") {
        const NoiseSchedule s = make_schedule(8);
        const ImageGrid st = testing::random_image(6, 6, 4);
        const ImageGrid s0 = testing::random_image(6, 6, 5);
        Rng rng(1), fresh(1);
        CHECK(posterior_sample(st, s0, 1, s, rng) == s0);
        CHECK(rng() == fresh());
        CHECK_THROWS_AS(posterior_sample(st, s0, 0, s, rng), ArgumentError);
        CHECK_THROWS_AS(posterior_sample(st, ImageGrid(5, 6), 3, s, rng), ArgumentError);
    }

    TEST_CASE("oracle denoiser chain recovers the clean image") {
        const NoiseSchedule s = make_schedule(8);
        const ImageGrid s0 = testing::random_image(16, 16, 6);
        Rng rng(2);
        ImageGrid x = forward_sample(s0, 8, s, rng);
        for (int t = 8; t >= 1; --t) x = posterior_sample(x, s0, t, s, rng);
        CHECK(x == s0);
    }

    TEST_CASE("posterior step Monte-Carlo mean") {
        const NoiseSchedule s = make_schedule(8);
        const ImageGrid st(1, 1, 0.4), s0(1, 1, 0.9);
        const PosteriorCoefs c = posterior_coefficients(s, 5);
        Rng rng(8);
        const int n = 50000;
        double sum = 0.0;
        for (int k = 0; k < n; ++k) sum += posterior_sample(st, s0, 5, s, rng)(0, 0);
        CHECK(std::abs(sum / n - (c.coef_s0 * 0.9 + c.coef_st * 0.4)) < 3.0 * std::sqrt(c.var / n));
    }
}
