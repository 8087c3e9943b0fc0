// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fgdm/errors.hpp"
#include "fgdm/io.hpp"
#include "fgdm/phantoms.hpp"
#include "fgdm/spectral.hpp"
#include "helpers.hpp"

using namespace fgdm;

namespace {

// Peak of the pair's radial MSE sits in the band, and the mean MSE of the
// bins fully below and above it stays under 20% of the peak.
void check_band_concentration(const ImageGrid& target, const ImageGrid& source, const DegradationSpec& d) {
    const SpectralProfile p = radial_frequency_mse(target, source);
    const double half = p.center(1) / 2;
    int peak = 0;
    for (int b = 1; b < p.nbins(); ++b)
        if (p.values[b] > p.values[peak]) peak = b;
    CHECK(p.center(peak) >= d.f_lo - half);
    CHECK(p.center(peak) <= d.f_hi + half);
    double lo = 0, hi = 0;
    int nlo = 0, nhi = 0;
    for (int b = 0; b < p.nbins(); ++b) {
        if (p.center(b) + half < d.f_lo) lo += p.values[b], ++nlo;
        if (p.center(b) - half > d.f_hi) hi += p.values[b], ++nhi;
    }
    if (nlo) CHECK(lo / nlo < 0.2 * p.values[peak]);
    if (nhi) CHECK(hi / nhi < 0.2 * p.values[peak]);
}

}  // namespace

TEST_SUITE("phantoms") {
    TEST_CASE("single ellipse area") {
        PhantomSpec spec;
        spec.size = 64;
        spec.supersample = 8;
        const double a = 20.5, b = 13.25;
        PhantomLayout lay{{{32.3, 31.7, a, b, 0.6, 0.8}}};
        const ImageGrid img = render_layout(lay, spec);
        double area = 0;
        for (double v : img.values()) area += (v - spec.background_level) / (0.8 - spec.background_level);
        CHECK(area == doctest::Approx(std::numbers::pi * a * b).epsilon(0.02));
    }

    TEST_CASE("phantoms are deterministic and in range") {
        PhantomSpec spec;
        Rng r1(5), r2(5), r3(6);
        const ImageGrid a = make_target_phantom(spec, r1);
        CHECK(a == make_target_phantom(spec, r2));
        CHECK_FALSE(a == make_target_phantom(spec, r3));
        CHECK(a.min() >= 0.0);
        CHECK(a.max() <= 1.0);
        CHECK(a.height() == 64);
    }

    TEST_CASE("histogram holds the configured levels") {
        PhantomSpec spec;
        spec.supersample = 1;
        Rng rng(7);
        const PhantomLayout lay = sample_layout(spec, rng);
        const ImageGrid img = render_layout(lay, spec);
        std::set<double> seen(img.values().begin(), img.values().end());
        CHECK(seen.count(spec.background_level) == 1);
        CHECK(seen.count(spec.body_level) == 1);
        std::set<double> allowed(spec.intensity_levels.begin(), spec.intensity_levels.end());
        allowed.insert(spec.background_level);
        allowed.insert(spec.body_level);
        for (double v : seen) CHECK(allowed.count(v) == 1);
        CHECK(static_cast<int>(lay.shapes.size()) >= spec.n_shapes_min);
        CHECK(static_cast<int>(lay.shapes.size()) <= spec.n_shapes_max);
    }

    TEST_CASE("spec validation") {
        PhantomSpec p;
        p.size = 16;
        CHECK_THROWS_AS(p.validate(), ArgumentError);
        DegradationSpec d;
        d.f_hi = 0.01;
        CHECK_THROWS_AS(d.validate(), ArgumentError);
        const DegradationSpec e = DegradationSpec::from_json(DegradationSpec{}.to_json());
        CHECK(e.f_lo == DegradationSpec{}.f_lo);
        CHECK(e.shading_strength == DegradationSpec{}.shading_strength);
    }

    TEST_CASE("band limited field") {
        Rng rng(8);
        const ImageGrid f = band_limited_field(64, 64, 0.1, 0.2, rng);
        double ss = 0;
        for (double v : f.values()) ss += v * v;
        CHECK(std::sqrt(ss / f.size()) == doctest::Approx(1.0));
        const auto c = fft2(f);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                const double r = std::hypot(dft_frequency(y, 64), dft_frequency(x, 64));
                if (r < 0.1 || r > 0.2) CHECK(std::abs(c[static_cast<std::size_t>(y) * 64 + x]) < 1e-10);
            }
    }

    TEST_CASE("zero-strength degradation is the identity") {
        PhantomSpec spec;
        Rng rng(9);
        const ImageGrid img = make_target_phantom(spec, rng);
        DegradationSpec d;
        d.shading_strength = 0;
        d.streak_strength = 0;
        CHECK(degrade_to_source(img, d, rng) == img);
    }

    TEST_CASE("default degradation is concentrated in its band") {
        const PhantomSpec p;
        const DegradationSpec d;
        for (int i = 0; i < 10; ++i) {
            auto [target, source] = make_pair(i, p, d);
            check_band_concentration(target, source, d);
        }
    }

    TEST_CASE("paired dataset round trip") {
        testing::TempDir dir("data");
        PhantomSpec p;
        p.seed = 3;
        DegradationSpec d;
        d.seed = 4;
        const DatasetManifest m = make_paired_dataset(10, p, d, dir.path());
        CHECK(m.count == 10);
        int files = 0;
        for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path()))
            if (e.path().extension() == ".f32") ++files;
        CHECK(files == 20);
        const DatasetManifest r = read_manifest(dir.path());
        CHECK(r.to_json() == m.to_json());
        CHECK(r.to_json()["pairs"].size() == 10);

        const auto targets = load_targets(dir.path());
        const auto sources = load_sources(dir.path());
        REQUIRE(targets.size() == 10);
        for (int i = 0; i < 10; ++i) {
            auto [t, s] = make_pair(i, p, d);
            // Stored as float32.
            for (std::size_t k = 0; k < t.size(); ++k) {
                CHECK(targets[i].values()[k] == static_cast<double>(static_cast<float>(t.values()[k])));
                CHECK(sources[i].values()[k] == static_cast<double>(static_cast<float>(s.values()[k])));
            }
            check_band_concentration(targets[i], sources[i], d);
        }

        testing::TempDir again("data");
        make_paired_dataset(10, p, d, again.path());
        CHECK(read_file(again / "source/0007.f32") == read_file(dir / "source/0007.f32"));
        CHECK_THROWS_AS(read_manifest(dir / "nowhere"), IoError);
    }
}
