// SPDX-License-Identifier: Apache-2.0
#include "fgdm/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "fgdm/errors.hpp"
#include "fgdm/io.hpp"
#include "fgdm/spectral.hpp"

namespace fgdm {
namespace fs = std::filesystem;
using nlohmann::json;

void PhantomSpec::validate() const {
    if (size < 32) throw ArgumentError("phantom size must be >= 32");
    if (n_shapes_min < 1 || n_shapes_max < n_shapes_min) throw ArgumentError("bad phantom shape count range");
    if (supersample < 1) throw ArgumentError("supersample must be >= 1");
    if (intensity_levels.empty()) throw ArgumentError("phantom needs at least one intensity level");
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(background_level) || !in_unit(body_level) ||
        !std::all_of(intensity_levels.begin(), intensity_levels.end(), in_unit))
        throw ArgumentError("phantom intensity levels must lie in [0,1]");
}

json PhantomSpec::to_json() const {
    return {{"size", size},
            {"n_shapes", {n_shapes_min, n_shapes_max}},
            {"background_level", background_level},
            {"body_level", body_level},
            {"intensity_levels", intensity_levels},
            {"supersample", supersample},
            {"seed", seed}};
}

PhantomSpec PhantomSpec::from_json(const json& j) {
    PhantomSpec s;
    s.size = j.value("size", s.size);
    if (j.contains("n_shapes")) {
        s.n_shapes_min = j.at("n_shapes").at(0).get<int>();
        s.n_shapes_max = j.at("n_shapes").at(1).get<int>();
    }
    s.background_level = j.value("background_level", s.background_level);
    s.body_level = j.value("body_level", s.body_level);
    s.intensity_levels = j.value("intensity_levels", s.intensity_levels);
    s.supersample = j.value("supersample", s.supersample);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

void DegradationSpec::validate() const {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || !(f_hi < kMaxRadialFrequency))
        throw ArgumentError("degradation band must satisfy 0 < f_lo < f_hi < sqrt(2)/2");
    if (shading_strength < 0.0 || streak_strength < 0.0 || streak_count < 0)
        throw ArgumentError("degradation strengths must be non-negative");
}

json DegradationSpec::to_json() const {
    return {{"band", {f_lo, f_hi}},
            {"shading_strength", shading_strength},
            {"streak_strength", streak_strength},
            {"streak_count", streak_count},
            {"seed", seed}};
}

DegradationSpec DegradationSpec::from_json(const json& j) {
    DegradationSpec s;
    if (j.contains("band")) {
        s.f_lo = j.at("band").at(0).get<double>();
        s.f_hi = j.at("band").at(1).get<double>();
    }
    s.shading_strength = j.value("shading_strength", s.shading_strength);
    s.streak_strength = j.value("streak_strength", s.streak_strength);
    s.streak_count = j.value("streak_count", s.streak_count);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

PhantomLayout sample_layout(const PhantomSpec& spec, Rng& rng) {
    spec.validate();
    const double n = spec.size;
    const double k = n / 64.0;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

    PhantomLayout lay;
    const int count = std::uniform_int_distribution<int>(spec.n_shapes_min, spec.n_shapes_max)(rng);
    const double cx = n / 2 + uni(-3, 3) * k;
    const double cy = n / 2 + uni(-3, 3) * k;
    lay.shapes.push_back({cx, cy, uni(0.36, 0.46) * n, uni(0.30, 0.42) * n, uni(0, std::numbers::pi), spec.body_level});
    std::uniform_int_distribution<std::size_t> pick(0, spec.intensity_levels.size() - 1);
    for (int i = 1; i < count; ++i) {
        const double r = uni(0, 0.22 * n);
        const double ang = uni(0, 2 * std::numbers::pi);
        const double a = uni(2.5, 10) * k;
        const double b = uni(2.5, 10) * k;
        const double th = uni(0, std::numbers::pi);
        lay.shapes.push_back({cx + r * std::cos(ang), cy + r * std::sin(ang), a, b, th, spec.intensity_levels[pick(rng)]});
    }
    return lay;
}

ImageGrid render_layout(const PhantomLayout& layout, const PhantomSpec& spec) {
    const int n = spec.size;
    const int ss = spec.supersample;
    ImageGrid img(n, n);
    struct Prepared {
        double cx, cy, c, s, ia2, ib2, level;
        double x0, x1, y0, y1;  // bounding box
    };
    std::vector<Prepared> prep;
    for (const Ellipse& e : layout.shapes) {
        const double r = std::max(e.a, e.b);
        prep.push_back({e.cx, e.cy, std::cos(e.theta), std::sin(e.theta), 1.0 / (e.a * e.a), 1.0 / (e.b * e.b), e.level,
                        e.cx - r, e.cx + r, e.cy - r, e.cy + r});
    }
    const double inv = 1.0 / (ss * ss);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < ss; ++sy)
                for (int sx = 0; sx < ss; ++sx) {
                    const double px = x + (sx + 0.5) / ss;
                    const double py = y + (sy + 0.5) / ss;
                    double v = spec.background_level;
                    for (const Prepared& p : prep) {
                        if (px < p.x0 || px > p.x1 || py < p.y0 || py > p.y1) continue;
                        const double dx = px - p.cx, dy = py - p.cy;
                        const double u = p.c * dx + p.s * dy;
                        const double w = -p.s * dx + p.c * dy;
                        if (u * u * p.ia2 + w * w * p.ib2 <= 1.0) v = p.level;
                    }
                    acc += v;
                }
            img(y, x) = acc * inv;
        }
    return img;
}

ImageGrid make_target_phantom(const PhantomSpec& spec, Rng& rng) {
    return render_layout(sample_layout(spec, rng), spec);
}

ImageGrid band_limited_field(int height, int width, double f_lo, double f_hi, Rng& rng) {
    const NoiseField z = white_noise(height, width, 1.0, rng);
    auto coeffs = fft2(z.values);
    for (int y = 0; y < height; ++y) {
        const double fy = dft_frequency(y, height);
        for (int x = 0; x < width; ++x) {
            const double fx = dft_frequency(x, width);
            const double f = std::sqrt(fx * fx + fy * fy);
            if (f < f_lo || f > f_hi) coeffs[static_cast<std::size_t>(y) * width + x] = 0.0;
        }
    }
    ImageGrid field = ifft2_real(coeffs, height, width);
    double ss = 0.0;
    for (double v : field.values()) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(field.size()));
    if (rms > 0)
        for (double& v : field.values()) v /= rms;
    return field;
}

ImageGrid degrade_to_source(const ImageGrid& img, const DegradationSpec& spec, Rng& rng) {
    spec.validate();
    ImageGrid out = img;
    if (spec.shading_strength > 0.0) {
        const ImageGrid field = band_limited_field(img.height(), img.width(), spec.f_lo, spec.f_hi, rng);
        auto o = out.values();
        auto f = field.values();
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += spec.shading_strength * f[i];
    }
    if (spec.streak_strength > 0.0 && spec.streak_count > 0) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const double h = img.height(), w = img.width();
        for (int k = 0; k < spec.streak_count; ++k) {
            const double th = u01(rng) * std::numbers::pi;
            const double px = w / 2 + (u01(rng) - 0.5) * w / 2;
            const double py = h / 2 + (u01(rng) - 0.5) * h / 2;
            const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
            const double nx = -std::sin(th), ny = std::cos(th);
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x) {
                    const double d = (x + 0.5 - px) * nx + (y + 0.5 - py) * ny;
                    out(y, x) += sign * spec.streak_strength * std::exp(-d * d / (2 * 0.6 * 0.6));
                }
        }
    }
    for (double& v : out.values()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

json DatasetManifest::to_json() const {
    json pairs = json::array();
    for (int i = 0; i < count; ++i) {
        char name[16];
        std::snprintf(name, sizeof name, "%04d", i);
        pairs.push_back({{"index", i},
                         {"target", std::string("target/") + name + ".f32"},
                         {"source", std::string("source/") + name + ".f32"},
                         {"target_seed", target_seeds[i]},
                         {"source_seed", source_seeds[i]}});
    }
    return {{"count", count}, {"phantom", phantom.to_json()}, {"degradation", degradation.to_json()}, {"pairs", pairs}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
    try {
        DatasetManifest m;
        m.count = j.at("count").get<int>();
        m.phantom = PhantomSpec::from_json(j.at("phantom"));
        m.degradation = DegradationSpec::from_json(j.at("degradation"));
        for (const auto& p : j.at("pairs")) {
            m.target_seeds.push_back(p.at("target_seed").get<std::uint64_t>());
            m.source_seeds.push_back(p.at("source_seed").get<std::uint64_t>());
        }
        if (static_cast<int>(m.target_seeds.size()) != m.count) throw FormatError("manifest pair count mismatch");
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad dataset manifest: ") + e.what());
    }
}

std::pair<ImageGrid, ImageGrid> make_pair(int index, const PhantomSpec& pspec, const DegradationSpec& dspec) {
    Rng trng(derive_seed(pspec.seed, static_cast<std::uint64_t>(index)));
    Rng srng(derive_seed(dspec.seed, static_cast<std::uint64_t>(index)));
    ImageGrid target = make_target_phantom(pspec, trng);
    ImageGrid source = degrade_to_source(target, dspec, srng);
    return {std::move(target), std::move(source)};
}

fs::path target_path(const fs::path& dir, int index) {
    char name[16];
    std::snprintf(name, sizeof name, "%04d.f32", index);
    return dir / "target" / name;
}

fs::path source_path(const fs::path& dir, int index) {
    char name[16];
    std::snprintf(name, sizeof name, "%04d.f32", index);
    return dir / "source" / name;
}

DatasetManifest make_paired_dataset(int n, const PhantomSpec& pspec, const DegradationSpec& dspec,
                                    const fs::path& out_dir) {
    if (n < 1) throw ArgumentError("dataset size must be >= 1");
    pspec.validate();
    dspec.validate();
    std::error_code ec;
    fs::create_directories(out_dir / "target", ec);
    fs::create_directories(out_dir / "source", ec);
    if (ec) throw IoError("cannot create dataset directory " + out_dir.string() + ": " + ec.message());

    DatasetManifest m{n, pspec, dspec, {}, {}};
    for (int i = 0; i < n; ++i) {
        auto [target, source] = make_pair(i, pspec, dspec);
        save_raw(target, target_path(out_dir, i));
        save_raw(source, source_path(out_dir, i));
        m.target_seeds.push_back(derive_seed(pspec.seed, static_cast<std::uint64_t>(i)));
        m.source_seeds.push_back(derive_seed(dspec.seed, static_cast<std::uint64_t>(i)));
    }
    const std::string text = m.to_json().dump(2) + "\n";
    write_file(out_dir / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return m;
}

DatasetManifest read_manifest(const fs::path& dir) {
    const auto bytes = read_file(dir / "manifest.json");
    try {
        return DatasetManifest::from_json(json::parse(bytes.begin(), bytes.end()));
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("manifest.json: ") + e.what());
    }
}

std::vector<ImageGrid> load_targets(const fs::path& dir) {
    const DatasetManifest m = read_manifest(dir);
    std::vector<ImageGrid> out;
    out.reserve(m.count);
    for (int i = 0; i < m.count; ++i) out.push_back(load_raw(target_path(dir, i)));
    return out;
}

std::vector<ImageGrid> load_sources(const fs::path& dir) {
    const DatasetManifest m = read_manifest(dir);
    std::vector<ImageGrid> out;
    out.reserve(m.count);
    for (int i = 0; i < m.count; ++i) out.push_back(load_raw(source_path(dir, i)));
    return out;
}

}  // namespace fgdm
