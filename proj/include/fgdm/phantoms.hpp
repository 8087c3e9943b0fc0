// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <vector>

#include "fgdm/image.hpp"

namespace fgdm {

struct PhantomSpec {
    int size = 64;
    /// Total ellipse count including the body outline; drawn uniformly.
    int n_shapes_min = 4;
    int n_shapes_max = 8;
    double background_level = 0.15;
    double body_level = 0.45;
    std::vector<double> intensity_levels{0.25, 0.35, 0.55, 0.65, 0.75, 0.85};
    int supersample = 4;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static PhantomSpec from_json(const nlohmann::json& j);
};

struct DegradationSpec {
    double f_lo = 0.03;
    double f_hi = 0.10;
    /// RMS of the band-limited shading field.
    double shading_strength = 0.10;
    double streak_strength = 0.0;
    int streak_count = 0;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static DegradationSpec from_json(const nlohmann::json& j);
};

struct Ellipse {
    double cx, cy;  // pixel coordinates, origin at the top-left corner
    double a, b;    // semi-axes in pixels
    double theta;   // rotation in radians
    double level;
};

/// The geometry behind a phantom. The first ellipse is the body.
struct PhantomLayout {
    std::vector<Ellipse> shapes;
};

PhantomLayout sample_layout(const PhantomSpec& spec, Rng& rng);
/// Later shapes paint over earlier ones; edges are box-filtered over a
/// supersample x supersample grid per pixel.
ImageGrid render_layout(const PhantomLayout& layout, const PhantomSpec& spec);

ImageGrid make_target_phantom(const PhantomSpec& spec, Rng& rng);

/// White noise with its spectrum zeroed outside [f_lo, f_hi], unit RMS.
ImageGrid band_limited_field(int height, int width, double f_lo, double f_hi, Rng& rng);

/// Adds shading_strength * band field plus optional thin streaks, clamps.
ImageGrid degrade_to_source(const ImageGrid& img, const DegradationSpec& spec, Rng& rng);

struct DatasetManifest {
    int count = 0;
    PhantomSpec phantom;
    DegradationSpec degradation;
    std::vector<std::uint64_t> target_seeds;
    std::vector<std::uint64_t> source_seeds;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
};

/// Pair i uses derive_seed(pspec.seed, i) for the target and
/// derive_seed(dspec.seed, i) for its degradation, so any pair can be
/// regenerated alone.
std::pair<ImageGrid, ImageGrid> make_pair(int index, const PhantomSpec& pspec, const DegradationSpec& dspec);

/// Writes target/NNNN.f32, source/NNNN.f32 (with sidecars) and manifest.json.
DatasetManifest make_paired_dataset(int n, const PhantomSpec& pspec, const DegradationSpec& dspec,
                                    const std::filesystem::path& out_dir);

DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);
std::filesystem::path target_path(const std::filesystem::path& dataset_dir, int index);
std::filesystem::path source_path(const std::filesystem::path& dataset_dir, int index);

/// Loads only the target side; training has no other entry point.
std::vector<ImageGrid> load_targets(const std::filesystem::path& dataset_dir);
std::vector<ImageGrid> load_sources(const std::filesystem::path& dataset_dir);

}  // namespace fgdm
