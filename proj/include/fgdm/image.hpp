// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fgdm {

/// The one RNG engine used everywhere. Passed explicitly, never global.
using Rng = std::mt19937_64;

/// Derives an independent stream seed from a master seed and an index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Row-major H x W grayscale image. Domain images live in [0,1]; noisy
/// intermediate states are unbounded but always finite.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int height, int width, double fill = 0.0);
    ImageGrid(int height, int width, std::vector<double> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    bool same_shape(const ImageGrid& o) const { return height_ == o.height_ && width_ == o.width_; }

    double operator()(int y, int x) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    double& operator()(int y, int x) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool all_finite() const;
    double min() const;
    double max() const;
    double mean() const;

    bool operator==(const ImageGrid& o) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// White Gaussian noise z with variance sigma2.
struct NoiseField {
    ImageGrid values;
    double sigma2 = 1.0;
};

NoiseField white_noise(int height, int width, double sigma2, Rng& rng);

/// Clamps into [0,1]. Throws ArgumentError on NaN.
ImageGrid clamp_unit(const ImageGrid& img);

/// Throws ArgumentError naming `what` unless shapes agree.
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

}  // namespace fgdm
