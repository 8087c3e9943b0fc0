// SPDX-License-Identifier: Apache-2.0
#include "fgdm/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fgdm/errors.hpp"

namespace fgdm {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 over the pair
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ImageGrid::ImageGrid(int height, int width, double fill) : height_(height), width_(width) {
    if (height <= 0 || width <= 0)
        throw ArgumentError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                            std::to_string(width));
    values_.assign(static_cast<std::size_t>(height) * width, fill);
}

ImageGrid::ImageGrid(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height <= 0 || width <= 0)
        throw ArgumentError("image dimensions must be positive");
    if (values_.size() != static_cast<std::size_t>(height) * width)
        throw ArgumentError("value count does not match " + std::to_string(height) + "x" +
                            std::to_string(width));
}

bool ImageGrid::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ImageGrid::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ImageGrid::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ImageGrid::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

NoiseField white_noise(int height, int width, double sigma2, Rng& rng) {
    if (!(sigma2 > 0)) throw ArgumentError("noise variance must be positive");
    NoiseField z{ImageGrid(height, width), sigma2};
    std::normal_distribution<double> nd(0.0, std::sqrt(sigma2));
    for (double& v : z.values.values()) v = nd(rng);
    return z;
}

ImageGrid clamp_unit(const ImageGrid& img) {
    ImageGrid out = img;
    for (double& v : out.values()) {
        if (std::isnan(v)) throw ArgumentError("clamp_unit: NaN pixel");
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
    if (!a.same_shape(b))
        throw ArgumentError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) + "x" +
                            std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                            std::to_string(b.width()));
}

}  // namespace fgdm
