// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgdm/image.hpp"

namespace fgdm {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE), capped at 100 dB (identical images hit the cap).
double psnr(const ImageGrid& a, const ImageGrid& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

/// Mean of the local SSIM map over every position where the Gaussian window
/// fits entirely inside the image. Population (1/N-weighted) moments.
double ssim(const ImageGrid& a, const ImageGrid& b, const SsimOptions& opt = {});

struct EvalRow {
    double psnr_source = 0.0;
    double ssim_source = 0.0;
    double freq_mse_source = 0.0;
    std::optional<double> psnr_target;
    std::optional<double> ssim_target;
    std::optional<double> freq_mse_target;
    std::optional<double> feature_distance;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    EvalRow mean;
    bool has_target = false;
    bool has_feature = false;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Optional embedder distance between a translated image and its reference.
using FeatureDistance = std::function<double(const ImageGrid& translated, const ImageGrid& reference)>;

/// Compares each translated image with its source and, when given, its target.
EvalReport evaluate(std::span<const ImageGrid> translated, std::span<const ImageGrid> sources,
                    std::span<const ImageGrid> targets = {}, const FeatureDistance& feature = {});

}  // namespace fgdm
