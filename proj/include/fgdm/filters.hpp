// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/schedule.hpp"

namespace fgdm {

/// Sobel magnitudes are measured on the 0-255 intensity scale so that
/// thresholds in the 5..25 range are meaningful; H is rescaled back by this
/// factor, the largest magnitude a [0,1] image can produce.
inline constexpr double kIntensityScale = 255.0;
inline constexpr double kHighPassScale = 1.0 / (255.0 * 4.0 * 1.41421356237309504880);

struct FilterThresholds {
    double eta = 10.0;
    int tilde_T = 4;
};

/// Correlation with Kx = [[-1,0,1],[-2,0,2],[-1,0,1]] and Ky = Kx^T on
/// 255 * img, replicate padding. gx > 0 where intensity rises to the right,
/// gy > 0 where it rises downward.
struct GradientField {
    int height = 0;
    int width = 0;
    std::vector<double> gx;
    std::vector<double> gy;
    std::vector<double> magnitude;
};

GradientField sobel_gradient(const ImageGrid& img);

/// i_mag where i_mag >= eta, else 0, then multiplied by kHighPassScale.
ImageGrid high_pass(const ImageGrid& img, double eta);

/// Forward diffusion to step tilde_T.
ImageGrid low_pass(const ImageGrid& img, int tilde_T, const NoiseSchedule& sched, Rng& rng);

}  // namespace fgdm
