// SPDX-License-Identifier: Apache-2.0
#include "fgdm/filters.hpp"

#include <algorithm>
#include <cmath>

#include "fgdm/errors.hpp"
#include "fgdm/simd/kernels.hpp"

namespace fgdm {

GradientField sobel_gradient(const ImageGrid& img) {
    const int h = img.height(), w = img.width();
    if (h < 3 || w < 3) throw ArgumentError("sobel_gradient: image must be at least 3x3");
    if (!img.all_finite()) throw ArgumentError("sobel_gradient: non-finite pixel");

    // Replicate-padded copy on the 0-255 scale, (h + 2) x (w + 2).
    const int pw = w + 2;
    std::vector<double> pad(static_cast<std::size_t>(h + 2) * pw);
    for (int y = -1; y <= h; ++y) {
        const int sy = std::clamp(y, 0, h - 1);
        double* row = pad.data() + static_cast<std::size_t>(y + 1) * pw;
        for (int x = -1; x <= w; ++x) row[x + 1] = kIntensityScale * img(sy, std::clamp(x, 0, w - 1));
    }

    GradientField g{h, w, {}, {}, {}};
    const std::size_t n = static_cast<std::size_t>(h) * w;
    g.gx.resize(n);
    g.gy.resize(n);
    g.magnitude.resize(n);
    for (int y = 0; y < h; ++y) {
        const double* up = pad.data() + static_cast<std::size_t>(y) * pw;
        simd::sobel_row(up, up + pw, up + 2 * pw, w, g.gx.data() + static_cast<std::size_t>(y) * w,
                        g.gy.data() + static_cast<std::size_t>(y) * w);
    }
    for (std::size_t i = 0; i < n; ++i) g.magnitude[i] = std::sqrt(g.gx[i] * g.gx[i] + g.gy[i] * g.gy[i]);
    return g;
}

ImageGrid high_pass(const ImageGrid& img, double eta) {
    if (!(eta >= 0.0)) throw ArgumentError("high_pass: eta must be >= 0");
    const GradientField g = sobel_gradient(img);
    ImageGrid out(img.height(), img.width());
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double m = g.magnitude[i];
        o[i] = m >= eta ? m * kHighPassScale : 0.0;
    }
    return out;
}

ImageGrid low_pass(const ImageGrid& img, int tilde_T, const NoiseSchedule& sched, Rng& rng) {
    return forward_sample(img, tilde_T, sched, rng);
}

}  // namespace fgdm
