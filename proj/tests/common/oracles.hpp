// SPDX-License-Identifier: Apache-2.0
#pragma once

// Slow, direct reference implementations shared by the unit tests and the
// acceptance runner. Nothing here calls into the library's own kernels.

#include <algorithm>
#include <cmath>
#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/spectral.hpp"

namespace oracle {

struct SobelResult {
    std::vector<double> gx, gy, mag;
};

/// 3x3 Sobel correlation on 255 * img with replicate padding.
inline SobelResult sobel(const fgdm::ImageGrid& img) {
    static const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const int h = img.height(), w = img.width();
    SobelResult b;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sx = 0, sy = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double v = 255.0 * img(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1));
                    sx += kx[dy + 1][dx + 1] * v;
                    sy += kx[dx + 1][dy + 1] * v;
                }
            b.gx.push_back(sx);
            b.gy.push_back(sy);
            b.mag.push_back(std::sqrt(sx * sx + sy * sy));
        }
    return b;
}

inline double psnr(const fgdm::ImageGrid& a, const fgdm::ImageGrid& b) {
    long double s = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) s += (a(y, x) - b(y, x)) * (a(y, x) - b(y, x));
    if (s == 0) return 100.0;
    return std::min(100.0, static_cast<double>(10 * std::log10(1 / (s / a.size()))));
}

/// SSIM with an explicit 11x11 Gaussian window (sigma 1.5) at every
/// position where it fits, population moments, data range 1.
inline double ssim(const fgdm::ImageGrid& a, const fgdm::ImageGrid& b) {
    const int n = 11;
    const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
    std::vector<double> w(n * n);
    double tot = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            tot += w[i * n + j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * sigma * sigma));
    for (double& v : w) v /= tot;
    double sum = 0;
    int count = 0;
    for (int y = 0; y + n <= a.height(); ++y)
        for (int x = 0; x + n <= a.width(); ++x) {
            double ma = 0, mb = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    ma += w[i * n + j] * a(y + i, x + j);
                    mb += w[i * n + j] * b(y + i, x + j);
                }
            double va = 0, vb = 0, cab = 0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double da = a(y + i, x + j) - ma, db = b(y + i, x + j) - mb;
                    va += w[i * n + j] * da * da;
                    vb += w[i * n + j] * db * db;
                    cab += w[i * n + j] * da * db;
                }
            sum += (2 * ma * mb + c1) * (2 * cab + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++count;
        }
    return sum / count;
}

/// Mean squared amplitude difference via a direct DFT sum.
inline double frequency_mse(const fgdm::ImageGrid& a, const fgdm::ImageGrid& b) {
    const int h = a.height(), w = a.width();
    const double pi = 3.14159265358979323846;
    std::vector<double> cy(h * h), sy(h * h), cx(w * w), sx(w * w);
    for (int v = 0; v < h; ++v)
        for (int y = 0; y < h; ++y) cy[v * h + y] = std::cos(2 * pi * v * y / h), sy[v * h + y] = std::sin(2 * pi * v * y / h);
    for (int u = 0; u < w; ++u)
        for (int x = 0; x < w; ++x) cx[u * w + x] = std::cos(2 * pi * u * x / w), sx[u * w + x] = std::sin(2 * pi * u * x / w);
    const double norm = 1.0 / std::sqrt(static_cast<double>(h) * w);
    double total = 0;
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            double ra = 0, ia = 0, rb = 0, ib = 0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    // cos(p + q) and -sin(p + q) from the separable tables.
                    const double c = cy[v * h + y] * cx[u * w + x] - sy[v * h + y] * sx[u * w + x];
                    const double s = sy[v * h + y] * cx[u * w + x] + cy[v * h + y] * sx[u * w + x];
                    ra += a(y, x) * c, ia -= a(y, x) * s;
                    rb += b(y, x) * c, ib -= b(y, x) * s;
                }
            const double d = std::hypot(ra, ia) * norm - std::hypot(rb, ib) * norm;
            total += d * d;
        }
    return total / (static_cast<double>(h) * w);
}

/// Real field whose expected PSD at radial frequency f is gain(f). Filtering
/// the spectrum of real white noise with a symmetric real gain keeps it real.
template <class Gain>
fgdm::ImageGrid shaped_noise(int n, fgdm::Rng& rng, Gain gain) {
    const fgdm::ImageGrid z = fgdm::white_noise(n, n, 1.0, rng).values;
    auto f = fgdm::fft2(z);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double r = std::hypot(fgdm::dft_frequency(y, n), fgdm::dft_frequency(x, n));
            f[static_cast<std::size_t>(y) * n + x] *= std::sqrt(gain(r));
        }
    return fgdm::ifft2_real(f, n, n);
}

/// Relative mismatch used by the finite-difference checks.
inline bool fd_close(double numeric, double analytic, double rel = 1e-3) {
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    return std::abs(numeric - analytic) <= rel * scale;
}

}  // namespace oracle
