// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "fgdm/image.hpp"
#include "fgdm/schedule.hpp"

namespace fgdm {

/// Highest radial frequency on a 2D grid, in cycles/pixel.
inline constexpr double kMaxRadialFrequency = 0.70710678118654752440;

/// Orthonormal unshifted 2D DFT (FFTW backed).
std::vector<std::complex<double>> fft2(const ImageGrid& img);
/// Inverse of fft2; returns the real part.
ImageGrid ifft2_real(std::span<const std::complex<double>> coeffs, int height, int width);

/// Signed frequency (cycles/pixel) of unshifted DFT index k on an n-point axis.
double dft_frequency(int k, int n);

/// |F| with DC moved to (height/2, width/2).
struct Spectrum {
    int height = 0;
    int width = 0;
    std::vector<double> amplitude;

    double at(int row, int col) const { return amplitude[static_cast<std::size_t>(row) * width + col]; }
    /// Radial frequency of a centered coordinate, in [0, sqrt(2)/2].
    double freq_of(int row, int col) const;
};

Spectrum amplitude_spectrum(const ImageGrid& img);

/// Per-bin statistic over radial frequency. Bin i is centered at
/// i * fmax / (nbins - 1); a coefficient belongs to the nearest center.
struct SpectralProfile {
    std::vector<double> bin_edges;  // nbins + 1, from 0 to fmax
    std::vector<double> values;     // nbins
    std::vector<long> counts;       // coefficients per bin (0 for empty bins)

    int nbins() const { return static_cast<int>(values.size()); }
    double center(int bin) const;
    std::vector<double> centers() const;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Bin index for a radial frequency under the nearest-center rule.
int radial_bin(double freq, int nbins);

/// Per-bin mean of (|F(a)| - |F(b)|)^2.
SpectralProfile radial_frequency_mse(const ImageGrid& a, const ImageGrid& b, int nbins = 64);

/// Per-bin mean of |F(img)|^2 (single-image power spectrum).
SpectralProfile radial_psd(const ImageGrid& img, int nbins = 64);

/// Per-bin mean PSD averaged over several same-shape images.
SpectralProfile radial_psd(std::span<const ImageGrid> imgs, int nbins = 64);

/// Bin center of the maximum of radial_frequency_mse, lowest bin on ties.
/// std::nullopt when the profile is identically zero.
std::optional<double> peak_difference_frequency(const ImageGrid& a, const ImageGrid& b, int nbins = 64);

/// Mean over all coefficients of (|F(a)| - |F(b)|)^2.
double frequency_mse(const ImageGrid& a, const ImageGrid& b);

struct PowerLawFit {
    double k = 0.0;
    double a = 0.0;
    /// Set when the fitted exponent does not satisfy a > 1.
    bool assumption_violated = false;
};

/// Least squares of log PSD = log k - a log f over non-DC radial bins.
PowerLawFit fit_psd_powerlaw(std::span<const ImageGrid> imgs, int nbins = 64);

struct SnrModelParams {
    double k = 1.0;
    double a = 2.0;
    double sigma2 = 1.0;
    double phi = 1.0;
    double psi = 0.1;
};

/// sqrt(alpha_t) k / (sqrt(1 - alpha_t) f^a sigma2). +inf at alpha_t = 1.
double snr_at(const SnrModelParams& p, double alpha_t, double freq);

/// argmin_t |snr_at(alpha_t, psi) - phi|, ties to the smaller t.
int select_tilde_T(const SnrModelParams& p, const NoiseSchedule& sched);

void write_profile_csv(const SpectralProfile& prof, const std::filesystem::path& path);

}  // namespace fgdm
