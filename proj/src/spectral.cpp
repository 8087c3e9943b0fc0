// SPDX-License-Identifier: Apache-2.0
#include "fgdm/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "fgdm/errors.hpp"
#include "fgdm/io.hpp"

namespace fgdm {
namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
class PlanCache {
public:
    fftw_plan get(int h, int w, int sign) {
        std::lock_guard lock(mu_);
        auto key = std::tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        auto* buf = fftw_alloc_complex(static_cast<std::size_t>(h) * w);
        fftw_plan p = fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        if (!p) throw Error("fftw plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& plans() {
    static PlanCache cache;
    return cache;
}

void run_plan(int h, int w, int sign, std::vector<std::complex<double>>& data) {
    fftw_plan p = plans().get(h, w, sign);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, ptr, ptr);
    const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    for (auto& c : data) c *= scale;
}

void require_finite(const ImageGrid& img, const char* what) {
    if (img.empty()) throw ArgumentError(std::string(what) + ": empty image");
    if (!img.all_finite()) throw ArgumentError(std::string(what) + ": non-finite pixel");
}

SpectralProfile empty_profile(int nbins) {
    if (nbins < 2) throw ArgumentError("nbins must be >= 2");
    SpectralProfile p;
    p.values.assign(nbins, 0.0);
    p.counts.assign(nbins, 0);
    p.bin_edges.resize(nbins + 1);
    const double step = kMaxRadialFrequency / (nbins - 1);
    p.bin_edges[0] = 0.0;
    for (int i = 1; i < nbins; ++i) p.bin_edges[i] = (i - 0.5) * step;
    p.bin_edges[nbins] = kMaxRadialFrequency;
    return p;
}

// Accumulates `value(row, col)` over the centered grid into radial bins.
template <class F>
SpectralProfile bin_radially(int h, int w, int nbins, F&& value) {
    SpectralProfile p = empty_profile(nbins);
    std::vector<double> sums(nbins, 0.0);
    Spectrum geom{h, w, {}};
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int b = radial_bin(geom.freq_of(r, c), nbins);
            sums[b] += value(r, c);
            ++p.counts[b];
        }
    for (int b = 0; b < nbins; ++b)
        p.values[b] = p.counts[b] ? sums[b] / static_cast<double>(p.counts[b]) : 0.0;
    return p;
}

}  // namespace

std::vector<std::complex<double>> fft2(const ImageGrid& img) {
    std::vector<std::complex<double>> data(img.size());
    auto v = img.values();
    for (std::size_t i = 0; i < v.size(); ++i) data[i] = v[i];
    run_plan(img.height(), img.width(), FFTW_FORWARD, data);
    return data;
}

ImageGrid ifft2_real(std::span<const std::complex<double>> coeffs, int height, int width) {
    if (coeffs.size() != static_cast<std::size_t>(height) * width)
        throw ArgumentError("ifft2_real: coefficient count does not match shape");
    std::vector<std::complex<double>> data(coeffs.begin(), coeffs.end());
    run_plan(height, width, FFTW_BACKWARD, data);
    ImageGrid out(height, width);
    auto o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = data[i].real();
    return out;
}

double dft_frequency(int k, int n) {
    const int signed_k = k <= (n - 1) / 2 ? k : k - n;
    return static_cast<double>(signed_k) / n;
}

double Spectrum::freq_of(int row, int col) const {
    const double fy = static_cast<double>(row - height / 2) / height;
    const double fx = static_cast<double>(col - width / 2) / width;
    return std::sqrt(fy * fy + fx * fx);
}

Spectrum amplitude_spectrum(const ImageGrid& img) {
    require_finite(img, "amplitude_spectrum");
    const int h = img.height(), w = img.width();
    const auto f = fft2(img);
    Spectrum s{h, w, std::vector<double>(f.size())};
    for (int y = 0; y < h; ++y) {
        const int r = (y + h / 2) % h;
        for (int x = 0; x < w; ++x) {
            const int c = (x + w / 2) % w;
            s.amplitude[static_cast<std::size_t>(r) * w + c] = std::abs(f[static_cast<std::size_t>(y) * w + x]);
        }
    }
    return s;
}

double SpectralProfile::center(int bin) const { return bin * kMaxRadialFrequency / (nbins() - 1); }

std::vector<double> SpectralProfile::centers() const {
    std::vector<double> c(values.size());
    for (int i = 0; i < nbins(); ++i) c[i] = center(i);
    return c;
}

nlohmann::json SpectralProfile::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < nbins(); ++i) rows.push_back({center(i), values[i]});
    return {{"bin_edges", bin_edges}, {"counts", counts}, {"profile", rows}};
}

std::string SpectralProfile::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "bin_center,value\n";
    for (int i = 0; i < nbins(); ++i) os << center(i) << ',' << values[i] << '\n';
    return os.str();
}

void write_profile_csv(const SpectralProfile& prof, const std::filesystem::path& path) {
    const std::string text = prof.to_csv();
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int radial_bin(double freq, int nbins) {
    const double step = kMaxRadialFrequency / (nbins - 1);
    const long b = std::lround(freq / step);
    return static_cast<int>(std::clamp<long>(b, 0, nbins - 1));
}

SpectralProfile radial_frequency_mse(const ImageGrid& a, const ImageGrid& b, int nbins) {
    require_same_shape(a, b, "radial_frequency_mse");
    const Spectrum fa = amplitude_spectrum(a);
    const Spectrum fb = amplitude_spectrum(b);
    return bin_radially(a.height(), a.width(), nbins, [&](int r, int c) {
        const double d = fa.at(r, c) - fb.at(r, c);
        return d * d;
    });
}

SpectralProfile radial_psd(const ImageGrid& img, int nbins) {
    const Spectrum f = amplitude_spectrum(img);
    return bin_radially(img.height(), img.width(), nbins, [&](int r, int c) { return f.at(r, c) * f.at(r, c); });
}

SpectralProfile radial_psd(std::span<const ImageGrid> imgs, int nbins) {
    if (imgs.empty()) throw ArgumentError("radial_psd: no images");
    const int h = imgs[0].height(), w = imgs[0].width();
    std::vector<double> power(static_cast<std::size_t>(h) * w, 0.0);
    for (const ImageGrid& img : imgs) {
        require_same_shape(imgs[0], img, "radial_psd");
        const Spectrum f = amplitude_spectrum(img);
        for (std::size_t i = 0; i < power.size(); ++i) power[i] += f.amplitude[i] * f.amplitude[i];
    }
    const double inv = 1.0 / static_cast<double>(imgs.size());
    return bin_radially(h, w, nbins, [&](int r, int c) { return power[static_cast<std::size_t>(r) * w + c] * inv; });
}

std::optional<double> peak_difference_frequency(const ImageGrid& a, const ImageGrid& b, int nbins) {
    const SpectralProfile p = radial_frequency_mse(a, b, nbins);
    int best = 0;
    for (int i = 1; i < p.nbins(); ++i)
        if (p.values[i] > p.values[best]) best = i;
    if (!(p.values[best] > 0.0)) return std::nullopt;
    return p.center(best);
}

double frequency_mse(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "frequency_mse");
    const Spectrum fa = amplitude_spectrum(a);
    const Spectrum fb = amplitude_spectrum(b);
    double s = 0.0;
    for (std::size_t i = 0; i < fa.amplitude.size(); ++i) {
        const double d = fa.amplitude[i] - fb.amplitude[i];
        s += d * d;
    }
    return s / static_cast<double>(fa.amplitude.size());
}

PowerLawFit fit_psd_powerlaw(std::span<const ImageGrid> imgs, int nbins) {
    if (imgs.empty()) throw ArgumentError("fit_psd_powerlaw: no images");
    for (const ImageGrid& img : imgs)
        if (img.max() == img.min()) throw ArgumentError("fit_psd_powerlaw: constant image has no AC energy");

    const SpectralProfile p = radial_psd(imgs, nbins);
    // Regress on the mean member frequency of each bin rather than its center.
    const int h = imgs[0].height(), w = imgs[0].width();
    std::vector<double> fsum(nbins, 0.0);
    Spectrum geom{h, w, {}};
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double f = geom.freq_of(r, c);
            fsum[radial_bin(f, nbins)] += f;
        }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int b = 1; b < nbins; ++b) {
        if (p.counts[b] == 0 || !(p.values[b] > 0.0)) continue;
        const double x = std::log(fsum[b] / p.counts[b]);
        const double y = std::log(p.values[b]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw ArgumentError("fit_psd_powerlaw: fewer than two usable bins");
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    PowerLawFit fit{std::exp(intercept), -slope, false};
    fit.assumption_violated = !(fit.a > 1.0);
    return fit;
}

double snr_at(const SnrModelParams& p, double alpha_t, double freq) {
    if (!(freq > 0.0)) throw DomainError("snr_at: frequency must be positive");
    if (!(alpha_t > 0.0) || alpha_t > 1.0) throw DomainError("snr_at: alpha_t must lie in (0,1]");
    if (alpha_t == 1.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(alpha_t) * p.k / (std::sqrt(1.0 - alpha_t) * std::pow(freq, p.a) * p.sigma2);
}

int select_tilde_T(const SnrModelParams& p, const NoiseSchedule& sched) {
    int best = 1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= sched.T(); ++t) {
        const double gap = std::abs(snr_at(p, sched.alpha(t), p.psi) - p.phi);
        if (gap < best_gap) {
            best_gap = gap;
            best = t;
        }
    }
    return best;
}

}  // namespace fgdm
