// SPDX-License-Identifier: Apache-2.0
#include "fgdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fgdm/errors.hpp"
#include "fgdm/spectral.hpp"

namespace fgdm {

double psnr(const ImageGrid& a, const ImageGrid& b) {
    require_same_shape(a, b, "psnr");
    auto x = a.values();
    auto y = b.values();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    const double mse = s / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

std::vector<double> gaussian_taps(int n, double sigma) {
    std::vector<double> g(n);
    const double c = (n - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        g[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Valid-mode separable correlation: (h - n + 1) x (w - n + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& g) {
    const int n = static_cast<int>(g.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += g[k] * src[static_cast<std::size_t>(y) * w + x + k];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const ImageGrid& a, const ImageGrid& b, const SsimOptions& opt) {
    require_same_shape(a, b, "ssim");
    const int h = a.height(), w = a.width();
    if (h < opt.window || w < opt.window)
        throw ArgumentError("ssim: image side must be >= " + std::to_string(opt.window));
    const double c1 = (opt.k1 * opt.data_range) * (opt.k1 * opt.data_range);
    const double c2 = (opt.k2 * opt.data_range) * (opt.k2 * opt.data_range);
    const auto g = gaussian_taps(opt.window, opt.sigma);

    const std::size_t n = a.size();
    std::vector<double> x(a.values().begin(), a.values().end());
    std::vector<double> y(b.values().begin(), b.values().end());
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto mxx = filter_valid(xx, h, w, g);
    const auto myy = filter_valid(yy, h, w, g);
    const auto mxy = filter_valid(xy, h, w, g);

    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        const double num = (2 * mx[i] * my[i] + c1) * (2 * cxy + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

EvalReport evaluate(std::span<const ImageGrid> translated, std::span<const ImageGrid> sources,
                    std::span<const ImageGrid> targets, const FeatureDistance& feature) {
    if (translated.size() != sources.size())
        throw ArgumentError("evaluate: translated and source lists differ in length");
    if (!targets.empty() && targets.size() != translated.size())
        throw ArgumentError("evaluate: translated and target lists differ in length");
    if (translated.empty()) throw ArgumentError("evaluate: empty input");

    EvalReport rep;
    rep.has_target = !targets.empty();
    rep.has_feature = rep.has_target && static_cast<bool>(feature);
    double sums[7] = {};
    for (std::size_t i = 0; i < translated.size(); ++i) {
        EvalRow r;
        r.psnr_source = psnr(translated[i], sources[i]);
        r.ssim_source = ssim(translated[i], sources[i]);
        r.freq_mse_source = frequency_mse(translated[i], sources[i]);
        sums[0] += r.psnr_source;
        sums[1] += r.ssim_source;
        sums[2] += r.freq_mse_source;
        if (rep.has_target) {
            r.psnr_target = psnr(translated[i], targets[i]);
            r.ssim_target = ssim(translated[i], targets[i]);
            r.freq_mse_target = frequency_mse(translated[i], targets[i]);
            sums[3] += *r.psnr_target;
            sums[4] += *r.ssim_target;
            sums[5] += *r.freq_mse_target;
            if (rep.has_feature) {
                r.feature_distance = feature(translated[i], targets[i]);
                sums[6] += *r.feature_distance;
            }
        }
        rep.rows.push_back(r);
    }
    const double inv = 1.0 / static_cast<double>(translated.size());
    rep.mean.psnr_source = sums[0] * inv;
    rep.mean.ssim_source = sums[1] * inv;
    rep.mean.freq_mse_source = sums[2] * inv;
    if (rep.has_target) {
        rep.mean.psnr_target = sums[3] * inv;
        rep.mean.ssim_target = sums[4] * inv;
        rep.mean.freq_mse_target = sums[5] * inv;
        if (rep.has_feature) rep.mean.feature_distance = sums[6] * inv;
    }
    return rep;
}

namespace {

nlohmann::json row_json(const EvalRow& r) {
    nlohmann::json j = {{"psnr_source", r.psnr_source}, {"ssim_source", r.ssim_source},
                        {"freq_mse_source", r.freq_mse_source}};
    if (r.psnr_target) j["psnr_target"] = *r.psnr_target;
    if (r.ssim_target) j["ssim_target"] = *r.ssim_target;
    if (r.freq_mse_target) j["freq_mse_target"] = *r.freq_mse_target;
    if (r.feature_distance) j["feature_distance"] = *r.feature_distance;
    return j;
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j = {{"mean", row_json(mean)}, {"rows", nlohmann::json::array()}};
    for (const auto& r : rows) j["rows"].push_back(row_json(r));
    return j;
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "index,psnr_source,ssim_source,freq_mse_source";
    if (has_target) os << ",psnr_target,ssim_target,freq_mse_target";
    if (has_feature) os << ",feature_distance";
    os << '\n';
    auto emit = [&](const std::string& label, const EvalRow& r) {
        os << label << ',' << r.psnr_source << ',' << r.ssim_source << ',' << r.freq_mse_source;
        if (has_target) os << ',' << *r.psnr_target << ',' << *r.ssim_target << ',' << *r.freq_mse_target;
        if (has_feature) os << ',' << *r.feature_distance;
        os << '\n';
    };
    for (std::size_t i = 0; i < rows.size(); ++i) emit(std::to_string(i), rows[i]);
    emit("mean", mean);
    return os.str();
}

}  // namespace fgdm
