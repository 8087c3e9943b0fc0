// SPDX-License-Identifier: Apache-2.0
#include "fgdm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fgdm/errors.hpp"

namespace fgdm {

NoiseSchedule::NoiseSchedule(std::vector<double> alpha, double sigma2)
    : alpha_(std::move(alpha)), sigma2_(sigma2) {
    if (alpha_.empty()) throw ArgumentError("schedule needs at least one step");
    if (!(sigma2_ > 0) || !std::isfinite(sigma2_)) throw ArgumentError("sigma2 must be positive");
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
        const double a = alpha_[i];
        if (!std::isfinite(a) || a < 0.0 || a > 1.0)
            throw ArgumentError("alpha_" + std::to_string(i + 1) + " outside [0,1]");
        if (i > 0 && !(a < alpha_[i - 1])) throw ArgumentError("alpha must be strictly decreasing");
    }
}

double NoiseSchedule::alpha(int t) const {
    if (t == 0) return 1.0;
    require_step(t, "alpha");
    return alpha_[static_cast<std::size_t>(t) - 1];
}

void NoiseSchedule::require_step(int t, const char* what) const {
    if (t < 1 || t > T())
        throw ArgumentError(std::string(what) + ": step " + std::to_string(t) + " outside [1," +
                            std::to_string(T()) + "]");
}

nlohmann::json NoiseSchedule::to_json() const {
    return {{"T", T()}, {"alpha", alpha_}, {"sigma2", sigma2_}};
}

NoiseSchedule NoiseSchedule::from_json(const nlohmann::json& j) {
    try {
        NoiseSchedule s(j.at("alpha").get<std::vector<double>>(), j.value("sigma2", 1.0));
        if (j.contains("T") && j.at("T").get<int>() != s.T()) throw ArgumentError("schedule T disagrees with alpha length");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad schedule json: ") + e.what());
    }
}

NoiseSchedule make_schedule(int T, ScheduleKind kind) {
    if (T < 1) throw ArgumentError("make_schedule: T must be >= 1");
    if (kind != ScheduleKind::Cosine) throw ArgumentError("make_schedule: unknown kind");
    const double s = kCosineOffset;
    const auto f = [&](double x) {
        const double c = std::cos((x + s) / (1.0 + s) * std::numbers::pi / 2.0);
        return c * c;
    };
    const double f0 = f(0.0);
    std::vector<double> alpha(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t)
        alpha[t - 1] = std::clamp(f(static_cast<double>(t) / T) / f0, 1e-5, 1.0);
    return NoiseSchedule(std::move(alpha), 1.0);
}

MarginalStats forward_marginal_stats(const ImageGrid& s0, int t, const NoiseSchedule& sched) {
    sched.require_step(t, "forward_marginal_stats");
    const double a = sched.alpha(t);
    MarginalStats st{s0, (1.0 - a) * sched.sigma2()};
    const double k = std::sqrt(a);
    for (double& v : st.mean.values()) v *= k;
    return st;
}

ImageGrid forward_sample(const ImageGrid& s0, int t, const NoiseSchedule& sched, const NoiseField& z) {
    sched.require_step(t, "forward_sample");
    require_same_shape(s0, z.values, "forward_sample");
    const double a = sched.alpha(t);
    const double ks = std::sqrt(a);
    const double kz = std::sqrt(1.0 - a);
    ImageGrid out(s0.height(), s0.width());
    auto o = out.values();
    auto x = s0.values();
    auto n = z.values.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = ks * x[i] + kz * n[i];
    return out;
}

ImageGrid forward_sample(const ImageGrid& s0, int t, const NoiseSchedule& sched, Rng& rng) {
    sched.require_step(t, "forward_sample");
    return forward_sample(s0, t, sched, white_noise(s0.height(), s0.width(), sched.sigma2(), rng));
}

PosteriorCoefs posterior_coefficients(double alpha_prev, double alpha_t) {
    if (!(alpha_t < 1.0)) throw DomainError("posterior undefined for alpha_t = 1");
    const double r = alpha_t / alpha_prev;
    const double denom = 1.0 - alpha_t;
    return {std::sqrt(alpha_prev) * (1.0 - r) / denom, std::sqrt(r) * (1.0 - alpha_prev) / denom,
            (1.0 - r) * (1.0 - alpha_prev) / denom};
}

PosteriorCoefs posterior_coefficients(const NoiseSchedule& sched, int t) {
    sched.require_step(t, "posterior_coefficients");
    if (t == 1) return {1.0, 0.0, 0.0};
    return posterior_coefficients(sched.alpha(t - 1), sched.alpha(t));
}

ImageGrid posterior_sample(const ImageGrid& s_t, const ImageGrid& s0_hat, int t, const NoiseSchedule& sched,
                           Rng& rng) {
    sched.require_step(t, "posterior_sample");
    require_same_shape(s_t, s0_hat, "posterior_sample");
    if (t == 1) return s0_hat;
    const PosteriorCoefs c = posterior_coefficients(sched, t);
    const double sd = std::sqrt(c.var * sched.sigma2());
    std::normal_distribution<double> nd(0.0, 1.0);
    ImageGrid out(s_t.height(), s_t.width());
    auto o = out.values();
    auto a = s0_hat.values();
    auto b = s_t.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = c.coef_s0 * a[i] + c.coef_st * b[i] + sd * nd(rng);
    return out;
}

}  // namespace fgdm
