// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <vector>

#include "fgdm/image.hpp"

namespace fgdm {

enum class ScheduleKind { Cosine };

/// Cumulative noise schedule alpha_1..alpha_T (decreasing) and noise variance.
class NoiseSchedule {
public:
    NoiseSchedule() = default;
    /// `alpha` holds alpha_1..alpha_T. Values must be finite, in [0,1] and
    /// strictly decreasing.
    NoiseSchedule(std::vector<double> alpha, double sigma2);

    int T() const { return static_cast<int>(alpha_.size()); }
    /// 1-based. alpha(0) is defined as 1 (the clean image).
    double alpha(int t) const;
    const std::vector<double>& alphas() const { return alpha_; }
    double sigma2() const { return sigma2_; }

    void require_step(int t, const char* what) const;

    nlohmann::json to_json() const;
    static NoiseSchedule from_json(const nlohmann::json& j);

private:
    std::vector<double> alpha_;
    double sigma2_ = 1.0;
};

inline constexpr double kCosineOffset = 0.008;

/// alpha_t = cos^2((t/T + s)/(1 + s) * pi/2) / cos^2(s/(1 + s) * pi/2),
/// s = 0.008, clipped to [1e-5, 1], sigma2 = 1.
NoiseSchedule make_schedule(int T, ScheduleKind kind = ScheduleKind::Cosine);

struct MarginalStats {
    ImageGrid mean;
    double var = 0.0;
};

/// q(s_t | s_0): mean sqrt(alpha_t) s0, variance (1 - alpha_t) sigma2.
MarginalStats forward_marginal_stats(const ImageGrid& s0, int t, const NoiseSchedule& sched);

/// sqrt(alpha_t) s0 + sqrt(1 - alpha_t) z, z ~ N(0, sigma2).
ImageGrid forward_sample(const ImageGrid& s0, int t, const NoiseSchedule& sched, Rng& rng);

/// Same as forward_sample with caller-provided noise.
ImageGrid forward_sample(const ImageGrid& s0, int t, const NoiseSchedule& sched, const NoiseField& z);

/// Coefficients of q(s_{t-1} | s_t, s_0):
///   mean = coef_s0 * s0 + coef_st * s_t, variance = var * sigma2.
struct PosteriorCoefs {
    double coef_s0 = 0.0;
    double coef_st = 0.0;
    double var = 0.0;
};

PosteriorCoefs posterior_coefficients(double alpha_prev, double alpha_t);
PosteriorCoefs posterior_coefficients(const NoiseSchedule& sched, int t);

/// One reverse step. At t = 1 returns s0_hat unchanged and draws nothing.
ImageGrid posterior_sample(const ImageGrid& s_t, const ImageGrid& s0_hat, int t, const NoiseSchedule& sched,
                           Rng& rng);

}  // namespace fgdm
