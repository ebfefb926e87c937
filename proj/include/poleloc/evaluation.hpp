#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "poleloc/core.hpp"

namespace poleloc {

/// Accuracy report over a frame-aligned trajectory pair. Recall tiers
/// use strict inequality; the pose tiers require both the translation
/// and rotation bound of the pair.
struct MetricsReport {
    double rmse_trans_m = 0.0;
    double rmse_rot_deg = 0.0;
    std::array<double, 3> recall_trans{};  // < 0.5 m, < 1 m, < 2 m
    std::array<double, 3> recall_pose{};   // (< 0.25 m, < 2 deg), (< 0.5 m, < 5 deg), (< 5 m, < 10 deg)
    std::size_t frame_count = 0;
};

inline constexpr std::array<double, 3> kRecallTransTiers{0.5, 1.0, 2.0};
inline constexpr std::array<double, 3> kRecallPoseTransTiers{0.25, 0.5, 5.0};
inline constexpr std::array<double, 3> kRecallPoseRotTiers{2.0, 5.0, 10.0};

struct FrameError {
    double trans_m = 0.0;
    double rot_deg = 0.0;
};

inline std::vector<FrameError> per_frame_errors(const std::vector<Pose2>& estimate,
                                                const std::vector<Pose2>& truth) {
    if (estimate.size() != truth.size())
        throw std::invalid_argument("per_frame_errors: trajectory length mismatch");
    std::vector<FrameError> errors;
    errors.reserve(estimate.size());
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        FrameError e;
        e.trans_m = std::hypot(estimate[i].east - truth[i].east,
                               estimate[i].north - truth[i].north);
        e.rot_deg = std::abs(wrap_angle(estimate[i].heading - truth[i].heading)) * 180.0 / kPi;
        errors.push_back(e);
    }
    return errors;
}

inline MetricsReport compute_metrics(const std::vector<Pose2>& estimate,
                                     const std::vector<Pose2>& truth) {
    if (estimate.empty())
        throw std::invalid_argument("compute_metrics: need at least one frame");
    const auto errors = per_frame_errors(estimate, truth);

    MetricsReport report;
    report.frame_count = errors.size();
    double sq_trans = 0.0, sq_rot = 0.0;
    std::array<std::size_t, 3> hits_trans{};
    std::array<std::size_t, 3> hits_pose{};
    for (const FrameError& e : errors) {
        sq_trans += e.trans_m * e.trans_m;
        sq_rot += e.rot_deg * e.rot_deg;
        for (std::size_t t = 0; t < 3; ++t) {
            if (e.trans_m < kRecallTransTiers[t]) ++hits_trans[t];
            if (e.trans_m < kRecallPoseTransTiers[t] && e.rot_deg < kRecallPoseRotTiers[t])
                ++hits_pose[t];
        }
    }
    const double n = double(errors.size());
    report.rmse_trans_m = std::sqrt(sq_trans / n);
    report.rmse_rot_deg = std::sqrt(sq_rot / n);
    for (std::size_t t = 0; t < 3; ++t) {
        report.recall_trans[t] = double(hits_trans[t]) / n;
        report.recall_pose[t] = double(hits_pose[t]) / n;
    }
    return report;
}

}  // namespace poleloc
