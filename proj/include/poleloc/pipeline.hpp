#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poleloc/alignment.hpp"
#include "poleloc/core.hpp"
#include "poleloc/evaluation.hpp"
#include "poleloc/filter.hpp"
#include "poleloc/io.hpp"
#include "poleloc/map.hpp"

namespace poleloc {

struct InitialPrior {
    Pose2 pose;
    double sigma_trans = 0.0;  // m, per axis
    double sigma_rot = 0.0;    // rad
};

struct RunParams {
    int particle_count = 1000;
    std::uint64_t seed = 1;
    InitialPrior prior;
    MotionNoise motion_noise;
    WeightParams weights;
    AlignParams align;
    double gate_px = 40.0;
    double max_range = 80.0;
    double resample_ratio = 0.6;  // p0
    bool alignment_enabled = true;
    int alignment_every = 1;      // run alignment every k-th frame
    CameraIntrinsics intrinsics;
};

struct FrameLog {
    std::size_t frame = 0;
    double n_eff = 0.0;
    bool resampled = false;
    bool diverged = false;
    std::string mode;              // "coarse" or "aligned"
    std::string alignment_status;  // accept reason field; empty when alignment skipped
    int matched_landmarks = 0;
    Pose2 coarse;                  // filter estimate before any alignment
    double w_star = 0.0;           // normalized aligned weight, 0 when not accepted
};

struct LocalizationResult {
    std::vector<TrajectoryRow> trajectory;
    std::vector<FrameLog> logs;
    bool ever_diverged = false;
};

/// Runs the coarse-to-fine loop over in-memory inputs: per frame
/// motion update (from the previous step's odometry), measurement
/// update, N_eff-gated resampling and weighted-mean state estimation;
/// every k-th frame the fine solver refines the coarse pose using the
/// highest-weight particle's data association and, on acceptance,
/// relocalizes the ensemble around the aligned pose.
inline LocalizationResult run_localization(const CompactMap& map,
                                           const std::vector<Odometry>& odometry,
                                           const std::vector<std::vector<Observation>>& frames,
                                           const RunParams& params) {
    LocalizationResult result;
    const std::size_t frame_count = std::max(frames.size(), odometry.size() + 1);

    std::vector<Particle> particles;
    particles.reserve(std::size_t(params.particle_count));
    for (int i = 0; i < params.particle_count; ++i) {
        Rng rng(mix_seed(params.seed, 0x1217, std::uint64_t(i)));
        Particle p;
        p.pose.east = rng.normal(params.prior.pose.east, params.prior.sigma_trans);
        p.pose.north = rng.normal(params.prior.pose.north, params.prior.sigma_trans);
        p.pose.heading = wrap_angle(rng.normal(params.prior.pose.heading, params.prior.sigma_rot));
        p.weight = 1.0 / params.particle_count;
        particles.push_back(p);
    }

    static const std::vector<Observation> kNoObservations;
    for (std::size_t frame = 0; frame < frame_count; ++frame) {
        FrameLog log;
        log.frame = frame;
        if (frame > 0)
            motion_update(particles, odometry[frame - 1], params.motion_noise, params.seed, frame);

        const auto& observations = frame < frames.size() ? frames[frame] : kNoObservations;
        const auto measurement = measurement_update(particles, observations, map,
                                                    params.intrinsics, params.weights,
                                                    params.gate_px, params.max_range);
        log.diverged = measurement.diverged;
        result.ever_diverged |= measurement.diverged;

        // Capture the best particle's association before resampling
        // flattens the weights.
        std::size_t best = 0;
        for (std::size_t i = 1; i < particles.size(); ++i)
            if (particles[i].weight > particles[best].weight) best = i;
        const Assignment best_assignment = measurement.assignments[best];

        log.n_eff = effective_particle_count(particles);
        Rng resample_rng(mix_seed(params.seed, 0x7e5a, frame));
        log.resampled = maybe_resample(particles, params.resample_ratio, resample_rng);

        Pose2 coarse = estimate_state(particles);
        TrajectoryRow row{coarse, "coarse"};
        log.mode = "coarse";
        log.coarse = coarse;

        const bool alignment_due = params.alignment_enabled &&
                                   frame % std::size_t(std::max(params.alignment_every, 1)) == 0;
        if (alignment_due && !observations.empty()) {
            std::vector<MatchedPair> pairs;
            for (std::size_t i = 0; i < observations.size(); ++i) {
                const std::int64_t pole_id = best_assignment.pole_ids[i];
                if (pole_id == Assignment::kNone) continue;
                if (const Pole* pole = map.find(pole_id))
                    pairs.push_back({observations[i], *pole});
            }
            log.matched_landmarks = int(pairs.size());
            const double coarse_weight =
                pose_weight(coarse, pairs, params.intrinsics, params.weights);
            const auto outcome = align_pose(coarse, coarse_weight, pairs, params.intrinsics,
                                            params.weights, params.align);
            if (outcome.accepted) {
                const double w_star =
                    outcome.accepted->weight / (outcome.accepted->weight + coarse_weight);
                log.w_star = w_star;
                Rng align_rng(mix_seed(params.seed, 0xacc0, frame));
                accurate_resample(particles, outcome.accepted->pose, w_star, params.align,
                                  align_rng);
                row.pose = outcome.accepted->pose;
                row.mode = "aligned";
                log.mode = "aligned";
                log.alignment_status = "accepted";
            } else {
                log.alignment_status = outcome.reject_reason;
            }
        }

        result.trajectory.push_back(row);
        result.logs.push_back(log);
    }
    return result;
}

}  // namespace poleloc
