#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "poleloc/association.hpp"
#include "poleloc/core.hpp"
#include "poleloc/extraction.hpp"
#include "poleloc/map.hpp"

namespace poleloc {

struct Particle {
    Pose2 pose;
    double weight = 0.0;
};

struct Odometry {
    double v = 0.0;      // m/s
    double omega = 0.0;  // rad/s
    double dt = 0.0;     // s, > 0
};

/// Velocity motion model noise coefficients: standard deviations are
/// mixed from |v| and |omega| (Thrun et al. style).
struct MotionNoise {
    double alpha1 = 0.0, alpha2 = 0.0;  // -> v noise
    double alpha3 = 0.0, alpha4 = 0.0;  // -> omega noise
    double alpha5 = 0.0, alpha6 = 0.0;  // -> final-rotation noise
};

struct WeightParams {
    double p_d = 0.9;        // detection probability
    double kappa = 0.01;     // clutter intensity per pixel column
    double sigma_px = 2.0;   // observation stddev, pixels
    double beta_ref = 20.0;  // reference range for the distance factor, m
};

/// Advances a single pose along the circular arc implied by (v, omega)
/// over dt, with the straight-line limit for |omega| below 1e-9.
inline Pose2 advance_pose(Pose2 pose, double v, double omega, double gamma, double dt) {
    if (std::abs(omega) < 1e-9) {
        pose.east += -v * dt * std::sin(pose.heading);
        pose.north += v * dt * std::cos(pose.heading);
    } else {
        const double r = v / omega;
        pose.east += r * (std::cos(pose.heading + omega * dt) - std::cos(pose.heading));
        pose.north += r * (std::sin(pose.heading + omega * dt) - std::sin(pose.heading));
    }
    pose.heading += omega * dt + gamma * dt;
    pose.normalize();
    return pose;
}

/// Samples the velocity motion model independently per particle.
/// Stream ids derive from (frame, particle index) so results do not
/// depend on evaluation order.
inline void motion_update(std::vector<Particle>& particles, const Odometry& odo,
                          const MotionNoise& noise, std::uint64_t seed, std::uint64_t frame) {
    const double av = std::abs(odo.v);
    const double aw = std::abs(odo.omega);
    for (std::size_t i = 0; i < particles.size(); ++i) {
        Rng rng(mix_seed(seed, frame, i));
        const double v = odo.v + rng.normal(0.0, noise.alpha1 * av + noise.alpha2 * aw);
        const double w = odo.omega + rng.normal(0.0, noise.alpha3 * av + noise.alpha4 * aw);
        const double g = rng.normal(0.0, noise.alpha5 * av + noise.alpha6 * aw);
        particles[i].pose = advance_pose(particles[i].pose, v, w, g, odo.dt);
    }
}

/// Per-observation likelihood factor: matched observations score
/// (p_d / kappa) * exp(-d/2) with d = (range/beta_ref) * e^2 / sigma_px^2,
/// unmatched ones score 1 - p_d.
inline double observation_likelihood(const Observation& obs,
                                     const std::optional<Projection>& matched,
                                     const WeightParams& params) {
    if (!matched) return 1.0 - params.p_d;
    const double e = std::abs(obs.u - matched->u);
    const double beta_s = matched->range / params.beta_ref;
    const double d = beta_s * e * e / (params.sigma_px * params.sigma_px);
    return params.p_d / params.kappa * std::exp(-0.5 * d);
}

struct MeasurementResult {
    std::vector<Assignment> assignments;  // one per particle
    bool diverged = false;                // all raw weights hit zero
};

/// Reweights every particle by the product of observation likelihoods
/// under its own optimal association, then normalizes the ensemble.
/// On total weight collapse the weights reset to uniform and the
/// divergence flag is raised; recovery policy is the caller's.
inline MeasurementResult measurement_update(std::vector<Particle>& particles,
                                            const std::vector<Observation>& observations,
                                            const CompactMap& map, const CameraIntrinsics& intr,
                                            const WeightParams& params, double gate_px,
                                            double max_range = 80.0) {
    MeasurementResult result;
    result.assignments.reserve(particles.size());
    double sum = 0.0;
    for (Particle& particle : particles) {
        const auto projections = visible_projections(particle.pose, intr, map, max_range);
        Assignment assignment = associate(observations, projections, gate_px);
        double likelihood = 1.0;
        for (std::size_t i = 0; i < observations.size(); ++i) {
            std::optional<Projection> matched;
            if (const int k = assignment.projection_indices[i]; k >= 0)
                matched = projections[std::size_t(k)];
            likelihood *= observation_likelihood(observations[i], matched, params);
        }
        particle.weight *= likelihood;
        sum += particle.weight;
        result.assignments.push_back(std::move(assignment));
    }
    if (sum <= 0.0) {
        result.diverged = true;
        const double w = 1.0 / double(particles.size());
        for (Particle& p : particles) p.weight = w;
    } else {
        for (Particle& p : particles) p.weight /= sum;
    }
    return result;
}

/// N_eff = 1 / sum(w^2) for normalized weights.
inline double effective_particle_count(const std::vector<Particle>& particles) {
    double sum_sq = 0.0;
    for (const Particle& p : particles) sum_sq += p.weight * p.weight;
    return 1.0 / sum_sq;
}

/// Systematic (low-variance) resampling when N_eff / N drops below p0.
/// Returns true when resampling happened.
inline bool maybe_resample(std::vector<Particle>& particles, double p0, Rng& rng) {
    const std::size_t n = particles.size();
    if (effective_particle_count(particles) / double(n) >= p0) return false;

    std::vector<Particle> resampled;
    resampled.reserve(n);
    const double step = 1.0 / double(n);
    double target = rng.uniform() * step;
    double cumulative = 0.0;
    std::size_t i = 0;
    for (std::size_t k = 0; k < n; ++k) {
        while (cumulative + particles[i].weight < target && i + 1 < n)
            cumulative += particles[i++].weight;
        resampled.push_back({particles[i].pose, step});
        target += step;
    }
    particles = std::move(resampled);
    return true;
}

/// Weighted-average state: arithmetic mean of East/North, circular mean
/// of heading. A vanishing circular resultant falls back to the
/// highest-weight particle's heading.
inline Pose2 estimate_state(const std::vector<Particle>& particles) {
    Pose2 mean;
    double sin_sum = 0.0, cos_sum = 0.0;
    for (const Particle& p : particles) {
        mean.east += p.weight * p.pose.east;
        mean.north += p.weight * p.pose.north;
        sin_sum += p.weight * std::sin(p.pose.heading);
        cos_sum += p.weight * std::cos(p.pose.heading);
    }
    if (std::hypot(sin_sum, cos_sum) < 1e-12) {
        const auto best = std::max_element(
            particles.begin(), particles.end(),
            [](const Particle& a, const Particle& b) { return a.weight < b.weight; });
        mean.heading = best->pose.heading;
    } else {
        mean.heading = std::atan2(sin_sum, cos_sum);
    }
    mean.normalize();
    return mean;
}

}  // namespace poleloc
