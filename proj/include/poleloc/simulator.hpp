#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "poleloc/core.hpp"
#include "poleloc/extraction.hpp"
#include "poleloc/filter.hpp"
#include "poleloc/map.hpp"

namespace poleloc {

struct Rect {
    double min_east = -100.0, max_east = 100.0;
    double min_north = -100.0, max_north = 100.0;

    double area() const { return (max_east - min_east) * (max_north - min_north); }
    Vec2 center() const { return {0.5 * (min_east + max_east), 0.5 * (min_north + max_north)}; }
};

enum class TrajectoryKind { Loop, Waypoints };

struct WorldConfig {
    Rect arena;
    int pole_count = 40;
    std::vector<std::pair<SemanticLabel, double>> label_mix = {
        {SemanticLabel::Pole, 0.4},
        {SemanticLabel::Lamp, 0.3},
        {SemanticLabel::TreeTrunk, 0.2},
        {SemanticLabel::TrafficSign, 0.1},
    };
    TrajectoryKind trajectory = TrajectoryKind::Loop;
    double loop_radius = 50.0;          // m
    std::vector<Vec2> waypoints;        // used when trajectory == Waypoints
    double speed = 5.0;                 // m/s
    double duration = 100.0;            // s
    double frame_rate = 10.0;           // Hz
    std::uint64_t seed = 1;
};

struct SensorNoise {
    double sigma_px = 0.0;     // column noise
    double p_d = 1.0;          // detection probability
    double clutter_rate = 0.0; // Poisson mean of false observations per frame
};

struct TimedPose {
    double t = 0.0;
    Pose2 pose;
};

inline SemanticLabel sample_label(const std::vector<std::pair<SemanticLabel, double>>& mix,
                                  Rng& rng) {
    double total = 0.0;
    for (const auto& [label, w] : mix) total += w;
    double x = rng.uniform() * total;
    for (const auto& [label, w] : mix) {
        x -= w;
        if (x <= 0.0) return label;
    }
    return mix.empty() ? SemanticLabel::Pole : mix.back().first;
}

/// Seeded world generation: poles uniform over the arena, ground-truth
/// trajectory sampled at frame_rate with headings exactly tangent to
/// the path.
inline std::pair<CompactMap, std::vector<TimedPose>> generate_world(const WorldConfig& cfg) {
    if (cfg.pole_count > 0 && cfg.arena.area() <= 0.0)
        throw std::invalid_argument("generate_world: empty arena with pole_count > 0");
    if (cfg.frame_rate <= 0.0) throw std::invalid_argument("generate_world: frame_rate must be > 0");

    Rng rng(mix_seed(cfg.seed, 0xA11A));
    std::vector<Pole> poles;
    poles.reserve(std::size_t(std::max(cfg.pole_count, 0)));
    for (int i = 0; i < cfg.pole_count; ++i) {
        Pole p;
        p.id = i + 1;
        p.position = {rng.uniform(cfg.arena.min_east, cfg.arena.max_east),
                      rng.uniform(cfg.arena.min_north, cfg.arena.max_north)};
        p.label = sample_label(cfg.label_mix, rng);
        poles.push_back(p);
    }

    std::vector<TimedPose> trajectory;
    const double dt = 1.0 / cfg.frame_rate;
    const int frames = std::max(1, int(std::floor(cfg.duration * cfg.frame_rate)) + 1);
    if (cfg.trajectory == TrajectoryKind::Loop) {
        const Vec2 center = cfg.arena.center();
        for (int k = 0; k < frames; ++k) {
            const double t = k * dt;
            const double phi = cfg.speed * t / cfg.loop_radius;  // CCW, tangent = forward
            TimedPose tp;
            tp.t = t;
            tp.pose.east = center.east + cfg.loop_radius * std::cos(phi);
            tp.pose.north = center.north + cfg.loop_radius * std::sin(phi);
            tp.pose.heading = wrap_angle(phi);
            trajectory.push_back(tp);
        }
    } else {
        if (cfg.waypoints.size() < 2)
            throw std::invalid_argument("generate_world: waypoint trajectory needs >= 2 points");
        std::size_t seg = 0;
        double seg_pos = 0.0;
        for (int k = 0; k < frames; ++k) {
            while (seg + 1 < cfg.waypoints.size() - 1 &&
                   seg_pos > norm(cfg.waypoints[seg + 1] - cfg.waypoints[seg])) {
                seg_pos -= norm(cfg.waypoints[seg + 1] - cfg.waypoints[seg]);
                ++seg;
            }
            const Vec2 a = cfg.waypoints[seg];
            const Vec2 b = cfg.waypoints[seg + 1];
            const double len = norm(b - a);
            const double s = len > 0.0 ? std::min(seg_pos / len, 1.0) : 0.0;
            TimedPose tp;
            tp.t = k * dt;
            tp.pose.east = a.east + s * (b.east - a.east);
            tp.pose.north = a.north + s * (b.north - a.north);
            // forward = (-sin psi, cos psi) => psi = atan2(-dE, dN)
            tp.pose.heading = wrap_angle(std::atan2(-(b.east - a.east), b.north - a.north));
            trajectory.push_back(tp);
            seg_pos += cfg.speed * dt;
        }
    }
    return {CompactMap(std::move(poles)), std::move(trajectory)};
}

/// Recovers the exact (v, omega, dt) that moves the arc motion model
/// between consecutive ground-truth poses, then perturbs with the same
/// noise mixing as the filter's motion model.
inline std::vector<Odometry> synthesize_odometry(const std::vector<TimedPose>& truth,
                                                 const MotionNoise& noise, Rng& rng) {
    if (truth.size() < 2)
        throw std::invalid_argument("synthesize_odometry: need at least 2 trajectory samples");
    std::vector<Odometry> out;
    out.reserve(truth.size() - 1);
    for (std::size_t i = 0; i + 1 < truth.size(); ++i) {
        const Pose2& p1 = truth[i].pose;
        const Pose2& p2 = truth[i + 1].pose;
        const double dt = truth[i + 1].t - truth[i].t;
        const double dpsi = wrap_angle(p2.heading - p1.heading);
        const double omega = dpsi / dt;
        const Vec2 delta = p2.position() - p1.position();
        const double chord = norm(delta);
        // The arc model displaces along the mid-heading forward axis.
        const Pose2 mid{p1.east, p1.north, p1.heading + 0.5 * dpsi};
        const double sign = dot(delta, mid.forward()) < 0.0 ? -1.0 : 1.0;
        double v;
        if (std::abs(omega) < 1e-9) {
            v = sign * chord / dt;
        } else {
            v = sign * omega * chord / (2.0 * std::sin(0.5 * omega * dt));
        }
        const double av = std::abs(v), aw = std::abs(omega);
        Odometry odo;
        odo.dt = dt;
        odo.v = v + rng.normal(0.0, noise.alpha1 * av + noise.alpha2 * aw);
        odo.omega = omega + rng.normal(0.0, noise.alpha3 * av + noise.alpha4 * aw);
        out.push_back(odo);
    }
    return out;
}

/// Forward sensor model: each visible projection survives with
/// probability p_d and gets Gaussian column noise; Poisson clutter draws
/// uniform columns with labels from label_mix.
inline std::vector<Observation> synthesize_observations(
    const Pose2& pose, const CompactMap& map, const CameraIntrinsics& intr,
    const SensorNoise& noise, const std::vector<std::pair<SemanticLabel, double>>& label_mix,
    Rng& rng, double max_range = 80.0) {
    std::vector<Observation> out;
    for (const Projection& proj : visible_projections(pose, intr, map, max_range)) {
        if (rng.uniform() >= noise.p_d) continue;
        Observation obs;
        obs.u = proj.u + rng.normal(0.0, noise.sigma_px);
        obs.u = std::clamp(obs.u, 0.0, std::nextafter(double(intr.image_width), 0.0));
        obs.label = proj.label;
        obs.group_width = 3;
        obs.pixel_count = 100;
        out.push_back(obs);
    }
    const int clutter = rng.poisson(noise.clutter_rate);
    for (int i = 0; i < clutter; ++i) {
        Observation obs;
        obs.u = rng.uniform(0.0, double(intr.image_width));
        obs.label = sample_label(label_mix, rng);
        obs.group_width = 3;
        obs.pixel_count = 100;
        out.push_back(obs);
    }
    std::sort(out.begin(), out.end(),
              [](const Observation& a, const Observation& b) { return a.u < b.u; });
    return out;
}

/// Optional mask-rendering mode: draws every visible pole as a
/// full-height vertical stripe of class-id pixels so the extraction
/// pipeline can be exercised end to end.
inline SegmentationMask render_mask(const Pose2& pose, const CompactMap& map,
                                    const CameraIntrinsics& intr,
                                    const ExtractionParams& extraction, int stripe_width,
                                    double max_range = 80.0) {
    SegmentationMask mask;
    mask.width = intr.image_width;
    mask.height = intr.image_height;
    mask.class_ids.assign(std::size_t(mask.width) * mask.height, 0);
    for (const Projection& proj : visible_projections(pose, intr, map, max_range)) {
        int class_id = -1;
        for (const auto& [cid, label] : extraction.label_map)
            if (label == proj.label) { class_id = cid; break; }
        if (class_id < 0) continue;
        const int center = int(std::lround(proj.u));
        const int half = stripe_width / 2;
        for (int x = std::max(0, center - half);
             x <= std::min(mask.width - 1, center + half); ++x)
            for (int y = 0; y < mask.height; ++y)
                mask.class_ids[std::size_t(y) * mask.width + x] = std::uint8_t(class_id);
    }
    return mask;
}

}  // namespace poleloc
