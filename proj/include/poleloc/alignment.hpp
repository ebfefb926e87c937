#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "poleloc/core.hpp"
#include "poleloc/filter.hpp"
#include "poleloc/map.hpp"

namespace poleloc {

struct Circle {
    Vec2 center;
    double radius = 0.0;  // > 0
};

/// Fine pose candidate together with the weight used to judge it
/// against the coarse pose.
struct AlignedPose {
    Pose2 pose;
    double weight = 0.0;                        // raw likelihood product at this pose
    std::array<std::int64_t, 3> source_triple{};
};

struct AlignParams {
    double d0 = 1.0;                 // max accepted distance to the coarse pose, m
    double beta_t = 1000.0;          // accurate-resample translation scale, m
    double beta_theta = 200.0;       // accurate-resample heading scale, rad
    double min_triple_angle = 0.05;  // rad, degeneracy guard
    int gn_max_iters = 20;
    double gn_tol = 1e-9;            // rad
    // Upper bounds on the accurate-resample spreads. A candidate that only
    // narrowly outweighs the coarse pose (w* near 1/2) would otherwise
    // scatter the ensemble by hundreds of meters and lose the track.
    // Calibrated so the redraw spread matches the solver's own accuracy:
    // much tighter and a biased fix pins the ensemble (no diversity to
    // recover), much looser and every accepted fix discards a converged
    // ensemble.
    double sigma_t_cap = 0.2;       // m
    double sigma_theta_cap = 0.02;  // rad
};

/// Horizontal angle between two image columns, treating the camera as a
/// protractor. Requires u1 > u2; the result lies in (0, pi).
inline double horizontal_angle(double u1, double u2, const CameraIntrinsics& intr) {
    if (!(u1 > u2)) throw std::invalid_argument("horizontal_angle: requires u1 > u2");
    return std::atan((u1 - intr.cx) / intr.fx) - std::atan((u2 - intr.cx) / intr.fx);
}

/// Circle through chord endpoints subtending inscribed angle theta.
/// Two mirror circles exist per chord; `side` picks one (the center sits
/// left of a->b for side = true).
inline Circle circumscribed_circle(Vec2 a, Vec2 b, double theta, bool side) {
    if (!(theta > 0.0 && theta < kPi))
        throw std::invalid_argument("circumscribed_circle: theta must be in (0, pi)");
    const Vec2 chord = b - a;
    const double d = norm(chord);
    if (d <= 0.0) throw std::invalid_argument("circumscribed_circle: degenerate chord");
    const double r = d / (2.0 * std::sin(theta));
    const double h_sq = r * r - d * d / 4.0;
    const double h = h_sq > 0.0 ? std::sqrt(h_sq) : 0.0;
    const Vec2 mid = 0.5 * (a + b);
    const Vec2 left{-chord.north / d, chord.east / d};  // unit normal, left of a->b
    return Circle{side ? mid + h * left : mid - h * left, r};
}

namespace detail {

/// Signed angle (CCW positive) from vector a to vector b.
inline double signed_angle(Vec2 a, Vec2 b) { return std::atan2(cross(a, b), dot(a, b)); }

}  // namespace detail

/// Camera translation from three landmarks ordered by descending image
/// column and the two horizontal angles between them. The camera sits at
/// the second intersection of the two circumscribed circles (the first
/// is the shared landmark L2); the intersection is the reflection of L2
/// across the line of centers. All four mirror-circle combinations are
/// enumerated and filtered by reproducing both angles with the correct
/// left-to-right landmark order; ties resolve to the candidate nearest
/// the coarse pose. Heading never enters: translation is decoupled from
/// rotation by construction.
inline std::optional<Vec2> translation_from_triple(Vec2 l1, Vec2 l2, Vec2 l3, double theta12,
                                                   double theta23, const Pose2& coarse,
                                                   const AlignParams& params) {
    if (!(theta12 > 0.0 && theta12 < kPi) || !(theta23 > 0.0 && theta23 < kPi))
        return std::nullopt;
    if (norm(l1 - l2) <= 0.0 || norm(l2 - l3) <= 0.0 || norm(l1 - l3) <= 0.0)
        return std::nullopt;

    constexpr double kAngleTol = 1e-6;  // rad
    std::optional<Vec2> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const bool side1 : {false, true}) {
        for (const bool side2 : {false, true}) {
            const Circle c1 = circumscribed_circle(l1, l2, theta12, side1);
            const Circle c2 = circumscribed_circle(l2, l3, theta23, side2);
            const Vec2 axis = c2.center - c1.center;
            const double axis_len = norm(axis);
            if (axis_len < 1e-6 * std::max(c1.radius, c2.radius))
                continue;  // nearly identical circles: degenerate configuration

            // Reflect L2 across the line of centers.
            const Vec2 unit{axis.east / axis_len, axis.north / axis_len};
            const Vec2 rel = l2 - c1.center;
            const double along = dot(rel, unit);
            const Vec2 foot = c1.center + along * unit;
            const Vec2 candidate = foot + (foot - l2);

            // A tangential intersection collapses onto L2 itself.
            if (norm(candidate - l2) < 1e-9 * std::max(c1.radius, c2.radius)) continue;

            // Bearings from the candidate must reproduce both angles with
            // u1 > u2 > u3 order: in world coordinates the higher-column
            // landmark is clockwise of the lower one, so the CCW angle
            // from (L1 - T) to (L2 - T) equals +theta12.
            const Vec2 d1 = l1 - candidate;
            const Vec2 d2 = l2 - candidate;
            const Vec2 d3 = l3 - candidate;
            if (std::abs(detail::signed_angle(d1, d2) - theta12) > kAngleTol) continue;
            if (std::abs(detail::signed_angle(d2, d3) - theta23) > kAngleTol) continue;

            const double dist = norm(candidate - coarse.position());
            if (dist < best_dist) {
                best_dist = dist;
                best = candidate;
            }
        }
    }
    return best;
}

/// Observation matched to a known map pole; the unit the fine solver
/// consumes after data association.
struct MatchedPair {
    Observation observation;
    Pole pole;
};

struct RotationResult {
    double heading = 0.0;
    bool converged = false;
};

/// One-parameter Gauss-Newton over heading with translation fixed,
/// minimizing 1/2 * sum of squared column residuals. Poles that fall
/// behind the camera at the current iterate drop out of that iteration;
/// if every residual drops, the initial heading comes back flagged.
/// Steps that increase the cost are halved up to 8 times.
inline RotationResult optimize_rotation(Vec2 translation, const std::vector<MatchedPair>& pairs,
                                        const CameraIntrinsics& intr, double psi_init,
                                        const AlignParams& params) {
    auto evaluate = [&](double psi, double* gradient, double* curvature) -> std::optional<double> {
        Pose2 pose{translation.east, translation.north, psi};
        double cost = 0.0, g = 0.0, h = 0.0;
        bool any = false;
        for (const MatchedPair& pair : pairs) {
            const auto raw = project_raw(pose, intr, pair.pole.position);
            if (!raw) continue;
            any = true;
            const auto [u, range] = *raw;
            const double r = u - pair.observation.u;
            // du/dpsi = fx * (x'^2 + y'^2) / y'^2, with y' = range.
            const double x_cam = (u - intr.cx) * range / intr.fx;
            const double jac = intr.fx * (x_cam * x_cam + range * range) / (range * range);
            cost += 0.5 * r * r;
            g += jac * r;
            h += jac * jac;
        }
        if (!any) return std::nullopt;
        if (gradient) *gradient = g;
        if (curvature) *curvature = h;
        return cost;
    };

    double psi = psi_init;
    auto cost = evaluate(psi, nullptr, nullptr);
    if (!cost) return {wrap_angle(psi_init), false};
    for (int iter = 0; iter < params.gn_max_iters; ++iter) {
        double g = 0.0, h = 0.0;
        cost = evaluate(psi, &g, &h);
        if (!cost) return {wrap_angle(psi_init), false};
        if (h <= 0.0) break;
        double step = -g / h;
        if (std::abs(step) < params.gn_tol) break;
        bool accepted = false;
        for (int halving = 0; halving < 8; ++halving) {
            const auto trial = evaluate(psi + step, nullptr, nullptr);
            if (trial && *trial <= *cost) {
                psi += step;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return {wrap_angle(psi), true};
}

/// Raw likelihood product (the particle-weight formula) of the matched
/// pairs at an arbitrary pose. Pairs behind the camera score as missed
/// detections, and every factor is floored at the missed-detection
/// likelihood: the optimal association at the evaluated pose would
/// unmatch a pair whose residual costs more than dropping it, so
/// without the floor a single mismatched (e.g. clutter-fed) pair
/// dominates the weight ratio and drags accepted poses toward it.
inline double pose_weight(const Pose2& pose, const std::vector<MatchedPair>& pairs,
                          const CameraIntrinsics& intr, const WeightParams& wp) {
    double weight = 1.0;
    for (const MatchedPair& pair : pairs) {
        const auto raw = project_raw(pose, intr, pair.pole.position);
        if (!raw) {
            weight *= 1.0 - wp.p_d;
            continue;
        }
        Projection proj{pair.pole.id, raw->first, raw->second, pair.pole.label};
        weight *= std::max(observation_likelihood(pair.observation, proj, wp), 1.0 - wp.p_d);
    }
    return weight;
}

struct AlignOutcome {
    std::optional<AlignedPose> accepted;
    std::string reject_reason;  // empty on acceptance
    int triples_tried = 0;
    int candidates = 0;
};

/// Fine alignment over all C(n,3) landmark triples: solve translation
/// geometrically, refine heading by Gauss-Newton seeded at the coarse
/// heading, weight each candidate with all n matched pairs, and accept
/// the best iff it outweighs the coarse pose and lies within d0 of it.
inline AlignOutcome align_pose(const Pose2& coarse, double coarse_weight,
                               std::vector<MatchedPair> pairs, const CameraIntrinsics& intr,
                               const WeightParams& wp, const AlignParams& params) {
    AlignOutcome outcome;
    const int n = int(pairs.size());
    if (n < 3) {
        outcome.reject_reason = "fewer than 3 matched landmarks";
        return outcome;
    }
    std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
        return a.observation.u > b.observation.u;
    });

    struct Candidate {
        AlignedPose aligned;
        double dist_to_coarse = 0.0;
    };
    std::vector<Candidate> candidates;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            for (int c = b + 1; c < n; ++c) {
                ++outcome.triples_tried;
                const double u1 = pairs[a].observation.u;
                const double u2 = pairs[b].observation.u;
                const double u3 = pairs[c].observation.u;
                if (!(u1 > u2 && u2 > u3)) continue;  // coincident columns
                const double theta12 = horizontal_angle(u1, u2, intr);
                const double theta23 = horizontal_angle(u2, u3, intr);
                if (theta12 < params.min_triple_angle || theta23 < params.min_triple_angle)
                    continue;
                const auto translation = translation_from_triple(
                    pairs[a].pole.position, pairs[b].pole.position, pairs[c].pole.position,
                    theta12, theta23, coarse, params);
                if (!translation) continue;
                const auto rotation =
                    optimize_rotation(*translation, pairs, intr, coarse.heading, params);
                if (!rotation.converged) continue;
                Candidate cand;
                cand.aligned.pose = {translation->east, translation->north, rotation.heading};
                cand.aligned.weight = pose_weight(cand.aligned.pose, pairs, intr, wp);
                cand.aligned.source_triple = {pairs[a].pole.id, pairs[b].pole.id,
                                              pairs[c].pole.id};
                cand.dist_to_coarse = norm(*translation - coarse.position());
                candidates.push_back(cand);
            }
        }
    }
    outcome.candidates = int(candidates.size());
    if (candidates.empty()) {
        outcome.reject_reason = "no viable triple candidate";
        return outcome;
    }
    const auto best = std::max_element(
        candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
            if (x.aligned.weight != y.aligned.weight) return x.aligned.weight < y.aligned.weight;
            return x.dist_to_coarse > y.dist_to_coarse;  // ties: prefer nearer to coarse
        });
    if (!(best->aligned.weight > coarse_weight)) {
        outcome.reject_reason = "candidate weight does not exceed coarse weight";
        return outcome;
    }
    if (!(best->dist_to_coarse < params.d0)) {
        outcome.reject_reason = "candidate farther than d0 from coarse pose";
        return outcome;
    }
    outcome.accepted = best->aligned;
    return outcome;
}

/// Observation-driven relocalization: redraw the whole ensemble from a
/// Gaussian centered at the accepted pose with spread (1 - w*) * beta.
/// w_star is the aligned weight normalized into (0, 1] as
/// w_p / (w_p + w_c).
inline void accurate_resample(std::vector<Particle>& particles, const Pose2& aligned_pose,
                              double w_star, const AlignParams& params, Rng& rng) {
    const double sigma_t = std::min((1.0 - w_star) * params.beta_t, params.sigma_t_cap);
    const double sigma_theta =
        std::min((1.0 - w_star) * params.beta_theta, params.sigma_theta_cap);
    const double w = 1.0 / double(particles.size());
    for (Particle& p : particles) {
        p.pose.east = rng.normal(aligned_pose.east, sigma_t);
        p.pose.north = rng.normal(aligned_pose.north, sigma_t);
        p.pose.heading = wrap_angle(rng.normal(aligned_pose.heading, sigma_theta));
        p.weight = w;
    }
}

}  // namespace poleloc
