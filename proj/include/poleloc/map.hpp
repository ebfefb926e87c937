#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "poleloc/core.hpp"

namespace poleloc {

/// Vertical pole landmark, stored as a 2-D position plus a semantic label.
struct Pole {
    std::int64_t id = 0;
    Vec2 position;
    SemanticLabel label = SemanticLabel::Pole;
};

/// Ordered pole collection with unique ids.
class CompactMap {
public:
    CompactMap() = default;
    explicit CompactMap(std::vector<Pole> poles) : poles_(std::move(poles)) {
        for (std::size_t i = 0; i < poles_.size(); ++i) {
            if (!by_id_.emplace(poles_[i].id, i).second)
                throw LoadError("duplicate pole id " + std::to_string(poles_[i].id));
        }
    }

    const std::vector<Pole>& poles() const { return poles_; }
    std::size_t size() const { return poles_.size(); }
    bool empty() const { return poles_.empty(); }

    const Pole* find(std::int64_t id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &poles_[it->second];
    }

private:
    std::vector<Pole> poles_;
    std::unordered_map<std::int64_t, std::size_t> by_id_;
};

struct CameraIntrinsics {
    double fx = 500.0;        // pixels, > 0
    double cx = 320.0;        // pixels, in [0, image_width)
    int image_width = 640;    // pixels
    int image_height = 480;   // pixels
};

/// Image-column projection of a map pole for a hypothesized pose.
struct Projection {
    std::int64_t pole_id = 0;
    double u = 0.0;       // pixels, real-valued
    double range = 0.0;   // camera-frame forward distance, > 0
    SemanticLabel label = SemanticLabel::Pole;
};

/// Column and forward range of a world point in the camera of `pose`,
/// without image-bound checks. Absent when the point is not in front.
inline std::optional<std::pair<double, double>> project_raw(const Pose2& pose,
                                                            const CameraIntrinsics& intr,
                                                            Vec2 point) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    const double dx = point.east - pose.east;
    const double dy = point.north - pose.north;
    const double x_cam = c * dx + s * dy;       // right
    const double y_cam = -s * dx + c * dy;      // forward
    if (y_cam <= 0.0) return std::nullopt;
    return std::pair{x_cam * intr.fx / y_cam + intr.cx, y_cam};
}

/// Pinhole projection of a pole; absence encodes invisibility
/// (behind the camera or outside the image).
inline std::optional<Projection> project_pole(const Pose2& pose, const CameraIntrinsics& intr,
                                              const Pole& pole) {
    auto raw = project_raw(pose, intr, pole.position);
    if (!raw) return std::nullopt;
    const auto [u, range] = *raw;
    if (u < 0.0 || u >= double(intr.image_width)) return std::nullopt;
    return Projection{pole.id, u, range, pole.label};
}

/// All poles visible from `pose` within `max_range`, sorted by (u, id).
inline std::vector<Projection> visible_projections(const Pose2& pose,
                                                   const CameraIntrinsics& intr,
                                                   const CompactMap& map, double max_range) {
    std::vector<Projection> out;
    for (const Pole& p : map.poles()) {
        if (auto proj = project_pole(pose, intr, p); proj && proj->range <= max_range)
            out.push_back(*proj);
    }
    std::sort(out.begin(), out.end(), [](const Projection& a, const Projection& b) {
        if (a.u != b.u) return a.u < b.u;
        return a.pole_id < b.pole_id;
    });
    return out;
}

}  // namespace poleloc
