#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace poleloc {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

struct Vec2 {
    double east = 0.0;
    double north = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.east + b.east, a.north + b.north}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.east - b.east, a.north - b.north}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.east, s * v.north}; }
    friend Vec2 operator*(Vec2 v, double s) { return s * v; }
};

inline double dot(Vec2 a, Vec2 b) { return a.east * b.east + a.north * b.north; }
inline double cross(Vec2 a, Vec2 b) { return a.east * b.north - a.north * b.east; }
inline double norm(Vec2 v) { return std::hypot(v.east, v.north); }

/// 2-D vehicle/camera state in a planar East/North metric frame.
/// Heading psi = 0 faces +North; the forward axis in world coordinates
/// is (-sin psi, cos psi).
struct Pose2 {
    double east = 0.0;
    double north = 0.0;
    double heading = 0.0;  // radians, kept in (-pi, pi]

    Vec2 position() const { return {east, north}; }
    Vec2 forward() const { return {-std::sin(heading), std::cos(heading)}; }

    void normalize() { heading = wrap_angle(heading); }
};

enum class SemanticLabel : std::uint8_t {
    Pole,
    Lamp,
    TreeTrunk,
    TrafficSign,
    Other,
};

inline std::string_view to_string(SemanticLabel l) {
    switch (l) {
        case SemanticLabel::Pole: return "Pole";
        case SemanticLabel::Lamp: return "Lamp";
        case SemanticLabel::TreeTrunk: return "TreeTrunk";
        case SemanticLabel::TrafficSign: return "TrafficSign";
        case SemanticLabel::Other: return "Other";
    }
    return "Other";
}

/// Closed enumeration: anything not spelled exactly is rejected.
inline std::optional<SemanticLabel> label_from_string(std::string_view s) {
    if (s == "Pole") return SemanticLabel::Pole;
    if (s == "Lamp") return SemanticLabel::Lamp;
    if (s == "TreeTrunk") return SemanticLabel::TreeTrunk;
    if (s == "TrafficSign") return SemanticLabel::TrafficSign;
    if (s == "Other") return SemanticLabel::Other;
    return std::nullopt;
}

/// Counter-based 64-bit generator (splitmix64 core). One master seed plus
/// per-purpose stream ids give identical results regardless of schedule.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (two uniforms per call, no caching,
    /// so the stream consumption is schedule-independent).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    int poisson(double mean) {
        // Knuth's method; means here are small (clutter rates of a few).
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    std::uint64_t state_;
};

/// Hash-combines a master seed with stream ids so sub-streams are
/// statistically independent and stable across runs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed + 0x9e3779b97f4a7c15ull);
    h = mix(h ^ (a + 0x9e3779b97f4a7c15ull));
    h = mix(h ^ (b + 0x9e3779b97f4a7c15ull));
    return h;
}

/// Error type for malformed input files; message names the offending
/// file and line where possible.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace poleloc
