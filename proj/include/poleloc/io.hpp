#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "poleloc/core.hpp"
#include "poleloc/extraction.hpp"
#include "poleloc/filter.hpp"
#include "poleloc/map.hpp"
#include "poleloc/simulator.hpp"

namespace poleloc {

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) fields.push_back(field);
    if (!line.empty() && line.back() == sep) fields.emplace_back();
    return fields;
}

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(trim(s), &pos);
        if (pos != trim(s).size()) throw std::invalid_argument(s);
        return value;
    } catch (const std::exception&) {
        throw LoadError(context + ": not a number: '" + s + "'");
    }
}

inline std::int64_t parse_int(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const long long value = std::stoll(trim(s), &pos);
        if (pos != trim(s).size()) throw std::invalid_argument(s);
        return value;
    } catch (const std::exception&) {
        throw LoadError(context + ": not an integer: '" + s + "'");
    }
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(path + ": cannot open");
    return in;
}

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace detail

// ---- map CSV: id,east_m,north_m,label -------------------------------------

inline CompactMap load_map(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "id,east_m,north_m,label")
        throw LoadError(path + ": expected header 'id,east_m,north_m,label'");
    std::vector<Pole> poles;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto ctx = path + ":" + std::to_string(line_no);
        const auto fields = detail::split(line);
        if (fields.size() != 4) throw LoadError(ctx + ": expected 4 fields");
        Pole pole;
        pole.id = detail::parse_int(fields[0], ctx);
        pole.position = {detail::parse_double(fields[1], ctx),
                         detail::parse_double(fields[2], ctx)};
        if (!std::isfinite(pole.position.east) || !std::isfinite(pole.position.north))
            throw LoadError(ctx + ": non-finite position");
        const auto label = label_from_string(detail::trim(fields[3]));
        if (!label) throw LoadError(ctx + ": unknown label '" + detail::trim(fields[3]) + "'");
        pole.label = *label;
        poles.push_back(pole);
    }
    try {
        return CompactMap(std::move(poles));
    } catch (const LoadError& e) {
        throw LoadError(path + ": " + e.what());
    }
}

/// Centimeter precision keeps the map within its storage budget
/// (~32 bytes per pole) without affecting localization.
inline void save_map(const CompactMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError(path + ": cannot write");
    out << "id,east_m,north_m,label\n";
    char row[96];
    for (const Pole& p : map.poles()) {
        std::snprintf(row, sizeof row, "%lld,%.2f,%.2f,", static_cast<long long>(p.id),
                      p.position.east, p.position.north);
        out << row << to_string(p.label) << '\n';
    }
}

// ---- odometry CSV: t_s,v_mps,omega_radps -----------------------------------

struct TimedOdometry {
    double t = 0.0;
    double v = 0.0;
    double omega = 0.0;
};

inline std::vector<TimedOdometry> load_odometry(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "t_s,v_mps,omega_radps")
        throw LoadError(path + ": expected header 't_s,v_mps,omega_radps'");
    std::vector<TimedOdometry> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto ctx = path + ":" + std::to_string(line_no);
        const auto fields = detail::split(line);
        if (fields.size() != 3) throw LoadError(ctx + ": expected 3 fields");
        rows.push_back({detail::parse_double(fields[0], ctx), detail::parse_double(fields[1], ctx),
                        detail::parse_double(fields[2], ctx)});
    }
    return rows;
}

inline void save_odometry(const std::vector<Odometry>& odometry, double t0,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError(path + ": cannot write");
    out << "t_s,v_mps,omega_radps\n";
    double t = t0;
    for (const Odometry& o : odometry) {
        out << detail::fmt(t) << ',' << detail::fmt(o.v) << ',' << detail::fmt(o.omega) << '\n';
        t += o.dt;
    }
}

/// Converts timestamped odometry rows into per-step (v, omega, dt).
/// Row i covers the step from frame i to i+1; dt comes from consecutive
/// timestamps, the last row reusing the previous spacing.
inline std::vector<Odometry> to_steps(const std::vector<TimedOdometry>& rows) {
    std::vector<Odometry> steps;
    steps.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double dt;
        if (i + 1 < rows.size()) {
            dt = rows[i + 1].t - rows[i].t;
        } else if (rows.size() >= 2) {
            dt = rows[i].t - rows[i - 1].t;
        } else {
            throw LoadError("odometry: a single row has no timestamp spacing to infer dt");
        }
        if (dt <= 0.0) throw LoadError("odometry: timestamps must be strictly increasing");
        steps.push_back({rows[i].v, rows[i].omega, dt});
    }
    return steps;
}

// ---- truth CSV: frame,t_s,east_m,north_m,psi_rad ----------------------------

inline std::vector<TimedPose> load_truth(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "frame,t_s,east_m,north_m,psi_rad")
        throw LoadError(path + ": expected header 'frame,t_s,east_m,north_m,psi_rad'");
    std::vector<TimedPose> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto ctx = path + ":" + std::to_string(line_no);
        const auto fields = detail::split(line);
        if (fields.size() != 5) throw LoadError(ctx + ": expected 5 fields");
        TimedPose tp;
        tp.t = detail::parse_double(fields[1], ctx);
        tp.pose.east = detail::parse_double(fields[2], ctx);
        tp.pose.north = detail::parse_double(fields[3], ctx);
        tp.pose.heading = detail::parse_double(fields[4], ctx);
        rows.push_back(tp);
    }
    return rows;
}

inline void save_truth(const std::vector<TimedPose>& truth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError(path + ": cannot write");
    out << "frame,t_s,east_m,north_m,psi_rad\n";
    for (std::size_t i = 0; i < truth.size(); ++i)
        out << i << ',' << detail::fmt(truth[i].t) << ',' << detail::fmt(truth[i].pose.east)
            << ',' << detail::fmt(truth[i].pose.north) << ','
            << detail::fmt(truth[i].pose.heading) << '\n';
}

// ---- observations CSV: frame,u_px,label,group_width,pixel_count -------------

inline std::vector<std::vector<Observation>> load_observations(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::string line;
    if (!std::getline(in, line) ||
        detail::trim(line) != "frame,u_px,label,group_width,pixel_count")
        throw LoadError(path + ": expected header 'frame,u_px,label,group_width,pixel_count'");
    std::vector<std::vector<Observation>> frames;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto ctx = path + ":" + std::to_string(line_no);
        const auto fields = detail::split(line);
        if (fields.size() != 5) throw LoadError(ctx + ": expected 5 fields");
        const auto frame = detail::parse_int(fields[0], ctx);
        if (frame < 0) throw LoadError(ctx + ": negative frame index");
        Observation obs;
        obs.u = detail::parse_double(fields[1], ctx);
        const auto label = label_from_string(detail::trim(fields[2]));
        if (!label) throw LoadError(ctx + ": unknown label '" + detail::trim(fields[2]) + "'");
        obs.label = *label;
        obs.group_width = int(detail::parse_int(fields[3], ctx));
        obs.pixel_count = int(detail::parse_int(fields[4], ctx));
        if (std::size_t(frame) >= frames.size()) frames.resize(std::size_t(frame) + 1);
        frames[std::size_t(frame)].push_back(obs);
    }
    return frames;
}

inline void save_observations(const std::vector<std::vector<Observation>>& frames,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError(path + ": cannot write");
    out << "frame,u_px,label,group_width,pixel_count\n";
    for (std::size_t f = 0; f < frames.size(); ++f)
        for (const Observation& obs : frames[f])
            out << f << ',' << detail::fmt(obs.u) << ',' << to_string(obs.label) << ','
                << obs.group_width << ',' << obs.pixel_count << '\n';
}

// ---- trajectory CSV: frame,east_m,north_m,psi_rad,mode ----------------------

struct TrajectoryRow {
    Pose2 pose;
    std::string mode;  // "coarse" or "aligned"
};

inline void save_trajectory(const std::vector<TrajectoryRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError(path + ": cannot write");
    out << "frame,east_m,north_m,psi_rad,mode\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        out << i << ',' << detail::fmt(rows[i].pose.east) << ',' << detail::fmt(rows[i].pose.north)
            << ',' << detail::fmt(rows[i].pose.heading) << ',' << rows[i].mode << '\n';
}

inline std::vector<TrajectoryRow> load_trajectory(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "frame,east_m,north_m,psi_rad,mode")
        throw LoadError(path + ": expected header 'frame,east_m,north_m,psi_rad,mode'");
    std::vector<TrajectoryRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto ctx = path + ":" + std::to_string(line_no);
        const auto fields = detail::split(line);
        if (fields.size() != 5) throw LoadError(ctx + ": expected 5 fields");
        TrajectoryRow row;
        row.pose.east = detail::parse_double(fields[1], ctx);
        row.pose.north = detail::parse_double(fields[2], ctx);
        row.pose.heading = detail::parse_double(fields[3], ctx);
        row.mode = detail::trim(fields[4]);
        rows.push_back(row);
    }
    return rows;
}

// ---- flat key = value config ------------------------------------------------

inline std::map<std::string, std::string> load_config(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::map<std::string, std::string> config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw LoadError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
        config[detail::trim(trimmed.substr(0, eq))] = detail::trim(trimmed.substr(eq + 1));
    }
    return config;
}

}  // namespace poleloc
