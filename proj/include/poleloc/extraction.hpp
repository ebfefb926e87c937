#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "poleloc/core.hpp"

namespace poleloc {

/// Row-major grid of semantic class ids.
struct SegmentationMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> class_ids;  // width * height entries

    std::uint8_t at(int x, int y) const { return class_ids[std::size_t(y) * width + x]; }
};

using BinaryMask = SegmentationMask;  // same layout, values restricted to {0, 1}

/// Extracted pole observation: image column plus extraction support stats.
struct Observation {
    double u = 0.0;            // column center, half-pixel precision
    SemanticLabel label = SemanticLabel::Pole;
    int group_width = 1;       // pixels
    int pixel_count = 0;       // pole pixels inside the group
};

struct ExtractionParams {
    int c1 = 60;  // minimum pole pixels per column
    int c2 = 1;   // minimum group width
    int c3 = 15;  // maximum group width
    std::map<int, SemanticLabel> label_map;  // class id -> pole class

    ExtractionParams() { label_map = {{7, SemanticLabel::Pole}}; }
};

/// Marks pole classes as 1 and everything else as 0.
inline BinaryMask binarize(const SegmentationMask& mask, const ExtractionParams& params) {
    BinaryMask out;
    out.width = mask.width;
    out.height = mask.height;
    out.class_ids.resize(mask.class_ids.size());
    for (std::size_t i = 0; i < mask.class_ids.size(); ++i)
        out.class_ids[i] = params.label_map.count(mask.class_ids[i]) ? 1 : 0;
    return out;
}

/// Column-histogram pole extraction: count pole pixels per column, keep
/// columns with count >= c1, group consecutive kept columns, emit one
/// observation per group whose width lies in [c2, c3]. The observation
/// sits at the middle of the group; its label is the majority pole class
/// inside the group (ties to the smaller class id).
inline std::vector<Observation> extract_poles(const SegmentationMask& mask,
                                              const ExtractionParams& params) {
    const int w = mask.width;
    const int h = mask.height;
    std::vector<int> col_count(std::size_t(std::max(w, 0)), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (params.label_map.count(mask.at(x, y))) ++col_count[x];

    std::vector<Observation> out;
    int run_start = -1;
    auto flush = [&](int run_end) {  // run_end inclusive
        const int width = run_end - run_start + 1;
        if (width < params.c2 || width > params.c3) return;
        Observation obs;
        obs.u = 0.5 * (run_start + run_end);
        obs.group_width = width;
        std::map<int, int> class_pixels;
        for (int x = run_start; x <= run_end; ++x) {
            obs.pixel_count += col_count[x];
            for (int y = 0; y < h; ++y) {
                const int cid = mask.at(x, y);
                if (params.label_map.count(cid)) ++class_pixels[cid];
            }
        }
        int best_id = -1, best_n = -1;
        for (auto [cid, n] : class_pixels)
            if (n > best_n) { best_id = cid; best_n = n; }  // map order breaks ties low
        obs.label = params.label_map.at(best_id);
        out.push_back(obs);
    };
    for (int x = 0; x < w; ++x) {
        if (col_count[x] >= params.c1) {
            if (run_start < 0) run_start = x;
        } else if (run_start >= 0) {
            flush(x - 1);
            run_start = -1;
        }
    }
    if (run_start >= 0) flush(w - 1);
    return out;  // runs scanned left to right, already sorted by u
}

/// Reads a binary PGM (P5, maxval <= 255) whose pixel values are class ids.
inline SegmentationMask load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path + ": cannot open");

    auto next_token = [&]() -> std::string {
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {  // comment to end of line
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(char(c));
        }
        return tok;
    };

    if (next_token() != "P5") throw LoadError(path + ": not a binary PGM (P5)");
    SegmentationMask mask;
    try {
        mask.width = std::stoi(next_token());
        mask.height = std::stoi(next_token());
        const int maxval = std::stoi(next_token());
        if (mask.width <= 0 || mask.height <= 0)
            throw LoadError(path + ": bad dimensions");
        if (maxval <= 0 || maxval > 255)
            throw LoadError(path + ": maxval must be in [1, 255]");
    } catch (const std::invalid_argument&) {
        throw LoadError(path + ": malformed header");
    }
    mask.class_ids.resize(std::size_t(mask.width) * mask.height);
    in.read(reinterpret_cast<char*>(mask.class_ids.data()),
            std::streamsize(mask.class_ids.size()));
    if (std::size_t(in.gcount()) != mask.class_ids.size())
        throw LoadError(path + ": truncated pixel payload");
    return mask;
}

inline void save_mask(const SegmentationMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError(path + ": cannot write");
    out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(mask.class_ids.data()),
              std::streamsize(mask.class_ids.size()));
}

}  // namespace poleloc
