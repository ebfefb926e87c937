#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "poleloc/extraction.hpp"

using namespace poleloc;
using Catch::Approx;

namespace {

SegmentationMask make_mask(int width, int height) {
    SegmentationMask mask;
    mask.width = width;
    mask.height = height;
    mask.class_ids.assign(std::size_t(width) * height, 0);
    return mask;
}

void fill_column(SegmentationMask& mask, int x, int pole_pixels, std::uint8_t class_id = 7) {
    for (int y = 0; y < pole_pixels; ++y)
        mask.class_ids[std::size_t(y) * mask.width + x] = class_id;
}

}  // namespace

TEST_CASE("binarize marks pole classes") {
    ExtractionParams params;
    params.label_map = {{7, SemanticLabel::Pole}, {9, SemanticLabel::TreeTrunk}};

    auto mask = make_mask(8, 4);
    SECTION("all background stays zero") {
        const auto bin = binarize(mask, params);
        for (auto v : bin.class_ids) CHECK(v == 0);
    }
    SECTION("single pole pixel") {
        mask.class_ids[5] = 7;
        const auto bin = binarize(mask, params);
        CHECK(bin.class_ids[5] == 1);
        CHECK(std::count(bin.class_ids.begin(), bin.class_ids.end(), 1) == 1);
    }
    SECTION("union of all mapped classes") {
        mask.class_ids[0] = 7;
        mask.class_ids[1] = 9;
        mask.class_ids[2] = 3;  // unmapped
        const auto bin = binarize(mask, params);
        CHECK(bin.class_ids[0] == 1);
        CHECK(bin.class_ids[1] == 1);
        CHECK(bin.class_ids[2] == 0);
    }
}

TEST_CASE("extract_poles fixture examples") {
    ExtractionParams params;  // defaults c1=60, c2=1, c3=15, {7 -> Pole}

    SECTION("columns 10-12 with 70 pixels each give one observation at u=11") {
        auto mask = make_mask(640, 100);
        for (int x = 10; x <= 12; ++x) fill_column(mask, x, 70);
        const auto observations = extract_poles(mask, params);
        REQUIRE(observations.size() == 1);
        CHECK(observations[0].u == Approx(11.0));
        CHECK(observations[0].group_width == 3);
        CHECK(observations[0].pixel_count == 210);
        CHECK(observations[0].label == SemanticLabel::Pole);
    }
    SECTION("a 20-wide group is rejected by c3") {
        auto mask = make_mask(640, 120);
        for (int x = 40; x <= 59; ++x) fill_column(mask, x, 100);
        CHECK(extract_poles(mask, params).empty());
    }
    SECTION("a 30-pixel column is rejected by c1") {
        auto mask = make_mask(640, 100);
        fill_column(mask, 80, 30);
        CHECK(extract_poles(mask, params).empty());
    }
}

TEST_CASE("extract_poles half-pixel center for even-width groups") {
    ExtractionParams params;
    auto mask = make_mask(640, 100);
    for (int x = 10; x <= 13; ++x) fill_column(mask, x, 70);
    const auto observations = extract_poles(mask, params);
    REQUIRE(observations.size() == 1);
    CHECK(observations[0].u == Approx(11.5));
}

TEST_CASE("mixed-class groups take the majority label, ties to smaller class id") {
    ExtractionParams params;
    params.label_map = {{7, SemanticLabel::Pole}, {9, SemanticLabel::TreeTrunk}};
    auto mask = make_mask(640, 100);
    SECTION("majority wins") {
        fill_column(mask, 10, 70, 7);
        fill_column(mask, 11, 70, 9);
        fill_column(mask, 12, 70, 9);
        const auto observations = extract_poles(mask, params);
        REQUIRE(observations.size() == 1);
        CHECK(observations[0].label == SemanticLabel::TreeTrunk);
    }
    SECTION("exact tie goes to the smaller class id") {
        fill_column(mask, 10, 70, 9);
        fill_column(mask, 11, 70, 7);
        const auto observations = extract_poles(mask, params);
        REQUIRE(observations.size() == 1);
        CHECK(observations[0].label == SemanticLabel::Pole);
    }
}

TEST_CASE("groups touching the image border are not special-cased") {
    ExtractionParams params;
    auto mask = make_mask(640, 100);
    fill_column(mask, 0, 70);
    fill_column(mask, 639, 70);
    const auto observations = extract_poles(mask, params);
    REQUIRE(observations.size() == 2);
    CHECK(observations[0].u == Approx(0.0));
    CHECK(observations[1].u == Approx(639.0));
}

TEST_CASE("extraction is shift-invariant away from borders") {
    ExtractionParams params;
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto mask = make_mask(400, 100);
        const int base = 50 + int(rng() % 100);
        const int width = 1 + int(rng() % 5);
        const int pixels = 60 + int(rng() % 40);
        for (int x = base; x < base + width; ++x) fill_column(mask, x, pixels);

        const int shift = 1 + int(rng() % 50);
        auto shifted = make_mask(400, 100);
        for (int x = base; x < base + width; ++x) fill_column(shifted, x + shift, pixels);

        const auto a = extract_poles(mask, params);
        const auto b = extract_poles(shifted, params);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(b[i].u == Approx(a[i].u + shift));
    }
}

TEST_CASE("observation count is bounded by width / c2") {
    ExtractionParams params;
    auto mask = make_mask(200, 100);
    for (int x = 0; x < 200; x += 2) fill_column(mask, x, 70);
    const auto observations = extract_poles(mask, params);
    CHECK(observations.size() <= std::size_t(mask.width / params.c2));
}

TEST_CASE("PGM loader") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path();

    SECTION("4x4 P5 of zeros") {
        const auto path = dir / "zeros.pgm";
        {
            std::ofstream out(path, std::ios::binary);
            out << "P5\n4 4\n255\n";
            const char zeros[16] = {};
            out.write(zeros, sizeof zeros);
        }
        const auto mask = load_mask(path.string());
        CHECK(mask.width == 4);
        CHECK(mask.height == 4);
        for (auto v : mask.class_ids) CHECK(v == 0);
    }
    SECTION("truncated payload") {
        const auto path = dir / "trunc.pgm";
        {
            std::ofstream out(path, std::ios::binary);
            out << "P5\n4 4\n255\n";
            const char zeros[5] = {};
            out.write(zeros, sizeof zeros);
        }
        CHECK_THROWS_AS(load_mask(path.string()), LoadError);
    }
    SECTION("ASCII P2 rejected") {
        const auto path = dir / "ascii.pgm";
        {
            std::ofstream out(path);
            out << "P2\n2 2\n255\n0 0 0 0\n";
        }
        CHECK_THROWS_AS(load_mask(path.string()), LoadError);
    }
    SECTION("round-trip via save_mask") {
        auto mask = make_mask(6, 3);
        mask.class_ids[7] = 7;
        const auto path = dir / "roundtrip.pgm";
        save_mask(mask, path.string());
        const auto loaded = load_mask(path.string());
        CHECK(loaded.class_ids == mask.class_ids);
    }
}
