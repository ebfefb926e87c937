#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "poleloc/io.hpp"
#include "poleloc/pipeline.hpp"
#include "poleloc/simulator.hpp"

using namespace poleloc;
using Catch::Approx;

namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("odometry CSV round-trip and step conversion") {
    const std::vector<Odometry> steps{{5.0, 0.1, 0.1}, {4.5, -0.2, 0.1}, {4.0, 0.0, 0.1}};
    const auto path = temp_file("odo.csv");
    save_odometry(steps, 0.0, path.string());
    const auto rows = load_odometry(path.string());
    REQUIRE(rows.size() == 3);
    const auto recovered = to_steps(rows);
    REQUIRE(recovered.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(recovered[i].v == Approx(steps[i].v));
        CHECK(recovered[i].omega == Approx(steps[i].omega));
        CHECK(recovered[i].dt == Approx(0.1));
    }

    SECTION("a single odometry row cannot infer dt") {
        save_odometry({{1.0, 0.0, 0.1}}, 0.0, path.string());
        CHECK_THROWS_AS(to_steps(load_odometry(path.string())), LoadError);
    }
    SECTION("non-increasing timestamps are rejected") {
        std::ofstream out(path);
        out << "t_s,v_mps,omega_radps\n0.2,1,0\n0.1,1,0\n";
        out.close();
        CHECK_THROWS_AS(to_steps(load_odometry(path.string())), LoadError);
    }
}

TEST_CASE("observations CSV groups rows by frame") {
    std::vector<std::vector<Observation>> frames(3);
    frames[0].push_back({100.5, SemanticLabel::Pole, 3, 120});
    frames[0].push_back({300.0, SemanticLabel::Lamp, 2, 90});
    frames[2].push_back({42.0, SemanticLabel::TreeTrunk, 4, 200});
    const auto path = temp_file("obs.csv");
    save_observations(frames, path.string());
    const auto loaded = load_observations(path.string());
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].size() == 2);
    CHECK(loaded[1].empty());
    REQUIRE(loaded[2].size() == 1);
    CHECK(loaded[2][0].u == Approx(42.0));
    CHECK(loaded[2][0].label == SemanticLabel::TreeTrunk);
    CHECK(loaded[0][0].group_width == 3);
    CHECK(loaded[0][0].pixel_count == 120);
}

TEST_CASE("truth and trajectory CSV round-trips") {
    std::vector<TimedPose> truth;
    for (int i = 0; i < 5; ++i) truth.push_back({0.1 * i, {double(i), -double(i), 0.01 * i}});
    const auto truth_path = temp_file("truth.csv");
    save_truth(truth, truth_path.string());
    const auto loaded = load_truth(truth_path.string());
    REQUIRE(loaded.size() == 5);
    CHECK(loaded[3].pose.east == Approx(3.0));
    CHECK(loaded[3].t == Approx(0.3));

    std::vector<TrajectoryRow> rows{{{1.0, 2.0, 0.3}, "coarse"}, {{1.5, 2.5, 0.4}, "aligned"}};
    const auto traj_path = temp_file("traj.csv");
    save_trajectory(rows, traj_path.string());
    const auto loaded_rows = load_trajectory(traj_path.string());
    REQUIRE(loaded_rows.size() == 2);
    CHECK(loaded_rows[1].mode == "aligned");
    CHECK(loaded_rows[1].pose.north == Approx(2.5));
}

TEST_CASE("flat config parser") {
    const auto path = temp_file("cfg.txt");
    {
        std::ofstream out(path);
        out << "# comment\n"
            << "particles = 500\n"
            << "  seed=7\n"
            << "\n"
            << "out = /tmp/run\n";
    }
    const auto cfg = load_config(path.string());
    CHECK(cfg.at("particles") == "500");
    CHECK(cfg.at("seed") == "7");
    CHECK(cfg.at("out") == "/tmp/run");

    SECTION("missing '=' is an error") {
        std::ofstream out(path);
        out << "particles 500\n";
        out.close();
        CHECK_THROWS_AS(load_config(path.string()), LoadError);
    }
}

TEST_CASE("map CSV byte budget stays compact") {
    // 500 poles must fit under 16 KB (~32 bytes per pole)
    WorldConfig cfg;
    cfg.pole_count = 500;
    cfg.arena = {-500, 500, -500, 500};
    cfg.seed = 3;
    const auto [map, truth] = generate_world(cfg);
    const auto path = temp_file("bigmap.csv");
    // budget-conscious writer is exercised through save_map
    save_map(map, path.string());
    const auto loaded = load_map(path.string());
    CHECK(loaded.size() == 500);
    CHECK(fs::file_size(path) < 16 * 1024);
}

TEST_CASE("noise-free pipeline closure through the in-memory runner") {
    WorldConfig world;
    world.seed = 21;
    world.duration = 10.0;
    world.pole_count = 30;
    const auto [map, truth] = generate_world(world);
    Rng odo_rng(mix_seed(world.seed, 0x0d0e));
    const auto odometry = synthesize_odometry(truth, {}, odo_rng);

    RunParams params;
    params.particle_count = 1;
    params.seed = 5;
    params.prior.pose = truth.front().pose;
    params.intrinsics = {500.0, 320.0, 640, 480};
    std::vector<std::vector<Observation>> frames;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        Rng rng(mix_seed(world.seed, 0x0b5e, i));
        frames.push_back(synthesize_observations(truth[i].pose, map, params.intrinsics,
                                                 {0.0, 1.0, 0.0}, world.label_mix, rng));
    }
    const auto result = run_localization(map, odometry, frames, params);
    REQUIRE(result.trajectory.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(std::abs(result.trajectory[i].pose.east - truth[i].pose.east) < 1e-6);
        CHECK(std::abs(result.trajectory[i].pose.north - truth[i].pose.north) < 1e-6);
    }
}
