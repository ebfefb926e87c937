// End-to-end checks of the command-line tool; the binary path arrives as
// the test's first argument.

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "poleloc/io.hpp"

using namespace poleloc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;

int run(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_scenario(const fs::path& path, const std::string& extra = "") {
    std::ofstream out(path);
    out << "pole_count = 25\n"
        << "duration_s = 8\n"
        << "seed = 11\n"
        << "sigma_px = 1.0\n"
        << "p_d = 0.95\n"
        << "clutter_rate = 0.5\n"
        << "arena_min_east_m = -80\narena_max_east_m = 80\n"
        << "arena_min_north_m = -80\narena_max_north_m = 80\n"
        << extra;
}

}  // namespace

TEST_CASE("simulate writes the four standard files") {
    const auto dir = fresh_dir("cli_sim");
    const auto scenario = dir / "scenario.txt";
    write_scenario(scenario);
    REQUIRE(run("simulate --config " + scenario.string() + " --out " + dir.string()) == 0);
    for (const char* name : {"map.csv", "truth.csv", "odometry.csv", "observations.csv"})
        CHECK(fs::exists(dir / name));
    const auto truth = load_truth((dir / "truth.csv").string());
    CHECK(truth.size() == 81);  // 8 s at 10 Hz, inclusive of frame 0
    CHECK(load_odometry((dir / "odometry.csv").string()).size() == truth.size() - 1);
}

TEST_CASE("simulate is byte-deterministic under a fixed seed") {
    const auto dir_a = fresh_dir("cli_sim_a");
    const auto dir_b = fresh_dir("cli_sim_b");
    const auto scenario = dir_a / "scenario.txt";
    write_scenario(scenario);
    REQUIRE(run("simulate --config " + scenario.string() + " --out " + dir_a.string()) == 0);
    REQUIRE(run("simulate --config " + scenario.string() + " --out " + dir_b.string()) == 0);
    for (const char* name : {"map.csv", "truth.csv", "odometry.csv", "observations.csv"})
        CHECK(read_file(dir_a / name) == read_file(dir_b / name));
}

TEST_CASE("simulate with pole_count = 0 writes an empty but valid map") {
    const auto dir = fresh_dir("cli_sim_empty");
    const auto scenario = dir / "scenario.txt";
    write_scenario(scenario, "pole_count = 0\n");
    REQUIRE(run("simulate --config " + scenario.string() + " --out " + dir.string()) == 0);
    CHECK(load_map((dir / "map.csv").string()).empty());
}

TEST_CASE("localize over simulated files is deterministic and evaluable") {
    const auto dir = fresh_dir("cli_loc");
    const auto scenario = dir / "scenario.txt";
    write_scenario(scenario);
    REQUIRE(run("simulate --config " + scenario.string() + " --out " + dir.string()) == 0);

    const auto truth = load_truth((dir / "truth.csv").string());
    std::ostringstream args;
    args << "localize --map " << (dir / "map.csv").string() << " --odometry "
         << (dir / "odometry.csv").string() << " --observations "
         << (dir / "observations.csv").string() << " --particles 200 --seed 4"
         << " --alpha1 0.05 --alpha3 0.05 --init_east_m " << truth[0].pose.east
         << " --init_north_m " << truth[0].pose.north << " --init_psi_rad "
         << truth[0].pose.heading << " --init_sigma_trans_m 0.5 --init_sigma_rot_rad 0.05";

    const auto out_a = fresh_dir("cli_loc_a");
    const auto out_b = fresh_dir("cli_loc_b");
    REQUIRE(run(args.str() + " --out " + out_a.string()) == 0);
    REQUIRE(run(args.str() + " --out " + out_b.string()) == 0);
    CHECK(read_file(out_a / "trajectory.csv") == read_file(out_b / "trajectory.csv"));

    const auto rows = load_trajectory((out_a / "trajectory.csv").string());
    REQUIRE(rows.size() == truth.size());

    // per-frame JSON-lines log exists and parses
    std::ifstream log(out_a / "frames.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(log, line)) {
        const auto j = json::parse(line);
        CHECK(j.contains("n_eff"));
        CHECK(j.contains("mode"));
        ++lines;
    }
    CHECK(lines == rows.size());

    SECTION("evaluate emits the metrics JSON") {
        const auto eval_dir = fresh_dir("cli_eval");
        REQUIRE(run("evaluate --estimate " + (out_a / "trajectory.csv").string() + " --truth " +
                    (dir / "truth.csv").string() + " --out " + eval_dir.string() +
                    " --per_frame_errors 1") == 0);
        const auto j = json::parse(read_file(eval_dir / "metrics.json"));
        CHECK(j.contains("rmse_trans_m"));
        CHECK(j.contains("rmse_rot_deg"));
        CHECK(j.contains("recall_trans"));
        CHECK(j.contains("recall_pose"));
        CHECK(j["frame_count"].get<std::size_t>() == rows.size());
        CHECK(fs::exists(eval_dir / "errors.csv"));
        CHECK(j["rmse_trans_m"].get<double>() < 5.0);  // sanity, not a benchmark
    }
    SECTION("evaluate rejects mismatched lengths") {
        const auto eval_dir = fresh_dir("cli_eval_bad");
        auto short_truth = truth;
        short_truth.pop_back();
        save_truth(short_truth, (eval_dir / "short.csv").string());
        CHECK(run("evaluate --estimate " + (out_a / "trajectory.csv").string() + " --truth " +
                  (eval_dir / "short.csv").string() + " --out " + eval_dir.string()) == 1);
    }
}

TEST_CASE("localize single-frame input gives a single-row output") {
    const auto dir = fresh_dir("cli_loc_single");
    {
        std::ofstream map(dir / "map.csv");
        map << "id,east_m,north_m,label\n1,0.00,20.00,Pole\n";
        std::ofstream odo(dir / "odometry.csv");
        odo << "t_s,v_mps,omega_radps\n0.0,1.0,0.0\n0.1,1.0,0.0\n";
        std::ofstream obs(dir / "observations.csv");
        obs << "frame,u_px,label,group_width,pixel_count\n0,320,Pole,3,100\n";
    }
    const auto out = fresh_dir("cli_loc_single_out");
    // two odometry rows -> 3 frames; observations only cover frame 0
    REQUIRE(run("localize --map " + (dir / "map.csv").string() + " --odometry " +
                (dir / "odometry.csv").string() + " --observations " +
                (dir / "observations.csv").string() + " --particles 10 --out " + out.string()) ==
            0);
    CHECK(load_trajectory((out / "trajectory.csv").string()).size() == 3);
}

TEST_CASE("extract over a mask directory") {
    const auto dir = fresh_dir("cli_extract");
    const auto masks = dir / "masks";
    fs::create_directories(masks);
    // three fixtures mirroring the extraction unit examples
    auto write_mask = [&](const std::string& name, int col_start, int col_end, int pixels) {
        SegmentationMask mask;
        mask.width = 640;
        mask.height = 100;
        mask.class_ids.assign(640 * 100, 0);
        for (int x = col_start; x <= col_end; ++x)
            for (int y = 0; y < pixels; ++y) mask.class_ids[std::size_t(y) * 640 + x] = 7;
        save_mask(mask, (masks / name).string());
    };
    write_mask("frame_000.pgm", 10, 12, 70);   // accepted at u = 11
    write_mask("frame_001.pgm", 40, 59, 100);  // rejected: width 20 > c3
    write_mask("frame_002.pgm", 80, 80, 30);   // rejected: 30 < c1

    const auto out = fresh_dir("cli_extract_out");
    REQUIRE(run("extract --mask_dir " + masks.string() + " --out " + out.string()) == 0);
    const auto frames = load_observations((out / "observations.csv").string());
    REQUIRE(frames.size() == 1);  // trailing empty frames have no rows
    REQUIRE(frames[0].size() == 1);
    CHECK(frames[0][0].u == 11.0);

    SECTION("empty mask dir yields a header-only CSV") {
        const auto empty = fresh_dir("cli_extract_empty");
        fs::create_directories(empty / "masks");
        REQUIRE(run("extract --mask_dir " + (empty / "masks").string() + " --out " +
                    empty.string()) == 0);
        CHECK(load_observations((empty / "observations.csv").string()).empty());
    }
    SECTION("a non-PGM file is an input error naming it") {
        std::ofstream(masks / "stray.txt") << "not a mask";
        CHECK(run("extract --mask_dir " + masks.string() + " --out " + out.string()) == 1);
        fs::remove(masks / "stray.txt");
    }
}

TEST_CASE("input errors exit with code 1") {
    CHECK(run("localize --map /nonexistent.csv --odometry /nonexistent.csv "
              "--observations /nonexistent.csv --out /tmp/cli_err") == 1);
    CHECK(run("evaluate --estimate /nonexistent.csv --truth /nonexistent.csv "
              "--out /tmp/cli_err") == 1);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <cli-binary>\n", argv[0]);
        return 2;
    }
    g_cli = argv[1];
    Catch::Session session;
    return session.run(1, argv);
}
