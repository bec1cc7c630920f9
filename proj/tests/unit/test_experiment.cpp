// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <sstream>

#include "helpers.hpp"
#include "rcgdm/experiment.hpp"
#include "rcgdm/io.hpp"

using namespace rcgdm;

namespace {

RunConfig tiny() { return load_config(std::string(RCGDM_TEST_DATA) + "/tiny.ini"); }

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

#ifdef RCGDM_CLI_PATH
int cli(const std::string& args) {
    const std::string cmd = std::string(RCGDM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST_CASE("format_value and cell seeds") {
    CHECK(format_value(2.0) == "2");
    CHECK(format_value(0.5) == "0.5");
    CHECK(format_value(-1.25) == "-1.25");
    CHECK(cell_seed(0, 2.0) == cell_seed(0, 2.0));
    CHECK(cell_seed(0, 2.0) != cell_seed(0, 4.0));
    CHECK(cell_seed(0, 2.0) != cell_seed(1, 2.0));
    RunLayout L{"/r"};
    CHECK(L.samples(3, 0.5) == fs::path("/r/seed_3/samples_a0.5.bin"));
}

TEST_CASE("pipeline end to end on a tiny config") {
    const auto dir = testing::scratch("pipeline");
    const RunConfig config = tiny();
    std::ostringstream log;
    {
        Experiment exp(config, dir, log);
        CHECK(exp.pipeline({}));
    }

    const auto rows = lines(io::read_file(dir / "sweep.csv"));
    REQUIRE(rows.size() == 1 + 2 * 2);
    // Golden schema: changing the sweep columns must be deliberate.
    CHECK(rows[0] + "\n" == io::read_file(std::string(RCGDM_TEST_DATA) + "/sweep_schema.golden"));
    CHECK(rows[1].rfind("0,0,", 0) == 0);
    CHECK(rows[4].rfind("2,1,", 0) == 0);

    const auto m = nlohmann::json::parse(io::read_file(dir / "seed_0" / "metrics_a2.json"));
    for (const char* key : {"subspace_angle", "off_support_mean", "avg_reward", "subopt", "e1", "e2", "e3",
                            "distro_shift_surrogate", "distro_shift_mc", "coverage_trace", "moment_discrepancy",
                            "histogram"})
        CHECK_MESSAGE(m.contains(key), key);
    CHECK(m["a"] == 2.0);
    CHECK(io::load_matrix(dir / "seed_0" / "samples_a2.bin").rows() == config.n_eval);

    const auto manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
    CHECK(manifest["complete"] == true);
    CHECK(manifest["config_hash"] == config_hash(config));
    CHECK(manifest["loss_traces"].contains("0"));
    for (const char* stage : {"gen-data", "train-reward", "train-score", "sample"})
        CHECK_MESSAGE(manifest["timings"].contains(std::string("seed_1/") + stage), stage);

    SUBCASE("rerun is a no-op, --force recomputes identically") {
        const std::string before = io::read_file(dir / "seed_1" / "samples_a0.bin");
        Experiment again(config, dir, log);
        CHECK_FALSE(again.pipeline({}));
        CHECK(again.pipeline({.force = true}));
        CHECK(io::read_file(dir / "seed_1" / "samples_a0.bin") == before);
    }
    SUBCASE("a changed config is not considered complete") {
        RunConfig other = config;
        other.n_eval = 32;
        Experiment changed(other, dir, log);
        CHECK_FALSE(changed.manifest().complete());
        CHECK(config_hash(other) != config_hash(config));
    }
    SUBCASE("tampering is detected") {
        Experiment exp(config, dir, log);
        CHECK(exp.manifest().verify().empty());
        io::write_atomic(dir / "seed_0" / "curated_y.bin", "tampered");
        const auto problems = exp.manifest().verify();
        REQUIRE(problems.size() == 1);
        CHECK(problems[0].find("curated_y.bin") != std::string::npos);
    }
    SUBCASE("figures") {
        Experiment exp(config, dir, log);
        exp.figures();
        const auto fig = dir / "figures";
        for (const char* f : {"curve_avg_reward.csv", "curve_avg_reward.svg", "curve_distribution_shift.csv",
                              "curve_off_support.csv", "hist_a0.csv", "hist_a2.csv", "hist_summary.csv",
                              "histograms.svg"})
            CHECK_MESSAGE(fs::exists(fig / f), f);
        const auto curve = lines(io::read_file(fig / "curve_avg_reward.csv"));
        CHECK(curve[0] == "a,mean,std,lower,upper");
        CHECK(curve.size() == 3);
        const auto h0 = lines(io::read_file(fig / "hist_a0.csv"));
        const auto h2 = lines(io::read_file(fig / "hist_a2.csv"));
        CHECK(h0.size() == 1 + 10);
        // Pooled range: both histograms share their bin edges.
        CHECK(h0[1].substr(0, h0[1].rfind(',')) == h2[1].substr(0, h2[1].rfind(',')));
    }
}

TEST_CASE("shipped smoke config runs quickly and emits a parseable sweep") {
    const auto dir = testing::scratch("smoke");
    const RunConfig config = load_config(std::string(RCGDM_TEST_DATA) + "/../../configs/smoke.ini");
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    Experiment(config, dir, log).pipeline({});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 120.0);
    const auto rows = lines(io::read_file(dir / "sweep.csv"));
    REQUIRE(rows.size() == 1 + config.a_grid.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::stringstream ss(rows[i]);
        std::size_t fields = 0;
        for (std::string item; std::getline(ss, item, ',');) {
            CHECK_NOTHROW((void)std::stod(item));
            ++fields;
        }
        CHECK(fields == sweep_columns().size());
    }
}

TEST_CASE("single seed gives zero-width error bars") {
    const auto dir = testing::scratch("one_seed");
    RunConfig config = tiny();
    config.seeds = {5};
    config.a_grid = {1.0};
    std::ostringstream log;
    Experiment exp(config, dir, log);
    exp.pipeline({});
    exp.figures();
    const auto curve = lines(io::read_file(dir / "figures" / "curve_off_support.csv"));
    REQUIRE(curve.size() == 2);
    std::vector<std::string> f;
    std::stringstream ss(curve[1]);
    for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
    CHECK(f[2] == "0");
    CHECK(f[3] == f[1]);
    CHECK(f[4] == f[1]);
}

TEST_CASE("dry run writes only the manifest; figures without samples fail") {
    const auto dir = testing::scratch("dry");
    std::ostringstream log;
    Experiment exp(tiny(), dir, log);
    CHECK(exp.pipeline({.dry_run = true}));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK_FALSE(fs::exists(dir / "seed_0"));
    const auto manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
    CHECK(manifest["dry_run"] == true);
    CHECK(manifest["complete"] == false);
    try {
        exp.figures();
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(std::string(e.what()).find("rcgdm pipeline") != std::string::npos);
    }
}

#ifdef RCGDM_CLI_PATH
TEST_CASE("command-line exit codes") {
    const auto dir = testing::scratch("cli");
    const std::string cfg = std::string(RCGDM_TEST_DATA) + "/tiny.ini";
    const auto bad = dir / "bad.ini";
    io::write_atomic(bad, "[world]\nD = 4\nd = 9\n");

    CHECK(cli("") == 2);
    CHECK(cli("pipeline --bogus") == 2);
    CHECK(cli("pipeline --config " + bad.string() + " --out " + dir.string()) == 2);
    CHECK(cli("pipeline --config /nonexistent.ini") == 2);
    CHECK(cli("sample --config " + cfg + " --out " + (dir / "empty").string()) == 3);
    CHECK(cli("figures --config " + cfg + " --out " + (dir / "empty").string()) == 3);
    CHECK(cli("validate --check no-such-check") == 2);
    CHECK(cli("validate --check trace-identity") == 0);
    CHECK(cli("pipeline --dry-run --config " + cfg + " --out " + (dir / "dry").string()) == 0);
    CHECK(fs::exists(dir / "dry" / "manifest.json"));

    // Stage-by-stage equals the pipeline for one seed.
    const std::string run = " --config " + cfg + " --seed 0 --out " + (dir / "staged").string();
    CHECK(cli("gen-data" + run) == 0);
    CHECK(cli("train-reward" + run) == 0);
    CHECK(cli("train-score" + run) == 0);
    CHECK(cli("sample" + run) == 0);
    CHECK(cli("pipeline" + run.substr(0, run.find(" --out")) + " --out " + (dir / "piped").string()) == 0);
    CHECK(io::read_file(dir / "staged" / "seed_0" / "samples_a2.bin") ==
          io::read_file(dir / "piped" / "seed_0" / "samples_a2.bin"));

    ::setenv("RCGDM_OUT", (dir / "env").string().c_str(), 1);
    CHECK(cli("pipeline --dry-run --config " + cfg) == 0);
    ::unsetenv("RCGDM_OUT");
    CHECK(fs::exists(dir / "env" / "manifest.json"));

    // A corrupted artifact fails the artifacts check with exit code 4.
    io::write_atomic(dir / "staged" / "seed_0" / "ridge.model", "x");
    CHECK(cli("validate --check artifacts --out " + (dir / "staged").string()) == 4);
}
#endif
