// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcgdm/oracle.hpp"
#include "rcgdm/score.hpp"
#include "rcgdm/training.hpp"
#include "rcgdm/world.hpp"

namespace rcgdm {

/// Everything one experiment needs. Defaults reproduce the desk-scale
/// simulation study: D = 64, d = 16, n1 = 65536, n2 = 8192, lambda = 1,
/// nu = 1/sqrt(D), Adam(3e-4), batch 32, 10 epochs, 2048 evaluation samples,
/// 5 seeds.
struct RunConfig {
    // [world]
    WorldConfig world;
    std::vector<double> sigma_diag;  // empty -> identity

    // [data]
    Eigen::Index n1 = 65536;
    Eigen::Index n2 = 8192;
    double noise_sigma = 0.1;
    double nu = 0.0;  // <= 0 -> 1/sqrt(D)
    double lambda = 1.0;

    // [schedule]
    DiffusionSchedule schedule{10.0, 0.01, 0.005};

    // [score]
    HeadKind variant = HeadKind::mlp;
    std::vector<Eigen::Index> hidden{128, 128};

    // [train]
    // 8e-5 leaves both heads far from converged after 10 epochs.
    TrainConfig train{.learning_rate = 3e-4};

    // [sweep]
    std::vector<double> a_grid{0.0, 1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    Eigen::Index n_eval = 2048;
    Eigen::Index n_ref = 8192;
    Eigen::Index shift_rows = 1024;
    Eigen::Index shift_inner = 8;
    int bins = 50;
    int workers = 1;

    // [output]
    std::string out_dir;  // empty -> $RCGDM_OUT or ./runs
    bool csv = false;

    double resolved_nu() const;
    void validate() const;
};

/// Parses the INI-style config: "[section]" headers, "key = value" lines,
/// '#' comments, comma-separated lists. Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const RunConfig& config);
nlohmann::json to_json(const RunConfig& config);

/// Directory for run artifacts: --out, then [output] dir, then $RCGDM_OUT,
/// then ./runs.
std::filesystem::path resolve_out_dir(const RunConfig& config, const std::string& cli_out);

}  // namespace rcgdm
