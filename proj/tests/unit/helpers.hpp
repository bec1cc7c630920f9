// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "rcgdm/types.hpp"
#include "rcgdm/world.hpp"

namespace testing {

inline rcgdm::SubspaceWorld world(Eigen::Index D, Eigen::Index d, std::uint64_t seed = 7,
                                  std::optional<rcgdm::Matrix> Sigma = std::nullopt) {
    rcgdm::WorldConfig cfg;
    cfg.D = D;
    cfg.d = d;
    cfg.Sigma = std::move(Sigma);
    return rcgdm::make_world(cfg, seed);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("rcgdm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double max_abs(const rcgdm::Matrix& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace testing
