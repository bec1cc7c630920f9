// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace rcgdm::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct CheckContext {
    std::uint64_t seed = 0;
    std::filesystem::path run_dir;  // used by the artifact check only
};

// Oracle and property checks run by `rcgdm validate`. Each compares library
// output against an independent reference (quadrature, Monte Carlo, dense
// linear algebra or finite differences).
CheckResult score_quadrature(const CheckContext& ctx);
CheckResult objective_equivalence(const CheckContext& ctx);
CheckResult sampler_moments(const CheckContext& ctx);
CheckResult trace_identity(const CheckContext& ctx);
CheckResult latent_moments(const CheckContext& ctx);
CheckResult gradient_check(const CheckContext& ctx);
/// Re-hashes every artifact of the manifest in run_dir and loads each model
/// file. Passes vacuously when run_dir holds no manifest.
CheckResult artifacts(const CheckContext& ctx);

struct Check {
    std::string name;
    std::function<CheckResult(const CheckContext&)> run;
};

const std::vector<Check>& registry();

/// Runs the named checks (all when names is empty). Unknown names throw
/// ConfigError. Exceptions thrown by a check turn into a failed result.
std::vector<CheckResult> run(const std::vector<std::string>& names, const CheckContext& ctx);

}  // namespace rcgdm::checks
