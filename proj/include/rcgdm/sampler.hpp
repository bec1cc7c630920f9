// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "rcgdm/oracle.hpp"
#include "rcgdm/score.hpp"

namespace rcgdm {

struct SampleBatch {
    Matrix X;  // n x D
    double a = 0.0;
    DiffusionSchedule schedule;
    std::string score_id;
    std::uint64_t seed = 0;
};

/// Rows are simulated in fixed chunks of this size; chunk c draws all of its
/// randomness from derive_seed(derive_seed(seed, stream::sampler), c), so the
/// output does not depend on how chunks are spread over workers.
inline constexpr Eigen::Index kSamplerChunk = 256;

/// Euler-Maruyama discretization of the conditional backward SDE
///   x <- x + eta (x/2 + s(x, a, T - k eta)) + sqrt(eta) eps,
/// started from N(0, I_D) and stopped at forward time t0. When T - t0 is not
/// a multiple of eta a final step of the remaining length is taken, with the
/// score evaluated at its left endpoint.
SampleBatch run_backward(const ScoreFunction& score, double a, Eigen::Index n, const DiffusionSchedule& schedule,
                         std::uint64_t seed, int workers = 1);

struct StepPlan {
    long long full_steps;
    double remainder;  // 0 when there is no partial step
};

StepPlan plan_steps(const DiffusionSchedule& schedule);

}  // namespace rcgdm
