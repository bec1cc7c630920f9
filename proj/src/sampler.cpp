// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/sampler.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rcgdm {

StepPlan plan_steps(const DiffusionSchedule& schedule) {
    const double span = schedule.T - schedule.t0;
    StepPlan plan;
    plan.full_steps = static_cast<long long>(std::floor(span / schedule.eta + 1e-9));
    plan.remainder = span - static_cast<double>(plan.full_steps) * schedule.eta;
    if (plan.remainder < 1e-12 * std::max(1.0, schedule.T)) plan.remainder = 0.0;
    return plan;
}

namespace {

void fill_normal(Matrix& M, Rng& rng) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rng.normal();
}

void euler_step(const ScoreFunction& score, Matrix& X, Matrix& noise, double a, double t, double dt, Rng& rng,
                long long step) {
    const Matrix S = score.evaluate_at(X, a, t);
    fill_normal(noise, rng);
    X += dt * (0.5 * X + S) + std::sqrt(dt) * noise;
    if (!X.allFinite())
        throw SamplerDivergence("run_backward: non-finite state at step " + std::to_string(step), step);
}

Matrix simulate_chunk(const ScoreFunction& score, double a, Eigen::Index rows, const DiffusionSchedule& schedule,
                      const StepPlan& plan, std::uint64_t chunk_seed) {
    Rng rng(chunk_seed);
    Matrix X(rows, score.dim());
    fill_normal(X, rng);
    Matrix noise(rows, score.dim());
    for (long long k = 0; k < plan.full_steps; ++k)
        euler_step(score, X, noise, a, schedule.T - static_cast<double>(k) * schedule.eta, schedule.eta, rng, k);
    if (plan.remainder > 0.0)
        euler_step(score, X, noise, a, schedule.T - static_cast<double>(plan.full_steps) * schedule.eta,
                   plan.remainder, rng, plan.full_steps);
    return X;
}

}  // namespace

SampleBatch run_backward(const ScoreFunction& score, double a, Eigen::Index n, const DiffusionSchedule& schedule,
                         std::uint64_t seed, int workers) {
    schedule.validate();
    if (n < 1) throw ValidationError("run_backward: n must be >= 1");
    if (!std::isfinite(a)) throw ValidationError("run_backward: target value must be finite");

    const StepPlan plan = plan_steps(schedule);
    const std::uint64_t base = derive_seed(seed, stream::sampler);
    const Eigen::Index chunks = (n + kSamplerChunk - 1) / kSamplerChunk;

    SampleBatch batch;
    batch.X.resize(n, score.dim());
    batch.a = a;
    batch.schedule = schedule;
    batch.score_id = score.identity();
    batch.seed = seed;

    auto run_chunk = [&](Eigen::Index c) {
        const Eigen::Index begin = c * kSamplerChunk;
        const Eigen::Index rows = std::min(kSamplerChunk, n - begin);
        batch.X.middleRows(begin, rows) =
            simulate_chunk(score, a, rows, schedule, plan, derive_seed(base, static_cast<std::uint64_t>(c)));
    };

    if (workers <= 1 || chunks == 1) {
        for (Eigen::Index c = 0; c < chunks; ++c) run_chunk(c);
        return batch;
    }

    std::atomic<Eigen::Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<Eigen::Index>(workers, chunks));
    for (int w = 0; w < count; ++w) {
        pool.emplace_back([&] {
            for (Eigen::Index c = next++; c < chunks; c = next++) {
                try {
                    run_chunk(c);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return batch;
}

}  // namespace rcgdm
