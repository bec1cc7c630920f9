// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rcgdm/metrics.hpp"
#include "rcgdm/sampler.hpp"
#include "rcgdm/score.hpp"

using namespace rcgdm;

namespace {

struct NanScore final : ScoreFunction {
    Eigen::Index dim() const override { return 3; }
    Matrix evaluate(const Matrix& X, const Vector&, const Vector& t) const override {
        Matrix S = Matrix::Zero(X.rows(), X.cols());
        if (t(0) < 5.0) S(0, 0) = std::numeric_limits<double>::infinity();
        return S;
    }
    std::string identity() const override { return "nan"; }
};

}  // namespace

TEST_CASE("plan_steps") {
    CHECK(plan_steps(DiffusionSchedule{10.0, 0.01, 0.005}).full_steps == 1998);
    CHECK(plan_steps(DiffusionSchedule{10.0, 0.01, 0.005}).remainder == 0.0);
    const StepPlan p = plan_steps(DiffusionSchedule{1.0, 0.1, 0.04});
    CHECK(p.full_steps == 22);
    CHECK(p.remainder == doctest::Approx(0.02).epsilon(1e-9));
    CHECK(plan_steps(DiffusionSchedule{0.5, 0.5, 0.1}).full_steps == 0);
}

TEST_CASE("run_backward: oracle moments at D=4, d=2") {
    const SubspaceWorld w = testing::world(4, 2, 3, Matrix(Vector::LinSpaced(2, 1.0, 0.5).asDiagonal()));
    const GaussianDesignOracle o(w, w.beta_star, 0.5);
    const DiffusionSchedule sched{10.0, 0.01, 0.005};
    const SampleBatch b = run_backward(AnalyticScore(o), 2.0, 4096, sched, 4);
    CHECK(b.X.rows() == 4096);
    CHECK(b.a == 2.0);
    CHECK(b.score_id == "oracle");
    CHECK(b.X.allFinite());
    const MomentGap gap = moment_discrepancy(b.X, o.noised_conditional_law(2.0, sched.t0));
    const Vector m = b.X.colwise().mean();
    CHECK((m - o.noised_conditional_law(2.0, sched.t0).mean).cwiseAbs().maxCoeff() <= 0.1);
    CHECK(gap.cov_gap <= 0.1);
}

TEST_CASE("run_backward: zero steps returns the initial draws") {
    const SubspaceWorld w = testing::world(5, 2);
    const GaussianDesignOracle o(w, w.beta_star, 0.5);
    const SampleBatch b = run_backward(AnalyticScore(o), 1.0, 20000, DiffusionSchedule{0.5, 0.5, 0.1}, 6);
    const Vector m = b.X.colwise().mean();
    const Matrix Xc = b.X.rowwise() - m.transpose();
    const Matrix C = Xc.transpose() * Xc / 19999.0;
    CHECK(m.cwiseAbs().maxCoeff() < 0.05);
    CHECK(testing::max_abs(C - Matrix::Identity(5, 5)) < 0.05);
}

TEST_CASE("run_backward: deterministic and independent of worker count") {
    const SubspaceWorld w = testing::world(6, 2);
    const GaussianDesignOracle o(w, w.beta_star, 0.5);
    const DiffusionSchedule sched{2.0, 0.05, 0.01};
    const AnalyticScore s(o);
    const SampleBatch a = run_backward(s, 1.0, 700, sched, 9, 1);
    const SampleBatch b = run_backward(s, 1.0, 700, sched, 9, 1);
    const SampleBatch c = run_backward(s, 1.0, 700, sched, 9, 3);
    CHECK(a.X == b.X);
    CHECK(a.X == c.X);
    CHECK(run_backward(s, 1.0, 700, sched, 10).X != a.X);
}

TEST_CASE("run_backward: errors") {
    const SubspaceWorld w = testing::world(3, 1);
    const GaussianDesignOracle o(w, w.beta_star, 0.5);
    CHECK_THROWS_AS(run_backward(AnalyticScore(o), 1.0, 0, DiffusionSchedule{}, 1), ValidationError);
    CHECK_THROWS_AS(run_backward(AnalyticScore(o), 1.0, 4, DiffusionSchedule{1.0, 0.0, 0.0}, 1), DomainError);
    try {
        run_backward(NanScore{}, 0.0, 4, DiffusionSchedule{10.0, 0.1, 0.1}, 1);
        FAIL("expected divergence");
    } catch (const SamplerDivergence& e) {
        CHECK(e.step() > 0);
    }
}

TEST_CASE("run_backward: step-size convergence") {
    const SubspaceWorld w = testing::world(4, 2, 5);
    const GaussianDesignOracle o(w, w.beta_star, 0.5);
    const AnalyticScore s(o);
    std::vector<double> gaps;
    for (double eta : {0.04, 0.02, 0.01, 0.005}) {
        const DiffusionSchedule sched{10.0, 0.04, eta};
        const SampleBatch b = run_backward(s, 1.0, 8192, sched, 11);
        gaps.push_back(moment_discrepancy(b.X, o.noised_conditional_law(1.0, sched.t0)).cov_gap);
    }
    // Sampling noise floor at n = 8192 is about sqrt(2 D / n).
    const double noise = std::sqrt(8.0 / 8192.0);
    for (std::size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] <= gaps[k - 1] + 2.0 * noise);
}

TEST_CASE("run_backward: off-support deviation scales like sqrt(t0 D)") {
    const SubspaceWorld w = testing::world(64, 16, 2);
    const GaussianDesignOracle o(w, w.beta_star, 0.125);
    const AnalyticScore s(o);
    const double small = off_support_deviation(run_backward(s, 1.0, 1024, DiffusionSchedule{10.0, 0.01, 0.005}, 1).X, w);
    const double large = off_support_deviation(run_backward(s, 1.0, 1024, DiffusionSchedule{10.0, 0.04, 0.005}, 1).X, w);
    CHECK(large / small >= 1.6);
    CHECK(large / small <= 2.5);
    CHECK(std::abs(small - std::sqrt(0.01 * 48.0)) <= 0.15 * std::sqrt(0.01 * 48.0));
}
