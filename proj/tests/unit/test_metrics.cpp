// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "rcgdm/metrics.hpp"
#include "rcgdm/regression.hpp"

using namespace rcgdm;

TEST_CASE("subspace_angle: identical, orthogonal, symmetric, rotation invariant") {
    const Matrix Q = sample_orthonormal(40, 40, 3);
    const Matrix A = Q.leftCols(16), B = Q.middleCols(16, 16);
    CHECK(subspace_angle(A, A) < 1e-12);
    CHECK(subspace_angle(A, B) == doctest::Approx(32.0).epsilon(1e-12));
    const Matrix V = sample_orthonormal(40, 16, 4);
    CHECK(subspace_angle(V, A) == subspace_angle(A, V));
    const Matrix R = sample_orthonormal(16, 16, 5);
    CHECK(std::abs(subspace_angle(V * R, A) - subspace_angle(V, A)) < 1e-10);
    CHECK_THROWS_AS(subspace_angle(V, Q.leftCols(3)), DimensionError);
}

TEST_CASE("subspace_angle: random baseline 2d(1 - d/D) = 24") {
    const Matrix A = sample_orthonormal(64, 16, 0);
    double sum = 0.0;
    const int n = 10000;
    for (int k = 0; k < n; ++k) sum += subspace_angle(sample_orthonormal(64, 16, 1000 + k), A);
    CHECK(sum / n == doctest::Approx(24.0).epsilon(0.01));
}

TEST_CASE("off_support_deviation: on support, chi mean") {
    const SubspaceWorld w = testing::world(20, 5);
    Rng rng(1);
    CHECK(off_support_deviation(rng.normal_matrix(50, 5) * w.A.transpose(), w) < 1e-12);
    const Matrix X = rng.normal_matrix(100000, 20);
    const double k = 15.0;
    const double chi_mean = std::sqrt(2.0) * std::exp(std::lgamma((k + 1) / 2) - std::lgamma(k / 2));
    CHECK(off_support_deviation(X, w) == doctest::Approx(chi_mean).epsilon(0.01));
}

TEST_CASE("suboptimality: definition and additivity") {
    SubspaceWorld w = testing::world(6, 2);
    w.offsupport_coeff = 0.0;
    Rng rng(2);
    const Matrix X = rng.normal_matrix(30, 2) * w.A.transpose();
    const double m = (X * w.theta_star).mean();
    const Suboptimality s = suboptimality(X, w, 3.0);
    CHECK(s.avg_reward == doctest::Approx(m).epsilon(1e-12));
    CHECK(s.subopt == 3.0 - s.avg_reward);
    // Shifting the batch along theta* by c shifts rewards by c.
    const Matrix shifted = X.rowwise() + 0.5 * w.theta_star.transpose();
    const Suboptimality s2 = suboptimality(shifted, w, 3.0);
    CHECK(s2.avg_reward == doctest::Approx(s.avg_reward + 0.5).epsilon(1e-12));
    CHECK(s2.subopt == doctest::Approx(s.subopt - 0.5).epsilon(1e-12));
}

TEST_CASE("suboptimality: exact conditioning with nu -> 0 and theta_hat = theta*") {
    const SubspaceWorld w = testing::world(8, 2, 3);
    const GaussianDesignOracle o(w, w.beta_star, 1e-4);
    const GaussianLaw law = o.conditional_latent_law(1.5);
    Rng rng(4);
    Matrix Z = sample_latent(law.cov + 1e-14 * Matrix::Identity(2, 2), 5000, rng);
    Z.rowwise() += law.mean.transpose();
    CHECK(std::abs(suboptimality(Z * w.A.transpose(), w, 1.5).subopt) < 1e-3);
}

TEST_CASE("subopt_decomposition examples") {
    const SubspaceWorld w = testing::world(10, 3, 5);
    RidgeEstimate exact;
    exact.theta_hat = w.theta_star;
    const GaussianDesignOracle o(w, w.beta_star, 0.3);
    Rng rng(6);
    const double a = 2.0;
    const GaussianLaw law = o.conditional_latent_law(a);
    Matrix Z = sample_latent(law.cov, 4000, rng);
    Z.rowwise() += law.mean.transpose();
    const Matrix on = Z * w.A.transpose();

    const SuboptTerms t = subopt_decomposition(on, w, exact, o, a, 4000, 7);
    CHECK(t.e1 == 0.0);
    CHECK(t.e3 < 1e-20);
    CHECK(t.e2 <= 3.0 * t.e2_std_error);

    // e1 vanishes exactly when theta_hat agrees with theta* on the support.
    RidgeEstimate off_support_only = exact;
    Vector perp = Vector::Unit(10, 0) - w.A * w.A.row(0).transpose();
    off_support_only.theta_hat += perp;
    CHECK(subopt_decomposition(on, w, off_support_only, o, a, 500, 7).e1 < 1e-12);
    RidgeEstimate wrong = exact;
    wrong.theta_hat += 0.1 * w.A.col(0);
    CHECK(subopt_decomposition(on, w, wrong, o, a, 500, 7).e1 > 0.0);

    const Matrix noisy = on + 0.1 * rng.normal_matrix(4000, 10);
    const SuboptTerms n = subopt_decomposition(noisy, w, exact, o, a, 100, 7);
    CHECK(n.e3 > 0.0);
    CHECK_THROWS_AS(subopt_decomposition(on, w, exact, o, a, 0, 7), ValidationError);
}

TEST_CASE("moment_discrepancy examples") {
    Rng rng(8);
    GaussianLaw law{Vector::LinSpaced(3, 1, 2), Matrix(Vector::LinSpaced(3, 0.5, 2).asDiagonal())};
    const Eigen::Index n = 100000;
    Matrix X = rng.normal_matrix(n, 3) * law.cov.cwiseSqrt();
    X.rowwise() += law.mean.transpose();
    CHECK(moment_discrepancy(X, law).mean_gap < 4.0 * std::sqrt(law.cov.trace() / n));

    GaussianLaw std_normal{Vector::Zero(3), Matrix::Identity(3, 3)};
    CHECK(moment_discrepancy(Matrix::Zero(10, 3), std_normal).cov_gap == doctest::Approx(1.0));
}

TEST_CASE("pushforward_discrepancy aligns V to A before comparing") {
    const SubspaceWorld w = testing::world(9, 3, 2);
    const Matrix R = sample_orthonormal(3, 3, 8);
    const Matrix V = w.A * R;
    CHECK(testing::max_abs(V * procrustes_rotation(V, w.A) - w.A) < 1e-10);
    Rng rng(9);
    const Matrix Z = rng.normal_matrix(50000, 3);
    const GaussianLaw law{Vector::Zero(3), Matrix::Identity(3, 3)};
    const MomentGap g = pushforward_discrepancy(Z * w.A.transpose(), V, w.A, law);
    CHECK(g.mean_gap < 0.03);
    CHECK(g.cov_gap < 0.03);
}

TEST_CASE("distribution_shift_mc examples") {
    Rng rng(10);
    LabeledSamples p{rng.normal_matrix(20000, 3), rng.normal_vector(20000)};
    LossEvaluator sq{"sq", [](const LabeledSamples& s) { return Vector(s.X.rowwise().squaredNorm()); }};
    LossEvaluator one{"one", [](const LabeledSamples& s) { return Vector(Vector::Ones(s.X.rows())); }};
    const ShiftEstimate same = distribution_shift_mc(p, p, {sq, one});
    CHECK(same.ratio == 1.0);
    for (double r : same.ratios) CHECK(r == 1.0);

    LabeledSamples scaled{2.0 * rng.normal_matrix(20000, 3), p.y};
    const ShiftEstimate four = distribution_shift_mc(scaled, p, {sq});
    CHECK(four.ratio == doctest::Approx(4.0).epsilon(0.05));
    CHECK(four.argmax_id == "sq");

    LossEvaluator zero{"zero", [](const LabeledSamples& s) { return Vector(Vector::Zero(s.X.rows())); }};
    CHECK_THROWS_AS(distribution_shift_mc(p, p, {zero}), DegenerateShift);
    CHECK_THROWS_AS(distribution_shift_mc(p, p, {}), ValidationError);
}

TEST_CASE("distribution_shift_mc: denoising-loss family grows with a") {
    const SubspaceWorld w = testing::world(8, 2, 4);
    const double nu = default_nu(8);
    const GaussianDesignOracle o(w, w.beta_star, nu);
    Rng rng(11);
    auto conditional = [&](double a, Eigen::Index n) {
        const GaussianLaw law = o.conditional_latent_law(a);
        Matrix Z = sample_latent(law.cov, n, rng);
        Z.rowwise() += law.mean.transpose();
        return LabeledSamples{Z * w.A.transpose(), Vector::Constant(n, a)};
    };
    Matrix Z = sample_latent(w.Sigma, 2000, rng);
    Vector y = Z * w.beta_star;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += nu * rng.normal();
    const LabeledSamples data{Z * w.A.transpose(), y};
    const DiffusionSchedule sched;
    auto fitted = std::make_shared<AnalyticScore>(GaussianDesignOracle(w, 0.5 * w.beta_star, nu));
    const std::vector<LossEvaluator> family = {denoising_loss_evaluator("fitted", fitted, sched, 4, 1),
                                               denoising_loss_evaluator("zero", std::make_shared<ZeroScore>(8), sched, 4, 1)};
    const double r0 = distribution_shift_mc(conditional(0.0, 2000), data, family).ratio;
    const double r8 = distribution_shift_mc(conditional(8.0, 2000), data, family).ratio;
    CHECK(r8 >= r0);
    // Common random numbers: re-evaluation is identical.
    CHECK(family[0].per_example(data) == family[0].per_example(data));
}

TEST_CASE("reward_histogram examples") {
    const Histogram one = reward_histogram(Vector::Constant(1, 2.5), 50);
    CHECK(one.counts.size() == 1);
    CHECK(one.counts[0] == 1);

    Rng rng(12);
    const Vector r = rng.normal_vector(100000);
    const Histogram h = reward_histogram(r, 50);
    CHECK(std::abs(h.mean) < 0.02);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0LL) == 100000);
    CHECK(h.edges.size() == 51);
    for (std::size_t i = 1; i < h.edges.size(); ++i) CHECK(h.edges[i] > h.edges[i - 1]);

    const Histogram clamped = reward_histogram(Vector::LinSpaced(11, -5, 5), 4, -1.0, 1.0);
    CHECK(std::accumulate(clamped.counts.begin(), clamped.counts.end(), 0LL) == 11);
    CHECK(clamped.counts.front() >= 5);
    CHECK_THROWS_AS(reward_histogram(r, 0), ValidationError);
}

TEST_CASE("spearman: perfect, reversed, ties") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    // Ties receive average ranks: y ranks (1.5, 1.5, 3, 4).
    const double rho = spearman({1, 2, 3, 4}, {5, 5, 6, 7});
    CHECK(rho == doctest::Approx(0.9486832980505138).epsilon(1e-12));
    CHECK_THROWS_AS(spearman({1}, {2}), ValidationError);
}
