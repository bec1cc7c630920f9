// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcgdm/oracle.hpp"
#include "rcgdm/regression.hpp"
#include "rcgdm/score.hpp"
#include "rcgdm/world.hpp"

namespace rcgdm {

/// ||V V^T - A A^T||_F^2, in [0, 2d] for orthonormal inputs.
double subspace_angle(const Matrix& V, const Matrix& A);

/// Mean of ||(I - AA^T) x|| over rows.
double off_support_deviation(const Matrix& X, const SubspaceWorld& world);

struct Suboptimality {
    double subopt;
    double avg_reward;
};

/// avg_reward = mean f*(x); subopt = a - avg_reward.
Suboptimality suboptimality(const Matrix& X, const SubspaceWorld& world, double a);

struct SuboptTerms {
    double e1;  // E_{P_a} |(theta_hat - theta*)^T x|
    double e2;  // |E_{P_a} g*(x_par) - E_{P_hat_a} g*(x_par)|
    double e3;  // E_{P_hat_a} c_perp ||x_perp||^2
    double e2_std_error;
};

/// The reference law P_a is sampled with n_ref draws of the conditional
/// latent law embedded by A.
SuboptTerms subopt_decomposition(const Matrix& X, const SubspaceWorld& world, const RidgeEstimate& est,
                                 const GaussianDesignOracle& oracle, double a, Eigen::Index n_ref,
                                 std::uint64_t seed);

struct MomentGap {
    double mean_gap;  // ||m_hat - mean||
    double cov_gap;   // ||C_hat - cov||_F / ||cov||_F
};

MomentGap moment_discrepancy(const Matrix& X, const GaussianLaw& law);

/// Orthogonal U minimizing ||V U - A||_F (polar factor of V^T A).
Matrix procrustes_rotation(const Matrix& V, const Matrix& A);

/// Moment gap between the latent codes U^T V^T x of the batch and a
/// d-dimensional law, with U = procrustes_rotation(V, A).
MomentGap pushforward_discrepancy(const Matrix& X, const Matrix& V, const Matrix& A, const GaussianLaw& latent_law);

/// Rows of x with per-row labels; one side of a distribution-shift ratio.
struct LabeledSamples {
    Matrix X;
    Vector y;
};

struct LossEvaluator {
    std::string id;
    std::function<Vector(const LabeledSamples&)> per_example;  // one nonnegative value per row
};

struct ShiftEstimate {
    double ratio;
    std::string argmax_id;
    std::vector<double> ratios;  // one per supplied loss
};

/// sup over the supplied losses of mean_{P1}[l] / mean_{P2}[l]. Throws
/// DegenerateShift when a denominator is zero.
ShiftEstimate distribution_shift_mc(const LabeledSamples& p1, const LabeledSamples& p2,
                                    const std::vector<LossEvaluator>& losses);

/// Per-example denoising loss of a score averaged over n_inner fixed
/// (t, eps) draws. The draws are regenerated from seed on every call, so two
/// sample sets are scored under common random numbers.
LossEvaluator denoising_loss_evaluator(std::string id, std::shared_ptr<const ScoreFunction> score,
                                       const DiffusionSchedule& schedule, Eigen::Index n_inner, std::uint64_t seed);

struct Histogram {
    std::vector<double> edges;  // bins + 1, increasing
    std::vector<long long> counts;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Uniform bins over [lo, hi]; values outside are clamped to the end bins.
Histogram reward_histogram(const Vector& rewards, int bins, double lo, double hi);

/// Uniform bins over [min, max] of the rewards themselves. A batch with a
/// single distinct value yields one bin.
Histogram reward_histogram(const Vector& rewards, int bins);

Histogram reward_histogram(const Matrix& X, const SubspaceWorld& world, int bins);

struct MetricsReport {
    double a = 0.0;
    std::uint64_t seed = 0;
    Eigen::Index n = 0;
    double subspace_angle = 0.0;
    double off_support_mean = 0.0;
    double avg_reward = 0.0;
    double subopt = 0.0;
    double e1 = 0.0, e2 = 0.0, e3 = 0.0;
    double distro_shift = 0.0;        // closed-form surrogate (known Sigma)
    double distro_shift_mc = 0.0;     // ratio over the loss family
    std::string distro_shift_argmax;
    double coverage = 0.0;            // Tr(Sigma_hat_lambda^{-1} Sigma_Pa)
    MomentGap moment_gap{0.0, 0.0};
    MomentGap pushforward_gap{0.0, 0.0};  // latent codes vs A^T-projected law
    Histogram histogram;
    std::string score_id;
};

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rcgdm
