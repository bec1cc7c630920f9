// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "rcgdm/oracle.hpp"
#include "rcgdm/regression.hpp"
#include "rcgdm/score.hpp"

namespace rcgdm {

struct TrainConfig {
    Eigen::Index batch = 32;
    int epochs = 10;
    double learning_rate = 8e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    Eigen::Index validation_rows = 1024;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-row diffusion time and standard normal noise for one denoising pass.
struct NoiseDraw {
    Vector t;    // t_i ~ Unif[t0, T]
    Matrix eps;  // n x D
};

NoiseDraw draw_noise(Eigen::Index n, Eigen::Index D, const DiffusionSchedule& schedule, Rng& rng);

/// x'_i = alpha(t_i) x_i + sqrt(h(t_i)) eps_i.
Matrix noised_inputs(const Matrix& X, const NoiseDraw& noise);

/// Denoising target -(x' - alpha x)/h = -eps / sqrt(h), row-wise.
Matrix denoising_target(const NoiseDraw& noise);

/// Mean of ||-(x'-alpha x)/h - s(x', y, t)||^2 for the given draw; exact
/// pathwise gradient when grad is non-null.
double denoising_loss(const EncoderDecoderScore& model, const Matrix& X, const Vector& y, const NoiseDraw& noise,
                      Vector* grad);

/// Same objective for any score function (no gradient).
double denoising_loss(const ScoreFunction& score, const Matrix& X, const Vector& y, const NoiseDraw& noise);

struct LossAndGrad {
    double loss;
    Vector grad;
};

/// Draws fresh (t, eps) from seed and returns loss and gradient.
LossAndGrad denoising_loss_and_grad(const EncoderDecoderScore& model, const Matrix& X, const Vector& y,
                                    const DiffusionSchedule& schedule, std::uint64_t seed);

class Adam {
public:
    Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(Eigen::Ref<Vector> theta, const Vector& grad);
    long long iterations() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    Vector m_, v_;
    long long t_ = 0;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean training loss per epoch
    double initial_validation = 0.0;
    double final_validation = 0.0;
    long long steps = 0;
};

/// Minibatch Adam on the denoising objective. Throws TrainingError on a
/// non-finite loss.
TrainResult train(EncoderDecoderScore& model, const PseudoLabeledDataset& curated, const TrainConfig& config,
                  const DiffusionSchedule& schedule);

enum class Objective { denoising, explicit_score };

/// Per-sample losses on fresh draws from the Gaussian-design joint law of
/// (x, y_hat): z ~ N(0, Sigma), x = A z, y_hat = beta_hat^T z + nu xi, then
/// t ~ Unif[t0, T] and x' ~ N(alpha x, h I). For a fixed seed both objectives
/// see identical draws, so differences between models pair up.
Vector objective_samples(const ScoreFunction& score, const GaussianDesignOracle& oracle, Eigen::Index n_mc,
                         const DiffusionSchedule& schedule, std::uint64_t seed, Objective kind);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

McEstimate summarize(const Vector& samples);

/// E ||grad log p_t(x'|y) - s(x', y, t)||^2 with the analytic score as truth.
McEstimate exact_objective(const ScoreFunction& score, const GaussianDesignOracle& oracle, Eigen::Index n_mc,
                           const DiffusionSchedule& schedule, std::uint64_t seed);

McEstimate denoising_objective(const ScoreFunction& score, const GaussianDesignOracle& oracle, Eigen::Index n_mc,
                               const DiffusionSchedule& schedule, std::uint64_t seed);

}  // namespace rcgdm
