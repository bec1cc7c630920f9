// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/training.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "rcgdm/world.hpp"

namespace rcgdm {

void TrainConfig::validate() const {
    if (batch < 1) throw ValidationError("train: batch size must be >= 1");
    if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw ValidationError("train: learning rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw ValidationError("train: optimizer moments must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("train: epsilon must be > 0");
    if (validation_rows < 1) throw ValidationError("train: validation_rows must be >= 1");
}

NoiseDraw draw_noise(Eigen::Index n, Eigen::Index D, const DiffusionSchedule& schedule, Rng& rng) {
    NoiseDraw draw;
    draw.t.resize(n);
    draw.eps.resize(n, D);
    for (Eigen::Index i = 0; i < n; ++i) {
        draw.t(i) = rng.uniform(schedule.t0, schedule.T);
        for (Eigen::Index j = 0; j < D; ++j) draw.eps(i, j) = rng.normal();
    }
    return draw;
}

Matrix noised_inputs(const Matrix& X, const NoiseDraw& noise) {
    const Vector a = noise.t.unaryExpr([](double s) { return DiffusionSchedule::alpha(s); });
    const Vector sd = noise.t.unaryExpr([](double s) { return std::sqrt(DiffusionSchedule::h(s)); });
    return a.asDiagonal() * X + sd.asDiagonal() * noise.eps;
}

Matrix denoising_target(const NoiseDraw& noise) {
    const Vector inv_sd = noise.t.unaryExpr([](double s) { return -1.0 / std::sqrt(DiffusionSchedule::h(s)); });
    return inv_sd.asDiagonal() * noise.eps;
}

double denoising_loss(const EncoderDecoderScore& model, const Matrix& X, const Vector& y, const NoiseDraw& noise,
                      Vector* grad) {
    if (X.rows() == 0) throw ValidationError("denoising_loss: empty batch");
    return model.squared_error(noised_inputs(X, noise), y, noise.t, denoising_target(noise), grad);
}

double denoising_loss(const ScoreFunction& score, const Matrix& X, const Vector& y, const NoiseDraw& noise) {
    if (X.rows() == 0) throw ValidationError("denoising_loss: empty batch");
    const Matrix S = score.evaluate(noised_inputs(X, noise), y, noise.t);
    return (denoising_target(noise) - S).squaredNorm() / static_cast<double>(X.rows());
}

LossAndGrad denoising_loss_and_grad(const EncoderDecoderScore& model, const Matrix& X, const Vector& y,
                                    const DiffusionSchedule& schedule, std::uint64_t seed) {
    Rng rng(seed);
    const NoiseDraw noise = draw_noise(X.rows(), X.cols(), schedule, rng);
    LossAndGrad out;
    out.loss = denoising_loss(model, X, y, noise, &out.grad);
    return out;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}

void Adam::step(Eigen::Ref<Vector> theta, const Vector& grad) {
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

namespace {

// Fisher-Yates on the raw engine output so the permutation does not depend
// on the standard library's distribution implementations.
void shuffle(std::vector<Eigen::Index>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

void gather(const PseudoLabeledDataset& data, const std::vector<Eigen::Index>& idx, std::size_t begin,
            std::size_t end, Matrix& X, Vector& y) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    X.resize(n, data.X.cols());
    y.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        X.row(r) = data.X.row(idx[begin + static_cast<std::size_t>(r)]);
        y(r) = data.y_hat(idx[begin + static_cast<std::size_t>(r)]);
    }
}

}  // namespace

TrainResult train(EncoderDecoderScore& model, const PseudoLabeledDataset& curated, const TrainConfig& config,
                  const DiffusionSchedule& schedule) {
    config.validate();
    schedule.validate();
    const Eigen::Index n = curated.X.rows();
    if (n == 0) throw ValidationError("train: curated dataset is empty");
    if (curated.X.cols() != model.dim()) throw DimensionError("train: data dimension does not match the model");

    // Fixed validation batch: same rows and same (t, eps) before and after.
    Matrix val_X;
    Vector val_y;
    NoiseDraw val_noise;
    {
        Rng rng(derive_seed(config.seed, stream::validation));
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        shuffle(idx, rng);
        const auto m = static_cast<std::size_t>(std::min(n, config.validation_rows));
        gather(curated, idx, 0, m, val_X, val_y);
        val_noise = draw_noise(val_X.rows(), val_X.cols(), schedule, rng);
    }

    TrainResult result;
    result.initial_validation = denoising_loss(model, val_X, val_y, val_noise, nullptr);

    Vector theta = model.parameters();
    Adam adam(theta.size(), config.learning_rate, config.beta1, config.beta2, config.epsilon);
    Rng rng(derive_seed(config.seed, stream::training));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Matrix X;
    Vector y;
    Vector grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(order, rng);
        double total = 0.0;
        long long batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch));
            gather(curated, order, begin, end, X, y);
            const NoiseDraw noise = draw_noise(X.rows(), X.cols(), schedule, rng);
            const double loss = denoising_loss(model, X, y, noise, &grad);
            if (!std::isfinite(loss) || !grad.allFinite()) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << ", step " << result.steps << " (last epoch mean "
                    << (result.epoch_loss.empty() ? result.initial_validation : result.epoch_loss.back())
                    << ", |theta|=" << theta.norm() << ")";
                throw TrainingError(msg.str());
            }
            adam.step(theta, grad);
            model.set_parameters(theta);
            total += loss;
            ++batches;
            ++result.steps;
        }
        result.epoch_loss.push_back(total / static_cast<double>(std::max<long long>(batches, 1)));
    }
    result.final_validation = denoising_loss(model, val_X, val_y, val_noise, nullptr);
    return result;
}

Vector objective_samples(const ScoreFunction& score, const GaussianDesignOracle& oracle, Eigen::Index n_mc,
                         const DiffusionSchedule& schedule, std::uint64_t seed, Objective kind) {
    if (n_mc < 1) throw ValidationError("objective_samples: n_mc must be >= 1");
    const SubspaceWorld& world = oracle.world();
    const AnalyticScore truth(oracle);
    constexpr Eigen::Index kChunk = 4096;

    Vector out(n_mc);
    Rng rng(seed);
    for (Eigen::Index begin = 0; begin < n_mc; begin += kChunk) {
        const Eigen::Index m = std::min(kChunk, n_mc - begin);
        const Matrix Z = sample_latent(world.Sigma, m, rng);
        Vector y = Z * oracle.beta_hat();
        for (Eigen::Index i = 0; i < m; ++i) y(i) += oracle.nu() * rng.normal();
        const NoiseDraw noise = draw_noise(m, world.D(), schedule, rng);
        const Matrix Xn = noised_inputs(Z * world.A.transpose(), noise);

        const Matrix S = score.evaluate(Xn, y, noise.t);
        const Matrix target =
            kind == Objective::denoising ? denoising_target(noise) : truth.evaluate(Xn, y, noise.t);
        out.segment(begin, m) = (target - S).rowwise().squaredNorm();
    }
    return out;
}

McEstimate summarize(const Vector& samples) {
    McEstimate est;
    const auto n = static_cast<double>(samples.size());
    est.mean = samples.mean();
    if (samples.size() > 1) {
        const double var = (samples.array() - est.mean).square().sum() / (n - 1.0);
        est.std_error = std::sqrt(var / n);
    }
    return est;
}

McEstimate exact_objective(const ScoreFunction& score, const GaussianDesignOracle& oracle, Eigen::Index n_mc,
                           const DiffusionSchedule& schedule, std::uint64_t seed) {
    return summarize(objective_samples(score, oracle, n_mc, schedule, seed, Objective::explicit_score));
}

McEstimate denoising_objective(const ScoreFunction& score, const GaussianDesignOracle& oracle, Eigen::Index n_mc,
                               const DiffusionSchedule& schedule, std::uint64_t seed) {
    return summarize(objective_samples(score, oracle, n_mc, schedule, seed, Objective::denoising));
}

}  // namespace rcgdm
