// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rcgdm/training.hpp"

namespace rcgdm {

double subspace_angle(const Matrix& V, const Matrix& A) {
    if (V.rows() != A.rows() || V.cols() != A.cols())
        throw DimensionError("subspace_angle: V and A must have the same shape");
    return (V * V.transpose() - A * A.transpose()).squaredNorm();
}

double off_support_deviation(const Matrix& X, const SubspaceWorld& world) {
    if (X.rows() == 0) return 0.0;
    const Matrix perp = X - (X * world.A) * world.A.transpose();
    return perp.rowwise().norm().mean();
}

Suboptimality suboptimality(const Matrix& X, const SubspaceWorld& world, double a) {
    const double avg = true_rewards(world, X).mean();
    return {a - avg, avg};
}

SuboptTerms subopt_decomposition(const Matrix& X, const SubspaceWorld& world, const RidgeEstimate& est,
                                 const GaussianDesignOracle& oracle, double a, Eigen::Index n_ref,
                                 std::uint64_t seed) {
    if (n_ref < 1) throw ValidationError("subopt_decomposition: n_ref must be >= 1");
    const GaussianLaw law = oracle.conditional_latent_law(a);
    Rng rng(derive_seed(seed, stream::reference));
    Matrix Z = sample_latent(law.cov + 1e-14 * Matrix::Identity(law.cov.rows(), law.cov.cols()), n_ref, rng);
    Z.rowwise() += law.mean.transpose();
    const Matrix ref = Z * world.A.transpose();

    SuboptTerms out{};
    out.e1 = (ref * (est.theta_hat - world.theta_star)).cwiseAbs().mean();

    // g*(x_par) = theta*^T A A^T x = beta*^T A^T x.
    const Vector g_ref = ref * world.theta_star;
    const Vector g_gen = (X * world.A) * world.beta_star;
    out.e2 = std::abs(g_ref.mean() - g_gen.mean());
    auto var = [](const Vector& v) {
        if (v.size() < 2) return 0.0;
        return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
    };
    out.e2_std_error = std::sqrt(var(g_ref) / static_cast<double>(g_ref.size()) +
                                 var(g_gen) / static_cast<double>(std::max<Eigen::Index>(g_gen.size(), 1)));

    const Matrix perp = X - (X * world.A) * world.A.transpose();
    out.e3 = X.rows() == 0 ? 0.0 : world.offsupport_coeff * perp.rowwise().squaredNorm().mean();
    return out;
}

Matrix procrustes_rotation(const Matrix& V, const Matrix& A) {
    if (V.rows() != A.rows() || V.cols() != A.cols()) throw DimensionError("procrustes_rotation: shape mismatch");
    const Eigen::JacobiSVD<Matrix> svd(V.transpose() * A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

MomentGap pushforward_discrepancy(const Matrix& X, const Matrix& V, const Matrix& A, const GaussianLaw& latent_law) {
    return moment_discrepancy(X * (V * procrustes_rotation(V, A)), latent_law);
}

MomentGap moment_discrepancy(const Matrix& X, const GaussianLaw& law) {
    if (X.cols() != law.mean.size()) throw DimensionError("moment_discrepancy: dimension mismatch");
    const auto n = static_cast<double>(X.rows());
    const Vector m = X.colwise().mean().transpose();
    const Matrix centered = X.rowwise() - m.transpose();
    const Matrix C = (centered.transpose() * centered) / std::max(n - 1.0, 1.0);
    return {(m - law.mean).norm(), (C - law.cov).norm() / law.cov.norm()};
}

ShiftEstimate distribution_shift_mc(const LabeledSamples& p1, const LabeledSamples& p2,
                                    const std::vector<LossEvaluator>& losses) {
    if (losses.empty()) throw ValidationError("distribution_shift_mc: empty loss family");
    ShiftEstimate out{0.0, "", {}};
    for (const auto& loss : losses) {
        const double num = loss.per_example(p1).mean();
        const double den = loss.per_example(p2).mean();
        if (!(den > 0.0)) throw DegenerateShift("distribution_shift_mc: zero denominator for loss '" + loss.id + "'");
        const double r = num / den;
        out.ratios.push_back(r);
        if (out.argmax_id.empty() || r > out.ratio) {
            out.ratio = r;
            out.argmax_id = loss.id;
        }
    }
    return out;
}

LossEvaluator denoising_loss_evaluator(std::string id, std::shared_ptr<const ScoreFunction> score,
                                       const DiffusionSchedule& schedule, Eigen::Index n_inner, std::uint64_t seed) {
    if (n_inner < 1) throw ValidationError("denoising_loss_evaluator: n_inner must be >= 1");
    LossEvaluator ev;
    ev.id = std::move(id);
    ev.per_example = [score = std::move(score), schedule, n_inner, seed](const LabeledSamples& s) {
        Rng rng(seed);
        const NoiseDraw draws = draw_noise(n_inner, s.X.cols(), schedule, rng);
        Vector total = Vector::Zero(s.X.rows());
        for (Eigen::Index k = 0; k < n_inner; ++k) {
            const double t = draws.t(k);
            const double al = DiffusionSchedule::alpha(t);
            const double sd = std::sqrt(DiffusionSchedule::h(t));
            Matrix Xn = al * s.X;
            Xn.rowwise() += sd * draws.eps.row(k);
            const Matrix S = score->evaluate(Xn, s.y, Vector::Constant(s.X.rows(), t));
            const Matrix R = S.rowwise() + (draws.eps.row(k) / sd);
            total += R.rowwise().squaredNorm();
        }
        return Vector(total / static_cast<double>(n_inner));
    };
    return ev;
}

namespace {

void moments(const Vector& v, Histogram& h) {
    h.mean = v.mean();
    h.stddev = v.size() > 1 ? std::sqrt((v.array() - h.mean).square().sum() / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

Histogram reward_histogram(const Vector& rewards, int bins, double lo, double hi) {
    if (bins < 1) throw ValidationError("reward_histogram: bins must be >= 1");
    if (!(hi > lo)) throw ValidationError("reward_histogram: need hi > lo");
    Histogram h;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (Eigen::Index i = 0; i < rewards.size(); ++i) {
        auto b = static_cast<long long>(std::floor((rewards(i) - lo) / (hi - lo) * bins));
        b = std::clamp<long long>(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    if (rewards.size() > 0) moments(rewards, h);
    return h;
}

Histogram reward_histogram(const Vector& rewards, int bins) {
    if (bins < 1) throw ValidationError("reward_histogram: bins must be >= 1");
    if (rewards.size() == 0) throw ValidationError("reward_histogram: empty batch");
    const double lo = rewards.minCoeff();
    const double hi = rewards.maxCoeff();
    if (hi > lo) return reward_histogram(rewards, bins, lo, hi);
    Histogram h;
    h.edges = {lo - 0.5, lo + 0.5};
    h.counts = {static_cast<long long>(rewards.size())};
    moments(rewards, h);
    return h;
}

Histogram reward_histogram(const Matrix& X, const SubspaceWorld& world, int bins) {
    return reward_histogram(true_rewards(world, X), bins);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman: need two equal-length series");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace rcgdm
