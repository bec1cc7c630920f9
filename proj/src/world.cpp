// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/world.hpp"

#include <cmath>
#include <string>

namespace rcgdm {

Matrix sample_orthonormal(Eigen::Index D, Eigen::Index d, std::uint64_t seed) {
    if (d < 1 || D < 1) throw DimensionError("sample_orthonormal: dimensions must be positive");
    if (d > D)
        throw DimensionError("sample_orthonormal: d=" + std::to_string(d) + " exceeds D=" + std::to_string(D));

    Rng rng(seed);
    const Matrix G = rng.normal_matrix(D, d);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(D, d);
    const Matrix& R = qr.matrixQR();
    for (Eigen::Index j = 0; j < d; ++j)
        if (R(j, j) < 0.0) Q.col(j) *= -1.0;
    return Q;
}

void check_world(const SubspaceWorld& world) {
    const auto d = world.d();
    if (d < 1 || d > world.D()) throw DimensionError("world: need 1 <= d <= D");
    if (world.Sigma.rows() != d || world.Sigma.cols() != d) throw DimensionError("world: Sigma must be d x d");
    if (world.beta_star.size() != d || world.theta_star.size() != world.D())
        throw DimensionError("world: reward parameter shape mismatch");

    const Matrix gram = world.A.transpose() * world.A - Matrix::Identity(d, d);
    if (gram.cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("world: A^T A != I");
    if (std::abs(world.beta_star.norm() - 1.0) > 1e-10) throw ValidationError("world: ||beta*|| != 1");
    if ((world.Sigma - world.Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("world: Sigma not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(world.Sigma, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) throw ValidationError("world: Sigma is not positive definite");
    if (hi > 1.0 + 1e-12) throw ValidationError("world: Sigma eigenvalues must lie in (0, 1]");
    if (world.offsupport_coeff < 0.0) throw ValidationError("world: off-support coefficient must be >= 0");
}

SubspaceWorld make_world(const WorldConfig& config, std::uint64_t seed) {
    if (config.d < 1 || config.d > config.D) throw DimensionError("make_world: need 1 <= d <= D");

    SubspaceWorld world;
    world.A = sample_orthonormal(config.D, config.d, derive_seed(seed, stream::subspace));
    world.Sigma = config.Sigma.value_or(Matrix::Identity(config.d, config.d));

    Rng rng(derive_seed(seed, stream::beta));
    Vector beta = rng.normal_vector(config.d);
    world.beta_star = beta / beta.norm();
    world.theta_star = world.A * world.beta_star;
    world.offsupport_coeff = config.offsupport_coeff;
    world.offsupport_sign = config.offsupport_sign;
    check_world(world);
    return world;
}

double true_reward(const SubspaceWorld& world, const Eigen::Ref<const Vector>& x) {
    const Vector latent = world.A.transpose() * x;
    const Vector perp = x - world.A * latent;
    return world.beta_star.dot(latent) + world.sign() * world.offsupport_coeff * perp.squaredNorm();
}

Vector true_rewards(const SubspaceWorld& world, const Matrix& X) {
    const Matrix latent = X * world.A;
    const Matrix perp = X - latent * world.A.transpose();
    return latent * world.beta_star + world.sign() * world.offsupport_coeff * perp.rowwise().squaredNorm();
}

std::pair<Vector, Vector> decompose(const SubspaceWorld& world, const Eigen::Ref<const Vector>& x) {
    Vector parallel = world.A * (world.A.transpose() * x);
    Vector perp = x - parallel;
    return {std::move(parallel), std::move(perp)};
}

Matrix sample_latent(const Matrix& Sigma, Eigen::Index n, Rng& rng) {
    const Eigen::Index d = Sigma.rows();
    Eigen::LLT<Matrix> llt(Sigma);
    if (llt.info() != Eigen::Success) throw ValidationError("sample_latent: covariance is not positive definite");
    Matrix Z(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) Z(i, j) = rng.normal();
    return Z * llt.matrixL().transpose();
}

std::pair<UnlabeledDataset, LabeledDataset> generate_datasets(const SubspaceWorld& world, Eigen::Index n1,
                                                              Eigen::Index n2, double sigma,
                                                              std::uint64_t seed) {
    if (n1 < 1 || n2 < 1) throw ValidationError("generate_datasets: sample counts must be >= 1");
    if (!(sigma >= 0.0 && sigma < 1.0)) throw ValidationError("generate_datasets: noise std must lie in [0, 1)");

    UnlabeledDataset unlabeled;
    {
        Rng rng(derive_seed(seed, stream::unlabeled));
        unlabeled.X = sample_latent(world.Sigma, n1, rng) * world.A.transpose();
    }

    LabeledDataset labeled;
    labeled.noise_sigma = sigma;
    {
        Rng rng(derive_seed(seed, stream::labeled));
        labeled.X = sample_latent(world.Sigma, n2, rng) * world.A.transpose();
        labeled.y = true_rewards(world, labeled.X);
        if (sigma > 0.0)
            for (Eigen::Index i = 0; i < n2; ++i) labeled.y(i) += sigma * rng.normal();
    }
    return {std::move(unlabeled), std::move(labeled)};
}

double max_support_residual(const SubspaceWorld& world, const Matrix& X) {
    if (X.rows() == 0) return 0.0;
    const Matrix perp = X - (X * world.A) * world.A.transpose();
    return perp.rowwise().norm().maxCoeff();
}

}  // namespace rcgdm
