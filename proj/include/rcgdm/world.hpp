// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "rcgdm/types.hpp"

namespace rcgdm {

enum class OffSupportSign { penalty, bonus };

/// Ground truth of the linear-subspace model: x = A z with z ~ N(0, Sigma),
/// reward f*(x) = theta*^T x_par + s * c_perp * ||x_perp||^2.
struct SubspaceWorld {
    Matrix A;          // D x d, orthonormal columns
    Matrix Sigma;      // d x d, SPD with eigenvalues in (0, 1]
    Vector beta_star;  // unit norm
    Vector theta_star; // A * beta_star
    double offsupport_coeff = 5.0;
    OffSupportSign offsupport_sign = OffSupportSign::penalty;

    Eigen::Index D() const { return A.rows(); }
    Eigen::Index d() const { return A.cols(); }
    double sign() const { return offsupport_sign == OffSupportSign::penalty ? -1.0 : 1.0; }
};

struct WorldConfig {
    Eigen::Index D = 64;
    Eigen::Index d = 16;
    std::optional<Matrix> Sigma;  // identity when empty
    double offsupport_coeff = 5.0;
    OffSupportSign offsupport_sign = OffSupportSign::penalty;
};

struct LabeledDataset {
    Matrix X;  // n2 x D
    Vector y;
    double noise_sigma = 0.0;
};

struct UnlabeledDataset {
    Matrix X;  // n1 x D
};

/// Haar-distributed D x d matrix with orthonormal columns (thin QR of a
/// Gaussian matrix with the sign of diag(R) folded into Q).
Matrix sample_orthonormal(Eigen::Index D, Eigen::Index d, std::uint64_t seed);

SubspaceWorld make_world(const WorldConfig& config, std::uint64_t seed);

/// Throws ValidationError unless every SubspaceWorld invariant holds.
void check_world(const SubspaceWorld& world);

double true_reward(const SubspaceWorld& world, const Eigen::Ref<const Vector>& x);

/// Row-wise true_reward over an n x D matrix.
Vector true_rewards(const SubspaceWorld& world, const Matrix& X);

std::pair<Vector, Vector> decompose(const SubspaceWorld& world, const Eigen::Ref<const Vector>& x);

std::pair<UnlabeledDataset, LabeledDataset> generate_datasets(const SubspaceWorld& world, Eigen::Index n1,
                                                              Eigen::Index n2, double sigma,
                                                              std::uint64_t seed);

/// n x d draws from N(0, Sigma).
Matrix sample_latent(const Matrix& Sigma, Eigen::Index n, Rng& rng);

/// Largest row-wise ||(I - AA^T) x||.
double max_support_residual(const SubspaceWorld& world, const Matrix& X);

}  // namespace rcgdm
