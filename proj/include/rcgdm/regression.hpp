// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "rcgdm/types.hpp"
#include "rcgdm/world.hpp"

namespace rcgdm {

struct RidgeEstimate {
    Vector theta_hat;
    double lambda = 1.0;
    Eigen::Index n2 = 0;
    Matrix Sigma_hat_lambda;  // (X^T X + lambda I) / n2
};

struct PseudoLabeledDataset {
    Matrix X;
    Vector y_hat;
    double nu = 0.0;
};

/// Ridge estimate of the linear reward parameter. The normal equations are
/// solved by Cholesky; lambda == 0 is accepted only when X^T X has condition
/// number below 1e12, otherwise RankError.
RidgeEstimate fit_ridge(const LabeledDataset& data, double lambda = 1.0);

/// y_hat_j = theta_hat^T x_j + N(0, nu^2), i.i.d. across rows.
PseudoLabeledDataset pseudo_label(const UnlabeledDataset& unlabeled, const RidgeEstimate& est, double nu,
                                  std::uint64_t seed);

/// Default pseudo-label noise 1/sqrt(D).
inline double default_nu(Eigen::Index D) { return 1.0 / std::sqrt(static_cast<double>(D)); }

/// beta_hat = A^T theta_hat.
Vector latent_coefficients(const SubspaceWorld& world, const RidgeEstimate& est);

/// Tr(Sigma_hat_lambda^{-1} Sigma_Pa) by a full D-dimensional SPD solve.
double coverage_trace(const RidgeEstimate& est, const Matrix& Sigma_Pa);

/// Same trace when every design row lies in col(A) and Sigma_Pa = A Sigma2 A^T:
/// Tr((lambda/n2 I_d + A^T X^T X A / n2)^{-1} Sigma2).
double coverage_trace(const RidgeEstimate& est, const Matrix& A, const Matrix& Sigma2);

/// Tr((lambda I_D + A S1 A^T)^{-1} A S2 A^T), dense.
double trace_full(double lambda, const Matrix& A, const Matrix& S1, const Matrix& S2);

/// Tr((lambda I_d + S1)^{-1} S2), the reduced form of trace_full.
double trace_reduced(double lambda, const Matrix& S1, const Matrix& S2);

/// Uncentered second moment of the target law P_a,
/// A (mu(a) mu(a)^T + Gamma) A^T with the pseudo-label conditional law.
Matrix target_covariance(const SubspaceWorld& world, const RidgeEstimate& est, double a, double nu);

/// Throws ValidationError unless M is symmetric PSD (relative tolerance).
void check_psd(const Matrix& M, const char* what);

}  // namespace rcgdm
