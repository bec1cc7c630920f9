// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/regression.hpp"

#include <cmath>
#include <string>

#include "rcgdm/oracle.hpp"

namespace rcgdm {

namespace {

constexpr double kMaxCondition = 1e12;

double spd_trace_solve(const Matrix& M, const Matrix& rhs) {
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) throw ValidationError("coverage_trace: matrix is not positive definite");
    return llt.solve(rhs).trace();
}

}  // namespace

void check_psd(const Matrix& M, const char* what) {
    if (M.rows() != M.cols()) throw DimensionError(std::string(what) + ": matrix must be square");
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ValidationError(std::string(what) + ": matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
        throw ValidationError(std::string(what) + ": matrix is not positive semidefinite");
}

RidgeEstimate fit_ridge(const LabeledDataset& data, double lambda) {
    const Eigen::Index n = data.X.rows();
    const Eigen::Index D = data.X.cols();
    if (n < 1 || data.y.size() != n) throw DimensionError("fit_ridge: design and labels disagree in length");
    if (!(lambda >= 0.0)) throw ValidationError("fit_ridge: lambda must be >= 0");

    Matrix gram = Matrix::Zero(D, D);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(data.X.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += lambda;

    if (lambda == 0.0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > kMaxCondition)
            throw RankError("fit_ridge: X^T X is numerically singular; use lambda > 0");
    }

    // Least squares on [X; sqrt(lambda) I] rather than the normal equations:
    // at lambda = 1e-8 the Gram matrix has condition number ~1e11.
    Matrix stacked(n + D, D);
    stacked << data.X, std::sqrt(lambda) * Matrix::Identity(D, D);
    Vector rhs = Vector::Zero(n + D);
    rhs.head(n) = data.y;
    const Eigen::HouseholderQR<Matrix> qr(stacked);

    RidgeEstimate est;
    est.theta_hat = qr.solve(rhs);
    if (!est.theta_hat.allFinite()) throw RankError("fit_ridge: least-squares solve failed");
    est.lambda = lambda;
    est.n2 = n;
    est.Sigma_hat_lambda = gram / static_cast<double>(n);
    return est;
}

PseudoLabeledDataset pseudo_label(const UnlabeledDataset& unlabeled, const RidgeEstimate& est, double nu,
                                  std::uint64_t seed) {
    if (!(nu >= 0.0)) throw ValidationError("pseudo_label: nu must be >= 0");
    if (unlabeled.X.cols() != est.theta_hat.size()) throw DimensionError("pseudo_label: dimension mismatch");

    PseudoLabeledDataset out;
    out.X = unlabeled.X;
    out.y_hat = unlabeled.X * est.theta_hat;
    out.nu = nu;
    if (nu > 0.0) {
        Rng rng(derive_seed(seed, stream::pseudo_label));
        for (Eigen::Index i = 0; i < out.y_hat.size(); ++i) out.y_hat(i) += nu * rng.normal();
    }
    return out;
}

Vector latent_coefficients(const SubspaceWorld& world, const RidgeEstimate& est) {
    return world.A.transpose() * est.theta_hat;
}

double coverage_trace(const RidgeEstimate& est, const Matrix& Sigma_Pa) {
    if (Sigma_Pa.rows() != est.Sigma_hat_lambda.rows()) throw DimensionError("coverage_trace: dimension mismatch");
    check_psd(Sigma_Pa, "coverage_trace");
    return spd_trace_solve(est.Sigma_hat_lambda, Sigma_Pa);
}

double coverage_trace(const RidgeEstimate& est, const Matrix& A, const Matrix& Sigma2) {
    if (A.rows() != est.Sigma_hat_lambda.rows() || Sigma2.rows() != A.cols())
        throw DimensionError("coverage_trace: dimension mismatch");
    check_psd(Sigma2, "coverage_trace");
    const double shrink = est.lambda / static_cast<double>(est.n2);
    Matrix S1 = A.transpose() * est.Sigma_hat_lambda * A;
    S1.diagonal().array() -= shrink;
    return trace_reduced(shrink, S1, Sigma2);
}

double trace_full(double lambda, const Matrix& A, const Matrix& S1, const Matrix& S2) {
    Matrix M = A * S1 * A.transpose();
    M.diagonal().array() += lambda;
    return spd_trace_solve(M, A * S2 * A.transpose());
}

double trace_reduced(double lambda, const Matrix& S1, const Matrix& S2) {
    Matrix M = S1;
    M.diagonal().array() += lambda;
    return spd_trace_solve(M, S2);
}

Matrix target_covariance(const SubspaceWorld& world, const RidgeEstimate& est, double a, double nu) {
    const GaussianDesignOracle oracle(world, latent_coefficients(world, est), nu);
    const auto [mean, cov] = oracle.conditional_latent_law(a);
    const Matrix second = mean * mean.transpose() + cov;
    return world.A * second * world.A.transpose();
}

}  // namespace rcgdm
