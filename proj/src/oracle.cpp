// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/oracle.hpp"

#include <string>

namespace rcgdm {

void DiffusionSchedule::validate() const {
    if (!(t0 > 0.0)) throw DomainError("schedule: t0 must be > 0");
    if (!(T >= t0)) throw ValidationError("schedule: need t0 <= T");
    if (!(eta > 0.0 && eta <= t0)) throw ValidationError("schedule: need 0 < eta <= t0");
    if (!std::isfinite(T)) throw ValidationError("schedule: T must be finite");
}

GaussianDesignOracle::GaussianDesignOracle(SubspaceWorld world, Vector beta_hat, double nu)
    : world_(std::move(world)), beta_hat_(std::move(beta_hat)), nu_(nu) {
    if (!(nu_ > 0.0)) throw ValidationError("oracle: nu must be > 0");
    if (beta_hat_.size() != world_.d()) throw DimensionError("oracle: beta_hat must have length d");
    Eigen::LLT<Matrix> llt(world_.Sigma);
    if (llt.info() != Eigen::Success) throw ValidationError("oracle: Sigma is singular");
    sigma_inv_ = llt.solve(Matrix::Identity(world_.d(), world_.d()));
}

double GaussianDesignOracle::quad_form() const { return beta_hat_.dot(world_.Sigma * beta_hat_); }

Matrix GaussianDesignOracle::b_matrix(double t) const {
    if (!(t > 0.0)) throw DomainError("b_matrix: t must be > 0");
    const double a = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    const Eigen::Index d = world_.d();
    Matrix prec = (h / (nu_ * nu_)) * beta_hat_ * beta_hat_.transpose() + h * sigma_inv_;
    prec.diagonal().array() += a * a;
    Eigen::LLT<Matrix> llt(prec);
    return llt.solve(Matrix::Identity(d, d));
}

Vector GaussianDesignOracle::latent_head(const Eigen::Ref<const Vector>& latent, double y, double t) const {
    const double a = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    const Vector mu = a * latent + (h / (nu_ * nu_)) * y * beta_hat_;
    return a * (b_matrix(t) * mu);
}

Vector GaussianDesignOracle::analytic_score(const Eigen::Ref<const Vector>& x, double y, double t) const {
    if (!(t > 0.0)) throw DomainError("analytic_score: t must be > 0 (score diverges at t = 0)");
    if (x.size() != world_.D()) throw DimensionError("analytic_score: x must have length D");
    const double h = DiffusionSchedule::h(t);
    const Vector u = latent_head(world_.A.transpose() * x, y, t);
    return (world_.A * u - x) / h;
}

Matrix GaussianDesignOracle::analytic_score_batch(const Matrix& X, const Vector& y, double t) const {
    if (!(t > 0.0)) throw DomainError("analytic_score: t must be > 0 (score diverges at t = 0)");
    const double a = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    const Matrix B = b_matrix(t);
    // Rows: mu_i^T = alpha (A^T x_i)^T + (h/nu^2) y_i beta^T; u_i^T = alpha mu_i^T B.
    Matrix mu = a * (X * world_.A);
    mu.noalias() += (h / (nu_ * nu_)) * y * beta_hat_.transpose();
    const Matrix U = a * (mu * B);
    return (U * world_.A.transpose() - X) / h;
}

GaussianLaw GaussianDesignOracle::conditional_latent_law(double a) const {
    const Vector sb = world_.Sigma * beta_hat_;
    const double denom = quad_form() + nu_ * nu_;
    GaussianLaw law;
    law.mean = sb * (a / denom);
    law.cov = world_.Sigma - sb * sb.transpose() / denom;
    law.cov = 0.5 * (law.cov + law.cov.transpose());
    return law;
}

GaussianLaw GaussianDesignOracle::noised_conditional_law(double a, double t) const {
    if (!(t >= 0.0)) throw DomainError("noised_conditional_law: t must be >= 0");
    const GaussianLaw latent = conditional_latent_law(a);
    const double al = DiffusionSchedule::alpha(t);
    const double h = DiffusionSchedule::h(t);
    GaussianLaw law;
    law.mean = al * (world_.A * latent.mean);
    law.cov = (al * al) * (world_.A * latent.cov * world_.A.transpose());
    law.cov.diagonal().array() += h;
    return law;
}

double GaussianDesignOracle::latent_second_moment(double a) const {
    const Vector sb = world_.Sigma * beta_hat_;
    const double denom = quad_form() + nu_ * nu_;
    const double lead = sb.squaredNorm() / (denom * denom);
    return lead * a * a + world_.Sigma.trace() - sb.squaredNorm() / denom;
}

GaussianDesignOracle::Shift GaussianDesignOracle::distro_shift_surrogate(double a) const {
    const Vector sb = world_.Sigma * beta_hat_;
    const double q = quad_form();
    const double denom = q + nu_ * nu_;
    Shift out;
    out.expected_sq_norm = (a * a - q - nu_ * nu_) * sb.squaredNorm() / (denom * denom) + world_.Sigma.trace();
    out.surrogate = std::sqrt(out.expected_sq_norm / world_.Sigma.trace());
    return out;
}

}  // namespace rcgdm
