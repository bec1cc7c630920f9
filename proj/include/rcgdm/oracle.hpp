// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>

#include "rcgdm/types.hpp"
#include "rcgdm/world.hpp"

namespace rcgdm {

/// Ornstein-Uhlenbeck forward process with g(t) = 1:
/// x_t | x_0 ~ N(alpha(t) x_0, h(t) I), alpha(t) = exp(-t/2), h(t) = 1 - exp(-t).
struct DiffusionSchedule {
    double T = 10.0;
    double t0 = 0.01;
    double eta = 0.005;

    static double alpha(double t) { return std::exp(-0.5 * t); }
    static double h(double t) { return -std::expm1(-t); }

    /// 0 < t0 <= T and 0 < eta <= t0. T == t0 is the degenerate zero-step
    /// schedule.
    void validate() const;
};

struct GaussianLaw {
    Vector mean;
    Matrix cov;
};

/// Closed-form quantities for z ~ N(0, Sigma), x = A z and pseudo labels
/// y = beta_hat^T z + N(0, nu^2).
class GaussianDesignOracle {
public:
    GaussianDesignOracle(SubspaceWorld world, Vector beta_hat, double nu);

    const SubspaceWorld& world() const { return world_; }
    const Vector& beta_hat() const { return beta_hat_; }
    double nu() const { return nu_; }

    /// B_t = (alpha^2 I + (h/nu^2) beta beta^T + h Sigma^{-1})^{-1}.
    Matrix b_matrix(double t) const;

    /// Latent part u(A^T x, y, t) = alpha B_t (alpha A^T x + (h/nu^2) y beta_hat),
    /// so that score = (A u - x) / h.
    Vector latent_head(const Eigen::Ref<const Vector>& latent, double y, double t) const;

    Vector analytic_score(const Eigen::Ref<const Vector>& x, double y, double t) const;

    /// Row-wise score for an n x D batch with shared (y, t).
    Matrix analytic_score_batch(const Matrix& X, const Vector& y, double t) const;

    /// Law of z given y_hat = a.
    GaussianLaw conditional_latent_law(double a) const;

    /// Law of x_t = alpha(t) A z + sqrt(h(t)) eps with z | y_hat = a.
    GaussianLaw noised_conditional_law(double a, double t) const;

    /// M(a) = E ||z||^2 under conditional_latent_law(a).
    double latent_second_moment(double a) const;

    struct Shift {
        double expected_sq_norm;  // E ||z||^2 given y_hat = a
        double surrogate;         // sqrt(expected_sq_norm / Tr(Sigma))
    };
    Shift distro_shift_surrogate(double a) const;

private:
    double quad_form() const;  // beta_hat^T Sigma beta_hat

    SubspaceWorld world_;
    Vector beta_hat_;
    double nu_;
    Matrix sigma_inv_;
};

}  // namespace rcgdm
