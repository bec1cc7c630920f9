// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "rcgdm/oracle.hpp"
#include "rcgdm/quadrature.hpp"

using namespace rcgdm;

TEST_CASE("schedule: alpha^2 + h = 1 and validation") {
    Rng rng(1);
    for (int k = 0; k < 10000; ++k) {
        const double t = rng.uniform(0.0, 20.0);
        const double a = DiffusionSchedule::alpha(t);
        CHECK(std::abs(a * a + DiffusionSchedule::h(t) - 1.0) < 1e-12);
    }
    CHECK_NOTHROW(DiffusionSchedule{}.validate());
    CHECK_THROWS_AS((DiffusionSchedule{10.0, 0.0, 0.005}.validate()), DomainError);
    CHECK_THROWS_AS((DiffusionSchedule{10.0, 0.01, 0.02}.validate()), ValidationError);
    CHECK_THROWS_AS((DiffusionSchedule{0.001, 0.01, 0.005}.validate()), ValidationError);
    CHECK_NOTHROW((DiffusionSchedule{0.01, 0.01, 0.005}.validate()));
}

TEST_CASE("b_matrix examples") {
    const SubspaceWorld w = testing::world(9, 4);
    const GaussianDesignOracle zero(w, Vector::Zero(4), 0.3);
    for (double t : {0.01, 0.5, 3.0}) CHECK(testing::max_abs(zero.b_matrix(t) - Matrix::Identity(4, 4)) < 1e-12);

    const SubspaceWorld w1 = testing::world(2, 1);
    const GaussianDesignOracle scalar(w1, Vector::Ones(1), 1.0);
    CHECK(scalar.b_matrix(std::log(2.0))(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    Matrix Sigma(3, 3);
    Sigma << 0.8, 0.1, 0.0, 0.1, 0.5, 0.2, 0.0, 0.2, 0.6;
    const SubspaceWorld w3 = testing::world(5, 3, 2, Sigma);
    const Vector b = Vector::LinSpaced(3, 1, 2);
    const GaussianDesignOracle o(w3, b, 0.4);
    const double t = 0.7, al = std::exp(-0.35), h = 1 - std::exp(-0.7);
    const Matrix Binv = al * al * Matrix::Identity(3, 3) + h / 0.16 * b * b.transpose() + h * Sigma.inverse();
    CHECK(testing::max_abs(o.b_matrix(t) * Binv - Matrix::Identity(3, 3)) < 1e-10);
    CHECK_THROWS_AS(o.b_matrix(0.0), DomainError);
}

TEST_CASE("analytic_score: stationary and orthogonal examples") {
    const SubspaceWorld w = testing::world(8, 3);
    const GaussianDesignOracle o(w, Vector::Zero(3), 0.5);
    const Vector x = w.A * Vector::LinSpaced(3, -1, 2);
    CHECK((o.analytic_score(x, 0.7, 0.4) + x).norm() < 1e-12);

    const GaussianDesignOracle o2(w, Vector::LinSpaced(3, 0.2, 0.9), 0.5);
    Vector e = Vector::Unit(8, 2);
    e -= w.A * (w.A.transpose() * e);
    // Off the support the score only adds the isotropic pull -x/h.
    for (double t : {0.05, 1.0, 4.0}) {
        const Vector diff = o2.analytic_score(e, -1.3, t) - o2.analytic_score(Vector::Zero(8), -1.3, t);
        CHECK((diff + e / DiffusionSchedule::h(t)).norm() < 1e-10);
    }
    CHECK_THROWS_AS(o2.analytic_score(e, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(o2.analytic_score(e, 0.0, -1.0), DomainError);
}

TEST_CASE("analytic_score: agrees with quadrature of the latent integral") {
    Matrix Sigma(1, 1);
    Sigma << 0.6;
    const SubspaceWorld w = testing::world(2, 1, 3, Sigma);
    const double beta = -0.7, nu = 0.4;
    const GaussianDesignOracle o(w, Vector::Constant(1, beta), nu);
    Rng rng(4);
    for (int k = 0; k < 50; ++k) {
        const Vector x = rng.normal_vector(2);
        const double y = rng.normal();
        const double t = rng.uniform(0.05, 3.0);
        const Vector ref = reference::richardson_gradient(
            [&](const Vector& v) { return reference::log_joint_density_1d(w, beta, nu, v, y, t); }, x, 1e-4);
        CHECK((o.analytic_score(x, y, t) - ref).norm() <= 1e-3 * ref.norm());
    }
}

TEST_CASE("analytic_score: decomposition, linearity, batch form") {
    const SubspaceWorld w = testing::world(10, 3);
    const Vector b = Vector::LinSpaced(3, 0.3, -0.5);
    const GaussianDesignOracle o(w, b, 0.35);
    Rng rng(5);
    const Vector x1 = rng.normal_vector(10), x2 = rng.normal_vector(10);
    const double y1 = 0.4, y2 = -1.1, t = 0.8;

    const Vector u = o.latent_head(w.A.transpose() * x1, y1, t);
    const Vector via_u = (w.A * u - x1) / DiffusionSchedule::h(t);
    CHECK((via_u - o.analytic_score(x1, y1, t)).norm() < 1e-10);

    const double c1 = 1.7, c2 = -0.6;
    const Vector lhs = o.analytic_score(c1 * x1 + c2 * x2, c1 * y1 + c2 * y2, t);
    const Vector rhs = c1 * o.analytic_score(x1, y1, t) + c2 * o.analytic_score(x2, y2, t);
    CHECK((lhs - rhs).norm() < 1e-9);

    Matrix X(2, 10);
    X.row(0) = x1.transpose();
    X.row(1) = x2.transpose();
    Vector y(2);
    y << y1, y2;
    const Matrix S = o.analytic_score_batch(X, y, t);
    CHECK((S.row(1).transpose() - o.analytic_score(x2, y2, t)).norm() < 1e-12);
}

TEST_CASE("conditional_latent_law examples") {
    const SubspaceWorld w = testing::world(6, 3);
    const GaussianDesignOracle o(w, Vector::Unit(3, 0), 1.0);
    const GaussianLaw l0 = o.conditional_latent_law(0.0);
    CHECK(l0.mean.norm() == 0.0);
    const GaussianLaw l2 = o.conditional_latent_law(2.0);
    CHECK((l2.mean - Vector::Unit(3, 0)).norm() < 1e-12);
    Matrix expected = Matrix::Identity(3, 3);
    expected(0, 0) = 0.5;
    CHECK(testing::max_abs(l2.cov - expected) < 1e-12);
    CHECK(testing::max_abs(l0.cov - l2.cov) == 0.0);
}

TEST_CASE("conditional_latent_law: regression slope over joint draws") {
    Matrix Sigma = Vector::LinSpaced(3, 0.9, 0.3).asDiagonal();
    const SubspaceWorld w = testing::world(6, 3, 8, Sigma);
    const Vector b = Vector::LinSpaced(3, 0.5, 1.0);
    const double nu = 0.5;
    const GaussianDesignOracle o(w, b, nu);
    Rng rng(9);
    const Eigen::Index n = 200000;
    const Matrix Z = sample_latent(Sigma, n, rng);
    Vector y = Z * b;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += nu * rng.normal();
    const Vector yc = y.array() - y.mean();
    const Vector slope = (Z.rowwise() - Z.colwise().mean()).transpose() * yc / yc.squaredNorm();
    const Vector oracle_slope = o.conditional_latent_law(1.0).mean;
    CHECK((slope - oracle_slope).norm() < 0.02 * oracle_slope.norm());
}

TEST_CASE("noised_conditional_law: limits and structure") {
    const SubspaceWorld w = testing::world(8, 3);
    const GaussianDesignOracle o(w, Vector::LinSpaced(3, 0.5, 1.0), 0.4);
    const GaussianLaw lat = o.conditional_latent_law(3.0);

    const GaussianLaw at0 = o.noised_conditional_law(3.0, 0.0);
    CHECK((at0.mean - w.A * lat.mean).norm() < 1e-12);
    CHECK(testing::max_abs(at0.cov - w.A * lat.cov * w.A.transpose()) < 1e-12);

    const GaussianLaw late = o.noised_conditional_law(3.0, 10.0);
    CHECK(late.mean.cwiseAbs().maxCoeff() <= std::exp(-5.0) * lat.mean.norm() + 1e-15);
    CHECK(testing::max_abs(late.cov - Matrix::Identity(8, 8)) < std::exp(-10.0) + 1e-12);

    // Off-support block is exactly h(t0) I.
    const double t0 = 0.01;
    const GaussianLaw n0 = o.noised_conditional_law(3.0, t0);
    const Matrix P = Matrix::Identity(8, 8) - w.A * w.A.transpose();
    CHECK(testing::max_abs(P * n0.cov * P - DiffusionSchedule::h(t0) * P) < 1e-12);
}

TEST_CASE("noised_conditional_law: matches forward-noised samples") {
    const SubspaceWorld w = testing::world(5, 2, 4, Matrix(Vector::LinSpaced(2, 0.9, 0.5).asDiagonal()));
    const GaussianDesignOracle o(w, Vector::LinSpaced(2, 1.0, -0.4), 0.5);
    const double a = 1.2, t = 0.3;
    const GaussianLaw lat = o.conditional_latent_law(a);
    Rng rng(12);
    const Eigen::Index n = 100000;
    Matrix Z = sample_latent(lat.cov, n, rng);
    Z.rowwise() += lat.mean.transpose();
    const Matrix X =
        DiffusionSchedule::alpha(t) * Z * w.A.transpose() + std::sqrt(DiffusionSchedule::h(t)) * rng.normal_matrix(n, 5);
    const Vector m = X.colwise().mean();
    const Matrix Xc = X.rowwise() - m.transpose();
    const Matrix C = Xc.transpose() * Xc / static_cast<double>(n - 1);
    const GaussianLaw law = o.noised_conditional_law(a, t);
    CHECK((m - law.mean).norm() < 0.01 * std::max(1.0, law.mean.norm()));
    CHECK((C - law.cov).norm() < 0.03 * law.cov.norm());
}

TEST_CASE("latent_second_moment examples") {
    const SubspaceWorld w = testing::world(10, 5);
    const GaussianDesignOracle o(w, Vector::Unit(5, 2), 1.0);
    CHECK(o.latent_second_moment(0.0) == doctest::Approx(4.5).epsilon(1e-12));

    const GaussianDesignOracle flat(w, Vector::Zero(5), 0.3);
    for (double a : {0.0, 1.0, 7.0}) CHECK(flat.latent_second_moment(a) == doctest::Approx(5.0).epsilon(1e-12));

    // Quadratic in a: second differences constant.
    const double m0 = o.latent_second_moment(0), m1 = o.latent_second_moment(1), m2 = o.latent_second_moment(2),
                 m3 = o.latent_second_moment(3);
    CHECK(std::abs((m3 - 2 * m2 + m1) - (m2 - 2 * m1 + m0)) < 1e-10);
}

TEST_CASE("latent_second_moment: MC over conditional draws") {
    Matrix Sigma = Vector::LinSpaced(4, 1.0, 0.5).asDiagonal();
    const SubspaceWorld w = testing::world(8, 4, 1, Sigma);
    const GaussianDesignOracle o(w, Vector::LinSpaced(4, 0.4, 0.8), 0.3);
    for (double a : {0.0, 2.0, 8.0}) {
        const GaussianLaw law = o.conditional_latent_law(a);
        Rng rng(20 + static_cast<std::uint64_t>(a));
        Matrix Z = sample_latent(law.cov, 100000, rng);
        Z.rowwise() += law.mean.transpose();
        const double mc = Z.rowwise().squaredNorm().mean();
        CHECK(std::abs(mc - o.latent_second_moment(a)) < 0.02 * o.latent_second_moment(a));
    }
}

TEST_CASE("distro_shift_surrogate examples") {
    const SubspaceWorld w = testing::world(8, 4);
    const GaussianDesignOracle o(w, Vector::Unit(4, 0), 1.0);
    const auto s = o.distro_shift_surrogate(4.0);
    CHECK(s.expected_sq_norm == doctest::Approx(3.5 + 4.0).epsilon(1e-12));
    CHECK(s.surrogate == doctest::Approx(std::sqrt(7.5 / 4.0)).epsilon(1e-12));

    // Pivot a^2 = q + nu^2 gives Tr(Sigma).
    CHECK(o.distro_shift_surrogate(std::sqrt(2.0)).expected_sq_norm == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(o.distro_shift_surrogate(0.0).surrogate <= o.distro_shift_surrogate(8.0).surrogate);
    // Closed form coincides with M(a).
    for (double a : {0.0, 1.0, 5.0})
        CHECK(o.distro_shift_surrogate(a).expected_sq_norm == doctest::Approx(o.latent_second_moment(a)));
    CHECK_THROWS_AS(GaussianDesignOracle(w, Vector::Unit(4, 0), 0.0), ValidationError);
}
