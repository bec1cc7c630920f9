// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.hpp"

using namespace rcgdm;

TEST_CASE("sample_orthonormal: square case is orthogonal") {
    const Matrix A = sample_orthonormal(3, 3, 11);
    CHECK(testing::max_abs(A.transpose() * A - Matrix::Identity(3, 3)) < 1e-12);
    CHECK(testing::max_abs(A * A.transpose() - Matrix::Identity(3, 3)) < 1e-12);
}

TEST_CASE("sample_orthonormal: D=2, d=1 gives a unit vector") {
    const Matrix A = sample_orthonormal(2, 1, 5);
    CHECK(A.col(0).norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("sample_orthonormal: all 120 column pairs orthogonal at D=64, d=16") {
    const Matrix A = sample_orthonormal(64, 16, 3);
    int pairs = 0;
    for (int i = 0; i < 16; ++i) {
        CHECK(std::abs(A.col(i).norm() - 1.0) < 1e-10);
        for (int j = i + 1; j < 16; ++j, ++pairs) CHECK(std::abs(A.col(i).dot(A.col(j))) < 1e-10);
    }
    CHECK(pairs == 120);
}

TEST_CASE("sample_orthonormal: d > D is a dimension error") {
    CHECK_THROWS_AS(sample_orthonormal(3, 4, 0), DimensionError);
}

TEST_CASE("sample_orthonormal: deterministic per seed, distinct across seeds") {
    CHECK(sample_orthonormal(10, 3, 42) == sample_orthonormal(10, 3, 42));
    CHECK(sample_orthonormal(10, 3, 42) != sample_orthonormal(10, 3, 43));
}

TEST_CASE("make_world: defaults") {
    const SubspaceWorld w = make_world(WorldConfig{}, 0);
    CHECK(w.D() == 64);
    CHECK(w.d() == 16);
    CHECK(w.Sigma == Matrix::Identity(16, 16));
    CHECK(w.offsupport_coeff == 5.0);
    CHECK(w.offsupport_sign == OffSupportSign::penalty);
    CHECK(std::abs(w.beta_star.norm() - 1.0) < 1e-10);
    CHECK(std::abs(w.theta_star.norm() - 1.0) < 1e-10);
    CHECK(testing::max_abs(w.A.transpose() * w.A - Matrix::Identity(16, 16)) < 1e-10);
}

TEST_CASE("make_world: D == d gives a square orthogonal A") {
    const SubspaceWorld w = testing::world(5, 5);
    CHECK(testing::max_abs(w.A * w.A.transpose() - Matrix::Identity(5, 5)) < 1e-12);
    const Vector x = Vector::LinSpaced(5, -1, 1);
    CHECK(decompose(w, x).second.norm() < 1e-12);
}

TEST_CASE("make_world: invalid covariance is rejected") {
    Matrix bad = Matrix::Identity(3, 3);
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(testing::world(6, 3, 0, bad), ValidationError);
    Matrix big = Matrix::Identity(3, 3) * 2.0;
    CHECK_THROWS_AS(testing::world(6, 3, 0, big), ValidationError);
    Matrix asym = Matrix::Identity(3, 3);
    asym(0, 1) = 0.3;
    CHECK_THROWS_AS(testing::world(6, 3, 0, asym), ValidationError);
}

TEST_CASE("make_world: beta* is uniform on the sphere") {
    // 10^5 draws with distinct seeds; mean vector near zero, norms one.
    const int n = 100000;
    Vector mean = Vector::Zero(4);
    double norm_mean = 0.0;
    for (int s = 0; s < n; ++s) {
        Rng rng(derive_seed(static_cast<std::uint64_t>(s), stream::beta));
        const Vector b = rng.normal_vector(4).normalized();
        mean += b;
        norm_mean += b.norm();
    }
    mean /= n;
    CHECK(norm_mean / n == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mean.cwiseAbs().maxCoeff() < 0.02);
    // make_world uses the same stream.
    Rng rng(derive_seed(9, stream::beta));
    CHECK((testing::world(8, 4, 9).beta_star - rng.normal_vector(4).normalized()).norm() < 1e-15);
}

TEST_CASE("true_reward: on-support and off-support examples") {
    const SubspaceWorld w = testing::world(6, 2);
    const Vector z = Vector::LinSpaced(2, 0.3, -0.7);
    const Vector x = w.A * z;
    CHECK(true_reward(w, x) == doctest::Approx(w.theta_star.dot(x)).epsilon(1e-12));

    // Unit vector orthogonal to col(A).
    Vector e = Vector::Unit(6, 0);
    e -= w.A * (w.A.transpose() * e);
    e.normalize();
    CHECK(true_reward(w, e) == doctest::Approx(-5.0).epsilon(1e-12));

    SubspaceWorld bonus = w;
    bonus.offsupport_sign = OffSupportSign::bonus;
    CHECK(true_reward(bonus, e) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("true_reward: matches a Gram-Schmidt projector") {
    const SubspaceWorld w = testing::world(6, 2, 21);
    // Independent basis of col(A): Gram-Schmidt on A * M for an invertible M.
    Matrix M(2, 2);
    M << 2.0, 1.0, -0.5, 3.0;
    const Matrix B = w.A * M;
    Vector q1 = B.col(0) / B.col(0).norm();
    Vector q2 = B.col(1) - q1.dot(B.col(1)) * q1;
    q2.normalize();
    const Matrix P = q1 * q1.transpose() + q2 * q2.transpose();
    Rng rng(1);
    for (int k = 0; k < 20; ++k) {
        const Vector x = rng.normal_vector(6);
        const Vector perp = x - P * x;
        const double expected = w.theta_star.dot(P * x) - 5.0 * perp.squaredNorm();
        CHECK(true_reward(w, x) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("true_reward is linear in the latent") {
    const SubspaceWorld w = testing::world(10, 3);
    Rng rng(2);
    const Vector z1 = rng.normal_vector(3), z2 = rng.normal_vector(3);
    CHECK(std::abs(true_reward(w, w.A * (z1 + z2)) - true_reward(w, w.A * z1) - true_reward(w, w.A * z2)) < 1e-9);
}

TEST_CASE("decompose: projections, orthogonality, Pythagoras, idempotence") {
    const SubspaceWorld w = testing::world(12, 4);
    Rng rng(3);
    const Vector z = rng.normal_vector(4);
    auto [par, perp] = decompose(w, w.A * z);
    CHECK((par - w.A * z).norm() < 1e-12);
    CHECK(perp.norm() < 1e-12);

    const Vector x = rng.normal_vector(12);
    std::tie(par, perp) = decompose(w, x);
    CHECK(std::abs(par.dot(perp)) < 1e-10);
    CHECK(std::abs(x.squaredNorm() - par.squaredNorm() - perp.squaredNorm()) < 1e-9);

    auto [par2, perp2] = decompose(w, par);
    CHECK((par2 - par).norm() < 1e-12);
    CHECK(perp2.norm() < 1e-12);

    auto [par3, perp3] = decompose(w, perp);
    CHECK(par3.norm() < 1e-12);
    CHECK((perp3 - perp).norm() < 1e-12);
}

TEST_CASE("generate_datasets: sizes, support, noiseless labels, determinism") {
    const SubspaceWorld w = testing::world(16, 4);
    auto [U, L] = generate_datasets(w, 300, 200, 0.0, 5);
    CHECK(U.X.rows() == 300);
    CHECK(L.X.rows() == 200);
    CHECK(max_support_residual(w, U.X) < 1e-8);
    CHECK(max_support_residual(w, L.X) < 1e-8);
    CHECK(((L.X * w.theta_star) - L.y).cwiseAbs().maxCoeff() < 1e-12);

    auto [U2, L2] = generate_datasets(w, 300, 200, 0.0, 5);
    CHECK(U.X == U2.X);
    CHECK(L.y == L2.y);
    CHECK_THROWS_AS(generate_datasets(w, 10, 10, 1.0, 0), ValidationError);
    CHECK_THROWS_AS(generate_datasets(w, 0, 10, 0.1, 0), ValidationError);
}

TEST_CASE("generate_datasets: latent covariance matches Sigma") {
    Matrix Sigma(3, 3);
    Sigma << 0.7, 0.2, 0.0, 0.2, 0.6, -0.1, 0.0, -0.1, 0.4;
    const SubspaceWorld w = testing::world(7, 3, 4, Sigma);
    auto [U, L] = generate_datasets(w, 100000, 10, 0.1, 8);
    const Matrix Z = U.X * w.A;
    const Matrix C = Z.transpose() * Z / static_cast<double>(Z.rows());
    CHECK(testing::max_abs(C - Sigma) < 0.03);
}

TEST_CASE("generate_datasets: label noise has the requested scale") {
    const SubspaceWorld w = testing::world(8, 2);
    auto [U, L] = generate_datasets(w, 1, 50000, 0.3, 9);
    const Vector resid = L.y - true_rewards(w, L.X);
    const double var = resid.squaredNorm() / static_cast<double>(resid.size());
    CHECK(var == doctest::Approx(0.09).epsilon(0.03));
}

TEST_CASE("derive_seed separates streams") {
    CHECK(derive_seed(1, stream::unlabeled) != derive_seed(1, stream::labeled));
    CHECK(derive_seed(1, stream::unlabeled) != derive_seed(2, stream::unlabeled));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
