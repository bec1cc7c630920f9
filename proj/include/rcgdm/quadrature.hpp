// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "rcgdm/types.hpp"
#include "rcgdm/world.hpp"

// Brute-force references used only by validation checks and tests. Nothing in
// the generation pipeline calls into this namespace.
namespace rcgdm::reference {

/// Adaptive Simpson on [lo, hi] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol,
                        int max_depth = 50);

/// log p_t(x, y) for a one-dimensional latent (d = 1), by quadrature of
///   int N(x; alpha A z, h I) N(y; beta z, nu^2) N(z; 0, sigma2) dz
/// over z in [-10 sigma, 10 sigma].
double log_joint_density_1d(const SubspaceWorld& world, double beta, double nu, const Vector& x, double y,
                            double t);

/// Central differences with step `step`, refined once by Richardson
/// extrapolation.
Vector richardson_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step);

}  // namespace rcgdm::reference
