// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rcgdm::reference {

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol, int max_depth) {
    const double fa = f(lo);
    const double fb = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, lo, hi, fa, fm, fb, whole, tol, max_depth);
}

double log_joint_density_1d(const SubspaceWorld& world, double beta, double nu, const Vector& x, double y,
                            double t) {
    if (world.d() != 1) throw DimensionError("log_joint_density_1d: requires d = 1");
    const double alpha = std::exp(-0.5 * t);
    const double h = 1.0 - std::exp(-t);
    const double var_z = world.Sigma(0, 0);
    const double sd_z = std::sqrt(var_z);
    const Vector a = world.A.col(0);
    const auto D = static_cast<double>(world.D());

    auto log_integrand = [&](double z) {
        const double data = -(x - alpha * z * a).squaredNorm() / (2.0 * h);
        const double label = -(y - beta * z) * (y - beta * z) / (2.0 * nu * nu);
        const double prior = -z * z / (2.0 * var_z);
        return data + label + prior;
    };
    const double log_norm = -0.5 * D * std::log(2.0 * std::numbers::pi * h) -
                            0.5 * std::log(2.0 * std::numbers::pi * nu * nu) -
                            0.5 * std::log(2.0 * std::numbers::pi * var_z);

    // Shift by the grid maximum so the integrand peaks near 1.
    const double lo = -10.0 * sd_z;
    const double hi = 10.0 * sd_z;
    constexpr int kGrid = 4000;
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i) peak = std::max(peak, log_integrand(lo + (hi - lo) * i / kGrid));

    auto f = [&](double z) { return std::exp(log_integrand(z) - peak); };
    constexpr int kPanels = 400;
    double total = 0.0;
    const double width = (hi - lo) / kPanels;
    for (int p = 0; p < kPanels; ++p) total += adaptive_simpson(f, lo + p * width, lo + (p + 1) * width, 1e-15);
    return peak + std::log(total) + log_norm;
}

Vector richardson_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double step) {
    Vector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        auto central = [&](double s) {
            Vector xp = x;
            Vector xm = x;
            xp(i) += s;
            xm(i) -= s;
            return (f(xp) - f(xm)) / (2.0 * s);
        };
        const double coarse = central(step);
        const double fine = central(0.5 * step);
        g(i) = (4.0 * fine - coarse) / 3.0;
    }
    return g;
}

}  // namespace rcgdm::reference
