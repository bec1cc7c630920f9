// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rcgdm/experiment.hpp"
#include "rcgdm/io.hpp"
#include "rcgdm/metrics.hpp"
#include "rcgdm/oracle.hpp"
#include "rcgdm/quadrature.hpp"
#include "rcgdm/regression.hpp"
#include "rcgdm/sampler.hpp"
#include "rcgdm/score.hpp"
#include "rcgdm/training.hpp"
#include "rcgdm/world.hpp"

namespace rcgdm::checks {

namespace {

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(3);
    out << v;
    return out.str();
}

Matrix random_spd(Eigen::Index d, Rng& rng, double floor = 0.1) {
    const Matrix G = rng.normal_matrix(d, d);
    return G * G.transpose() / static_cast<double>(d) + floor * Matrix::Identity(d, d);
}

/// Diagonal covariance with eigenvalues spread over [lo, 1].
Matrix diagonal_sigma(Eigen::Index d, double lo) {
    Vector diag(d);
    for (Eigen::Index i = 0; i < d; ++i)
        diag(i) = d == 1 ? 1.0 : 1.0 - (1.0 - lo) * static_cast<double>(i) / static_cast<double>(d - 1);
    return diag.asDiagonal();
}

SubspaceWorld world_with(Eigen::Index D, Eigen::Index d, Matrix Sigma, std::uint64_t seed) {
    WorldConfig cfg;
    cfg.D = D;
    cfg.d = d;
    cfg.Sigma = std::move(Sigma);
    return make_world(cfg, seed);
}

}  // namespace

CheckResult score_quadrature(const CheckContext& ctx) {
    CheckResult r{"score-quadrature"};
    Matrix Sigma(1, 1);
    Sigma << 0.7;
    const SubspaceWorld world = world_with(2, 1, Sigma, ctx.seed);
    const double beta = 0.8;
    const double nu = 0.5;
    const GaussianDesignOracle oracle(world, Vector::Constant(1, beta), nu);

    Rng rng(derive_seed(ctx.seed, stream::validation));
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Vector x = 1.5 * rng.normal_vector(2);
        const double y = rng.normal();
        const double t = rng.uniform(0.05, 3.0);
        const Vector s = oracle.analytic_score(x, y, t);
        const Vector ref = reference::richardson_gradient(
            [&](const Vector& xx) { return reference::log_joint_density_1d(world, beta, nu, xx, y, t); }, x, 1e-4);
        worst = std::max(worst, (s - ref).norm() / std::max(ref.norm(), 1e-12));
    }
    r.passed = worst <= 1e-3;
    r.detail = "max relative error " + fmt(worst) + " over 50 points (limit 1e-3)";
    return r;
}

CheckResult objective_equivalence(const CheckContext& ctx) {
    CheckResult r{"objective-equivalence"};
    const Matrix Sigma = diagonal_sigma(2, 0.5);
    const SubspaceWorld world = world_with(4, 2, Sigma, ctx.seed);
    const double nu = default_nu(world.D());
    const GaussianDesignOracle oracle(world, world.beta_star, nu);

    // Two fixed candidates: the zero score and the exact score for a
    // misspecified coefficient vector.
    const ZeroScore s1(world.D());
    Vector wrong = world.beta_star;
    wrong(0) += 0.5;
    const AnalyticScore s2(GaussianDesignOracle(world, wrong, 2.0 * nu));

    const Eigen::Index n_mc = 100000;
    const DiffusionSchedule schedule;
    const std::uint64_t seed_a = derive_seed(ctx.seed, 1);
    const std::uint64_t seed_b = derive_seed(ctx.seed, 2);

    // Independent draws for the two objectives.
    const Vector den = objective_samples(s1, oracle, n_mc, schedule, seed_a, Objective::denoising) -
                       objective_samples(s2, oracle, n_mc, schedule, seed_a, Objective::denoising);
    const Vector exa = objective_samples(s1, oracle, n_mc, schedule, seed_b, Objective::explicit_score) -
                       objective_samples(s2, oracle, n_mc, schedule, seed_b, Objective::explicit_score);
    const McEstimate d_den = summarize(den);
    const McEstimate d_exa = summarize(exa);
    const double combined = std::hypot(d_den.std_error, d_exa.std_error);
    const double gap = std::abs(d_den.mean - d_exa.mean);

    // Same draws for both objectives.
    const Vector exa_paired = objective_samples(s1, oracle, n_mc, schedule, seed_a, Objective::explicit_score) -
                              objective_samples(s2, oracle, n_mc, schedule, seed_a, Objective::explicit_score);
    const McEstimate paired = summarize(den - exa_paired);

    const bool independent_ok = gap <= 3.0 * combined;
    const bool paired_ok = std::abs(paired.mean) <= 3.0 * paired.std_error;
    r.passed = independent_ok && paired_ok;
    r.detail = "denoising diff " + fmt(d_den.mean) + ", explicit diff " + fmt(d_exa.mean) + ", gap " + fmt(gap) +
               " (3 SE = " + fmt(3.0 * combined) + "); paired gap " + fmt(paired.mean) + " (3 SE = " +
               fmt(3.0 * paired.std_error) + ")";
    return r;
}

CheckResult sampler_moments(const CheckContext& ctx) {
    CheckResult r{"sampler-moments"};
    const SubspaceWorld world = world_with(4, 2, diagonal_sigma(2, 0.5), ctx.seed);
    const GaussianDesignOracle oracle(world, world.beta_star, default_nu(world.D()));
    const DiffusionSchedule schedule{10.0, 0.01, 0.005};
    const double a = 2.0;
    const SampleBatch batch =
        run_backward(AnalyticScore(oracle), a, 4096, schedule, derive_seed(ctx.seed, stream::sampler));
    const GaussianLaw law = oracle.noised_conditional_law(a, schedule.t0);

    const Vector mean = batch.X.colwise().mean();
    const Matrix centered = batch.X.rowwise() - mean.transpose();
    const Matrix cov = centered.transpose() * centered / static_cast<double>(batch.X.rows() - 1);
    const double mean_err = (mean - law.mean).cwiseAbs().maxCoeff();
    const double cov_err = (cov - law.cov).norm() / law.cov.norm();
    r.passed = mean_err <= 0.1 && cov_err <= 0.1;
    r.detail = "max mean error " + fmt(mean_err) + " (limit 0.1), covariance relative error " + fmt(cov_err) +
               " (limit 0.1)";
    return r;
}

CheckResult trace_identity(const CheckContext& ctx) {
    CheckResult r{"trace-identity"};
    const Eigen::Index D = 12, d = 5;
    Rng rng(derive_seed(ctx.seed, stream::validation));
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Matrix A = sample_orthonormal(D, d, derive_seed(ctx.seed, 1000 + k));
        const Matrix S1 = random_spd(d, rng);
        const Matrix S2 = random_spd(d, rng);
        const double lambda = rng.uniform(0.1, 10.0);
        const double full = trace_full(lambda, A, S1, S2);
        const double reduced = trace_reduced(lambda, S1, S2);
        worst = std::max(worst, std::abs(full - reduced) / std::abs(full));

        // Same identity through the ridge-estimate entry points, with design
        // rows confined to col(A).
        RidgeEstimate est;
        est.lambda = lambda;
        est.n2 = 4 * d;
        const Matrix X = rng.normal_matrix(est.n2, d) * A.transpose();
        est.Sigma_hat_lambda = (X.transpose() * X + lambda * Matrix::Identity(D, D)) / static_cast<double>(est.n2);
        const double c_full = coverage_trace(est, A * S2 * A.transpose());
        const double c_reduced = coverage_trace(est, A, S2);
        worst = std::max(worst, std::abs(c_full - c_reduced) / std::abs(c_full));
    }
    r.passed = worst <= 1e-8;
    r.detail = "max relative disagreement " + fmt(worst) + " over 100 instances (limit 1e-8)";
    return r;
}

CheckResult latent_moments(const CheckContext& ctx) {
    CheckResult r{"latent-moments"};
    const Eigen::Index n = 100000;
    const SubspaceWorld world = world_with(16, 4, diagonal_sigma(4, 0.4), ctx.seed);
    Rng rng(derive_seed(ctx.seed, stream::validation));
    Vector beta_hat = world.beta_star + 0.2 * rng.normal_vector(world.d());
    const double nu = default_nu(world.D());
    const GaussianDesignOracle oracle(world, beta_hat, nu);

    // Joint draws of (z, y_hat); the conditional law is recovered by linear
    // regression of z on y_hat.
    const Matrix Z = sample_latent(world.Sigma, n, rng);
    Vector y = Z * beta_hat;
    for (Eigen::Index i = 0; i < n; ++i) y(i) += nu * rng.normal();
    const double ybar = y.mean();
    const Vector zbar = Z.colwise().mean();
    const Vector yc = y.array() - ybar;
    const Matrix Zc = Z.rowwise() - zbar.transpose();
    const Vector slope = Zc.transpose() * yc / yc.squaredNorm();
    const Matrix resid = Zc - yc * slope.transpose();
    const Matrix gamma_mc = resid.transpose() * resid / static_cast<double>(n - 2);

    double worst = 0.0;
    std::ostringstream detail;
    for (double a : {0.0, 2.0, 8.0}) {
        const GaussianLaw law = oracle.conditional_latent_law(a);
        const Vector mu_mc = zbar + slope * (a - ybar);
        const double m_joint = mu_mc.squaredNorm() + gamma_mc.trace();
        const double m = oracle.latent_second_moment(a);

        Rng draw_rng(derive_seed(ctx.seed, 100 + static_cast<std::uint64_t>(a)));
        Matrix W = sample_latent(law.cov, n, draw_rng);
        W.rowwise() += law.mean.transpose();
        const double m_draws = W.rowwise().squaredNorm().mean();

        const double e_joint = std::abs(m_joint - m) / m;
        const double e_draws = std::abs(m_draws - m) / m;
        const double e_cov = (gamma_mc - law.cov).norm() / law.cov.norm();
        worst = std::max({worst, e_joint, e_draws, e_cov});
        detail << "a=" << a << ": M " << fmt(m) << " vs " << fmt(m_joint) << "/" << fmt(m_draws) << "; ";
    }
    const Vector slope_oracle = oracle.conditional_latent_law(1.0).mean - oracle.conditional_latent_law(0.0).mean;
    worst = std::max(worst, (slope - slope_oracle).norm() / slope_oracle.norm());
    r.passed = worst <= 0.02;
    detail << "max relative error " << fmt(worst) << " (limit 0.02)";
    r.detail = detail.str();
    return r;
}

namespace {

/// Largest relative error between the analytic directional derivative and a
/// central difference over `directions` random unit directions.
double directional_error(EncoderDecoderScore model, const Matrix& X, const Vector& y, const Vector& t,
                         const Matrix& target, double step, int directions, Rng& rng) {
    Vector grad = Vector::Zero(model.num_params());
    model.squared_error(X, y, t, target, &grad);
    const Vector theta = model.parameters();
    double worst = 0.0;
    for (int k = 0; k < directions; ++k) {
        const Vector v = rng.normal_vector(theta.size()).normalized();
        model.set_parameters(theta + step * v);
        const double up = model.squared_error(X, y, t, target, nullptr);
        model.set_parameters(theta - step * v);
        const double down = model.squared_error(X, y, t, target, nullptr);
        const double fd = (up - down) / (2.0 * step);
        const double an = grad.dot(v);
        worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-8));
    }
    return worst;
}

}  // namespace

CheckResult gradient_check(const CheckContext& ctx) {
    CheckResult r{"gradient-check"};
    const Eigen::Index D = 8, d = 3, n = 16;
    Rng rng(derive_seed(ctx.seed, stream::validation));
    const Matrix X = rng.normal_matrix(n, D);
    const Vector y = rng.normal_vector(n);
    Vector t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = rng.uniform(0.05, 5.0);
    const Matrix target = rng.normal_matrix(n, D);

    EncoderDecoderScore covering = make_covering_model(D, d, 0.5, ctx.seed);
    covering.set_V(covering.V() + 0.1 * rng.normal_matrix(D, d));
    auto& head = dynamic_cast<CoveringHead&>(covering.head());
    head.set_precision(random_spd(d, rng, 0.5));
    head.set_beta(rng.normal_vector(d));
    const double e_cov = directional_error(covering, X, y, t, target, 1e-5, 20, rng);

    EncoderDecoderScore mlp = make_mlp_model(D, d, {16, 16}, ctx.seed);
    mlp.set_V(mlp.V() + 0.1 * rng.normal_matrix(D, d));
    const double e_mlp = directional_error(mlp, X, y, t, target, 1e-6, 20, rng);

    r.passed = e_cov <= 1e-4 && e_mlp <= 1e-3;
    r.detail = "covering max relative error " + fmt(e_cov) + " (limit 1e-4), mlp " + fmt(e_mlp) + " (limit 1e-3)";
    return r;
}

CheckResult artifacts(const CheckContext& ctx) {
    CheckResult r{"artifacts"};
    const RunLayout layout{ctx.run_dir};
    if (ctx.run_dir.empty() || !fs::exists(layout.manifest())) {
        r.passed = true;
        r.detail = "no run manifest at " + layout.manifest().string() + "; nothing to verify";
        return r;
    }
    const auto manifest = nlohmann::json::parse(io::read_file(layout.manifest()));
    std::vector<std::string> problems;
    std::size_t loaded = 0;
    for (const auto& [rel, hash] : manifest.at("artifacts").items()) {
        const fs::path p = layout.root / rel;
        if (!fs::exists(p)) {
            problems.push_back("missing " + rel);
            continue;
        }
        if (io::sha256_file(p) != hash.get<std::string>()) problems.push_back("hash mismatch " + rel);
        try {
            if (p.filename() == "score.model") {
                io::load_score_model(p);
                ++loaded;
            } else if (p.filename() == "ridge.model") {
                io::load_ridge(p);
                ++loaded;
            } else if (p.filename() == "world.model") {
                load_world(p);
                ++loaded;
            }
        } catch (const Error& e) {
            problems.push_back("load error " + rel + ": " + e.what());
        }
    }
    r.passed = problems.empty();
    if (r.passed) {
        r.detail = std::to_string(manifest.at("artifacts").size()) + " artifacts hash-match, " +
                   std::to_string(loaded) + " model files load";
    } else {
        for (std::size_t i = 0; i < problems.size(); ++i) r.detail += (i ? "; " : "") + problems[i];
    }
    return r;
}

const std::vector<Check>& registry() {
    static const std::vector<Check> checks = {
        {"score-quadrature", score_quadrature}, {"objective-equivalence", objective_equivalence},
        {"sampler-moments", sampler_moments},   {"trace-identity", trace_identity},
        {"latent-moments", latent_moments},     {"gradient-check", gradient_check},
        {"artifacts", artifacts}};
    return checks;
}

std::vector<CheckResult> run(const std::vector<std::string>& names, const CheckContext& ctx) {
    std::vector<const Check*> selected;
    for (const auto& name : names) {
        const auto it = std::find_if(registry().begin(), registry().end(),
                                     [&](const Check& c) { return c.name == name; });
        if (it == registry().end()) {
            std::string known;
            for (const auto& c : registry()) known += (known.empty() ? "" : ", ") + c.name;
            throw ConfigError("unknown check '" + name + "' (known: " + known + ")");
        }
        selected.push_back(&*it);
    }
    if (names.empty())
        for (const auto& c : registry()) selected.push_back(&c);

    std::vector<CheckResult> results;
    for (const Check* c : selected) {
        const auto start = std::chrono::steady_clock::now();
        CheckResult res;
        try {
            res = c->run(ctx);
        } catch (const std::exception& e) {
            res.name = c->name;
            res.passed = false;
            res.detail = std::string("error: ") + e.what();
        }
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        results.push_back(std::move(res));
    }
    return results;
}

}  // namespace rcgdm::checks
