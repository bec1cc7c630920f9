// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rcgdm/checks.hpp"
#include "rcgdm/config.hpp"
#include "rcgdm/experiment.hpp"
#include "rcgdm/io.hpp"
#include "rcgdm/metrics.hpp"
#include "rcgdm/oracle.hpp"
#include "rcgdm/regression.hpp"
#include "rcgdm/sampler.hpp"
#include "rcgdm/world.hpp"

namespace py = pybind11;
using namespace rcgdm;

namespace {

py::tuple law_tuple(const GaussianLaw& law) { return py::make_tuple(law.mean, law.cov); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reward-conditioned diffusion on linear-subspace data";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<SubspaceWorld>(m, "World")
        .def_readonly("A", &SubspaceWorld::A)
        .def_readonly("Sigma", &SubspaceWorld::Sigma)
        .def_readonly("beta_star", &SubspaceWorld::beta_star)
        .def_readonly("theta_star", &SubspaceWorld::theta_star)
        .def_readonly("offsupport_coeff", &SubspaceWorld::offsupport_coeff)
        .def_property_readonly("D", &SubspaceWorld::D)
        .def_property_readonly("d", &SubspaceWorld::d)
        .def("rewards", [](const SubspaceWorld& w, const Matrix& X) { return true_rewards(w, X); }, py::arg("X"));

    m.def(
        "make_world",
        [](Eigen::Index D, Eigen::Index d, std::uint64_t seed, std::optional<Matrix> Sigma, double offsupport_coeff,
           const std::string& sign) {
            WorldConfig cfg;
            cfg.D = D;
            cfg.d = d;
            cfg.Sigma = std::move(Sigma);
            cfg.offsupport_coeff = offsupport_coeff;
            if (sign == "bonus")
                cfg.offsupport_sign = OffSupportSign::bonus;
            else if (sign != "penalty")
                throw ConfigError("sign must be 'penalty' or 'bonus'");
            return make_world(cfg, seed);
        },
        py::arg("D") = 64, py::arg("d") = 16, py::arg("seed") = 0, py::arg("Sigma") = py::none(),
        py::arg("offsupport_coeff") = 5.0, py::arg("sign") = "penalty");

    m.def(
        "generate_datasets",
        [](const SubspaceWorld& w, Eigen::Index n1, Eigen::Index n2, double sigma, std::uint64_t seed) {
            auto [U, L] = generate_datasets(w, n1, n2, sigma, seed);
            return py::make_tuple(U.X, L.X, L.y);
        },
        py::arg("world"), py::arg("n1"), py::arg("n2"), py::arg("sigma") = 0.1, py::arg("seed") = 0,
        "Returns (unlabeled X, labeled X, labels y).");

    py::class_<RidgeEstimate>(m, "RidgeEstimate")
        .def_readonly("theta_hat", &RidgeEstimate::theta_hat)
        .def_readonly("lam", &RidgeEstimate::lambda)
        .def_readonly("n2", &RidgeEstimate::n2)
        .def_readonly("Sigma_hat_lambda", &RidgeEstimate::Sigma_hat_lambda);

    m.def(
        "fit_ridge",
        [](const Matrix& X, const Vector& y, double lam) { return fit_ridge(LabeledDataset{X, y, 0.0}, lam); },
        py::arg("X"), py::arg("y"), py::arg("lam") = 1.0);
    m.def("latent_coefficients", &latent_coefficients, py::arg("world"), py::arg("estimate"));
    m.def("default_nu", &default_nu, py::arg("D"));

    py::class_<GaussianDesignOracle>(m, "GaussianOracle")
        .def(py::init<SubspaceWorld, Vector, double>(), py::arg("world"), py::arg("beta_hat"), py::arg("nu"))
        .def("score", &GaussianDesignOracle::analytic_score, py::arg("x"), py::arg("y"), py::arg("t"))
        .def("score_batch", &GaussianDesignOracle::analytic_score_batch, py::arg("X"), py::arg("y"), py::arg("t"))
        .def(
            "conditional_latent_law",
            [](const GaussianDesignOracle& o, double a) { return law_tuple(o.conditional_latent_law(a)); },
            py::arg("a"), "Mean and covariance of z given y = a.")
        .def(
            "noised_conditional_law",
            [](const GaussianDesignOracle& o, double a, double t) { return law_tuple(o.noised_conditional_law(a, t)); },
            py::arg("a"), py::arg("t"))
        .def("latent_second_moment", &GaussianDesignOracle::latent_second_moment, py::arg("a"))
        .def(
            "distro_shift_surrogate",
            [](const GaussianDesignOracle& o, double a) { return o.distro_shift_surrogate(a).surrogate; },
            py::arg("a"));

    m.def(
        "sample_oracle",
        [](const GaussianDesignOracle& o, double a, Eigen::Index n, double T, double t0, double eta,
           std::uint64_t seed) {
            py::gil_scoped_release release;
            return run_backward(AnalyticScore(o), a, n, DiffusionSchedule{T, t0, eta}, seed).X;
        },
        py::arg("oracle"), py::arg("a"), py::arg("n"), py::arg("T") = 10.0, py::arg("t0") = 0.01,
        py::arg("eta") = 0.005, py::arg("seed") = 0,
        "Backward sampling with the closed-form score; returns an n x D array.");

    m.def("subspace_angle", &subspace_angle, py::arg("V"), py::arg("A"));
    m.def("off_support_deviation", &off_support_deviation, py::arg("X"), py::arg("world"));
    m.def("spearman", &spearman, py::arg("x"), py::arg("y"));
    m.def("load_matrix", &io::load_matrix, py::arg("path"));

    m.def(
        "config_ini",
        [](const std::optional<std::filesystem::path>& path) {
            return to_ini(path ? load_config(*path) : RunConfig{});
        },
        py::arg("path") = py::none(), "Resolved configuration in canonical INI form.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config, const std::filesystem::path& out, bool force, bool dry_run) {
            const RunConfig c = load_config(config);
            std::ostringstream log;
            bool ran = false;
            {
                py::gil_scoped_release release;
                Experiment exp(c, out, log);
                ran = exp.pipeline({.dry_run = dry_run, .force = force});
                if (!dry_run) exp.figures();
            }
            return py::make_tuple(ran, log.str());
        },
        py::arg("config"), py::arg("out"), py::arg("force") = false, py::arg("dry_run") = false,
        "Runs every stage and writes figures. Returns (ran, log).");

    m.def(
        "validate",
        [](const std::vector<std::string>& names, std::uint64_t seed) {
            checks::CheckContext ctx;
            ctx.seed = seed;
            std::vector<checks::CheckResult> results;
            {
                py::gil_scoped_release release;
                results = checks::run(names, ctx);
            }
            py::list out;
            for (const auto& r : results) out.append(py::make_tuple(r.name, r.passed, r.detail));
            return out;
        },
        py::arg("names") = std::vector<std::string>{}, py::arg("seed") = 0,
        "Runs oracle checks; returns (name, passed, detail) tuples.");

#ifdef RCGDM_VERSION
    m.attr("__version__") = RCGDM_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
