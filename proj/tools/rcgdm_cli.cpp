// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

// rcgdm: command-line driver for reward-conditioned generation runs.
//
// Exit codes: 0 ok, 2 config error, 3 compute error, 4 validation failure.

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rcgdm/checks.hpp"
#include "rcgdm/config.hpp"
#include "rcgdm/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kComputeError = 3;
constexpr int kValidationFailure = 4;

struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool dry_run = false;
    bool force = false;
    std::vector<std::string> checks;
};

rcgdm::RunConfig resolve(const Args& args) {
    rcgdm::RunConfig config = args.config.empty() ? rcgdm::RunConfig{} : rcgdm::load_config(args.config);
    if (args.seed) config.seeds = {*args.seed};
    config.validate();
    return config;
}

void require(const std::vector<rcgdm::fs::path>& inputs, const std::string& upstream) {
    for (const auto& p : inputs)
        if (!rcgdm::fs::exists(p))
            throw rcgdm::StageError(upstream, "missing " + p.string() + "; run `rcgdm " + upstream +
                                                  "` with the same --config/--out first");
}

int run_stage(const std::string& stage, const Args& args) {
    const rcgdm::RunConfig config = resolve(args);
    rcgdm::Experiment exp(config, rcgdm::resolve_out_dir(config, args.out), std::cout);
    const auto& L = exp.layout();
    for (std::uint64_t seed : config.seeds) {
        std::cout << stage << " seed " << seed << "\n";
        if (stage == "gen-data") {
            exp.gen_data(seed);
        } else if (stage == "train-reward") {
            require({L.labeled_x(seed), L.labeled_y(seed), L.unlabeled(seed)}, "gen-data");
            exp.train_reward(seed);
        } else if (stage == "train-score") {
            require({L.unlabeled(seed)}, "gen-data");
            require({L.curated_y(seed)}, "train-reward");
            exp.train_score(seed);
        } else {
            require({L.world(seed), L.unlabeled(seed)}, "gen-data");
            require({L.ridge(seed), L.curated_y(seed)}, "train-reward");
            require({L.score(seed)}, "train-score");
            exp.sample(seed);
        }
    }
    return kOk;
}

int run_validate(const Args& args) {
    rcgdm::checks::CheckContext ctx;
    ctx.seed = args.seed.value_or(0);
    if (!args.out.empty() || !args.config.empty()) {
        const rcgdm::RunConfig config = resolve(args);
        ctx.run_dir = rcgdm::resolve_out_dir(config, args.out);
    }
    const auto results = rcgdm::checks::run(args.checks, ctx);
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(22) << r.name << std::right
                  << std::fixed << std::setprecision(2) << std::setw(8) << r.seconds << " s  " << r.detail
                  << std::defaultfloat << "\n";
        all = all && r.passed;
    }
    if (!all) {
        for (const auto& r : results)
            if (!r.passed) std::cerr << "check failed: " << r.name << "\n";
        return kValidationFailure;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward-conditioned diffusion on linear-subspace data"};
    app.require_subcommand(1);
    Args args;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "INI config file (defaults when omitted)")->check(CLI::ExistingFile);
        sub->add_option("--seed", args.seed, "Run only this seed");
        sub->add_option("--out", args.out, "Output directory (else [output] dir, $RCGDM_OUT, ./runs)");
    };

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage for every seed and a value");
    common(pipeline);
    pipeline->add_flag("--dry-run", args.dry_run, "Validate the config and write the manifest only");
    pipeline->add_flag("--force", args.force, "Recompute even when the run is complete");

    auto* figures = app.add_subcommand("figures", "Write curve CSVs, histograms and SVG plots");
    common(figures);

    auto* validate = app.add_subcommand("validate", "Run oracle and property checks");
    common(validate);
    validate->add_option("--check", args.checks, "Run only the named check (repeatable)");

    std::vector<CLI::App*> stages;
    for (const char* name : {"gen-data", "train-reward", "train-score", "sample"}) {
        auto* sub = app.add_subcommand(name, std::string("Run the ") + name + " stage");
        common(sub);
        stages.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*pipeline) {
            const rcgdm::RunConfig config = resolve(args);
            rcgdm::Experiment exp(config, rcgdm::resolve_out_dir(config, args.out), std::cout);
            exp.pipeline({args.dry_run, args.force});
            return kOk;
        }
        if (*figures) {
            const rcgdm::RunConfig config = resolve(args);
            rcgdm::Experiment exp(config, rcgdm::resolve_out_dir(config, args.out), std::cout);
            exp.figures();
            return kOk;
        }
        if (*validate) return run_validate(args);
        for (auto* sub : stages)
            if (*sub) return run_stage(sub->get_name(), args);
    } catch (const rcgdm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const rcgdm::StageError& e) {
        std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
        return kComputeError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kComputeError;
    }
    return kOk;
}
