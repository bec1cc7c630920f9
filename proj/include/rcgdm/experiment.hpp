// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcgdm/config.hpp"
#include "rcgdm/metrics.hpp"
#include "rcgdm/regression.hpp"
#include "rcgdm/sampler.hpp"
#include "rcgdm/score.hpp"
#include "rcgdm/training.hpp"
#include "rcgdm/world.hpp"

namespace rcgdm {

namespace fs = std::filesystem;

/// A pipeline stage failed; what() carries the underlying error.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// File layout of one run directory.
///
///   manifest.json  sweep.csv
///   seed_<s>/world.model  unlabeled.bin  labeled_x.bin  labeled_y.bin
///            ridge.model  curated_y.bin  score.model  loss_trace.json
///            samples_a<a>.bin(.json)  metrics_a<a>.json
///   figures/...
struct RunLayout {
    fs::path root;

    fs::path manifest() const { return root / "manifest.json"; }
    fs::path sweep_csv() const { return root / "sweep.csv"; }
    fs::path figures() const { return root / "figures"; }
    fs::path seed_dir(std::uint64_t seed) const { return root / ("seed_" + std::to_string(seed)); }
    fs::path world(std::uint64_t s) const { return seed_dir(s) / "world.model"; }
    fs::path unlabeled(std::uint64_t s) const { return seed_dir(s) / "unlabeled.bin"; }
    fs::path labeled_x(std::uint64_t s) const { return seed_dir(s) / "labeled_x.bin"; }
    fs::path labeled_y(std::uint64_t s) const { return seed_dir(s) / "labeled_y.bin"; }
    fs::path ridge(std::uint64_t s) const { return seed_dir(s) / "ridge.model"; }
    fs::path curated_y(std::uint64_t s) const { return seed_dir(s) / "curated_y.bin"; }
    fs::path score(std::uint64_t s) const { return seed_dir(s) / "score.model"; }
    fs::path loss_trace(std::uint64_t s) const { return seed_dir(s) / "loss_trace.json"; }
    fs::path samples(std::uint64_t s, double a) const;
    fs::path metrics(std::uint64_t s, double a) const;
};

/// "2", "0.5", "-1.25": the shortest round-trip text for a grid value.
std::string format_value(double a);

/// Seed for the (a, seed) cell; depends on the value of a, not its index.
std::uint64_t cell_seed(std::uint64_t seed, double a);

void save_world(const fs::path& path, const SubspaceWorld& world);
SubspaceWorld load_world(const fs::path& path);

/// Manifest of a run directory: resolved config, seeds, artifact hashes,
/// timings, and completion state.
class Manifest {
public:
    static Manifest load_or_create(const RunLayout& layout, const RunConfig& config);

    void record(const fs::path& artifact);
    void timing(const std::string& stage, double seconds);
    void set_loss_trace(std::uint64_t seed, const TrainResult& result);
    void mark(bool complete, const std::string& failed_stage = "", bool dry_run = false);
    void save() const;

    bool matches(const RunConfig& config) const;
    bool complete() const;
    /// Problems found when re-hashing every recorded artifact; empty when clean.
    std::vector<std::string> verify() const;

    const nlohmann::json& data() const { return data_; }

private:
    RunLayout layout_;
    nlohmann::json data_;
};

std::string config_hash(const RunConfig& config);

/// Evaluation of one generated batch against the ground truth and oracles.
MetricsReport evaluate_batch(const RunConfig& config, const SubspaceWorld& world, const RidgeEstimate& ridge,
                             const PseudoLabeledDataset& curated, const EncoderDecoderScore& model,
                             const SampleBatch& batch, std::uint64_t seed);

/// Stage runners. Each reads its inputs from the run directory (running the
/// missing upstream stages is the caller's job) and records its outputs in
/// the manifest.
class Experiment {
public:
    Experiment(RunConfig config, fs::path root, std::ostream& log);

    void gen_data(std::uint64_t seed);
    void train_reward(std::uint64_t seed);
    TrainResult train_score(std::uint64_t seed);
    std::vector<MetricsReport> sample(std::uint64_t seed);

    struct Options {
        bool dry_run = false;
        bool force = false;
    };
    /// Runs every stage for every seed. Returns false when the run was already
    /// complete and nothing was done.
    bool pipeline(const Options& options);

    /// Curves (mean +- 2 std over seeds), pooled-range histograms and SVGs.
    void figures();

    const RunLayout& layout() const { return layout_; }
    Manifest& manifest() { return manifest_; }

private:
    template <typename F>
    auto timed(const std::string& stage, F&& body);

    void write_sweep_csv();

    RunConfig config_;
    RunLayout layout_;
    std::ostream& log_;
    Manifest manifest_;
};

/// Column order of sweep.csv.
const std::vector<std::string>& sweep_columns();

}  // namespace rcgdm
