// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/experiment.hpp"

#include <bit>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rcgdm/io.hpp"
#include "rcgdm/oracle.hpp"
#include "rcgdm/svg.hpp"

namespace rcgdm {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json load_json(const fs::path& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { io::write_atomic(path, j.dump(2) + "\n"); }

PseudoLabeledDataset load_curated(const RunLayout& layout, std::uint64_t seed, double nu) {
    PseudoLabeledDataset curated;
    curated.X = io::load_matrix(layout.unlabeled(seed));
    const Matrix y = io::load_matrix(layout.curated_y(seed));
    if (y.cols() != 1 || y.rows() != curated.X.rows()) throw IoError("curated labels do not match the unlabeled set");
    curated.y_hat = y.col(0);
    curated.nu = nu;
    return curated;
}

struct SeedStats {
    double mean = 0.0;
    double std = 0.0;
};

SeedStats stats(const std::vector<double>& v) {
    SeedStats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

std::string format_value(double a) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, a);
    return std::string(buf, res.ptr);
}

std::uint64_t cell_seed(std::uint64_t seed, double a) {
    return derive_seed(derive_seed(seed, stream::sampler), std::bit_cast<std::uint64_t>(a));
}

fs::path RunLayout::samples(std::uint64_t s, double a) const {
    return seed_dir(s) / ("samples_a" + format_value(a) + ".bin");
}

fs::path RunLayout::metrics(std::uint64_t s, double a) const {
    return seed_dir(s) / ("metrics_a" + format_value(a) + ".json");
}

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols = {"a",  "seed", "subopt", "avg_reward", "e1",
                                                  "e2", "e3",   "angle",  "offsupport", "shift"};
    return cols;
}

// ---------------------------------------------------------------------------
// World persistence

void save_world(const fs::path& path, const SubspaceWorld& world) {
    io::TensorFile file;
    file.header = {{"kind", "world"},
                   {"D", world.D()},
                   {"d", world.d()},
                   {"offsupport_coeff", world.offsupport_coeff},
                   {"offsupport_sign", world.offsupport_sign == OffSupportSign::penalty ? "penalty" : "bonus"}};
    file.blocks.emplace_back("A", world.A);
    file.blocks.emplace_back("Sigma", world.Sigma);
    file.blocks.emplace_back("beta_star", Matrix(world.beta_star));
    io::write_atomic(path, io::encode_tensor_file(file));
}

SubspaceWorld load_world(const fs::path& path) {
    const io::TensorFile file = io::decode_tensor_file(io::read_file(path));
    try {
        if (file.header.at("kind") != "world") throw IoError(path.string() + " is not a world file");
        SubspaceWorld world;
        world.A = file.block("A");
        world.Sigma = file.block("Sigma");
        world.beta_star = file.block("beta_star").col(0);
        world.theta_star = world.A * world.beta_star;
        world.offsupport_coeff = file.header.at("offsupport_coeff").get<double>();
        world.offsupport_sign =
            file.header.at("offsupport_sign") == "bonus" ? OffSupportSign::bonus : OffSupportSign::penalty;
        check_world(world);
        return world;
    } catch (const json::exception& e) {
        throw IoError(std::string("world header is malformed: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Manifest

std::string config_hash(const RunConfig& config) { return io::sha256_hex(to_json(config).dump()); }

Manifest Manifest::load_or_create(const RunLayout& layout, const RunConfig& config) {
    Manifest m;
    m.layout_ = layout;
    if (fs::exists(layout.manifest())) {
        m.data_ = load_json(layout.manifest());
        if (m.matches(config)) return m;
    }
    m.data_ = {{"tool", "rcgdm"},
               {"version", kVersion},
               {"config", to_json(config)},
               {"config_hash", config_hash(config)},
               {"seeds", config.seeds},
               {"artifacts", json::object()},
               {"timings", json::object()},
               {"loss_traces", json::object()},
               {"complete", false},
               {"dry_run", false},
               {"failed_stage", nullptr}};
    return m;
}

void Manifest::record(const fs::path& artifact) {
    const std::string rel = fs::relative(artifact, layout_.root).generic_string();
    data_["artifacts"][rel] = io::sha256_file(artifact);
}

void Manifest::timing(const std::string& stage, double seconds) { data_["timings"][stage] = seconds; }

void Manifest::set_loss_trace(std::uint64_t seed, const TrainResult& result) {
    data_["loss_traces"][std::to_string(seed)] = {{"epoch_loss", result.epoch_loss},
                                                  {"initial_validation", result.initial_validation},
                                                  {"final_validation", result.final_validation},
                                                  {"steps", result.steps}};
}

void Manifest::mark(bool complete, const std::string& failed_stage, bool dry_run) {
    data_["complete"] = complete;
    data_["dry_run"] = dry_run;
    data_["failed_stage"] = failed_stage.empty() ? json(nullptr) : json(failed_stage);
}

void Manifest::save() const {
    fs::create_directories(layout_.root);
    write_json(layout_.manifest(), data_);
}

bool Manifest::matches(const RunConfig& config) const {
    return data_.contains("config_hash") && data_["config_hash"] == config_hash(config);
}

bool Manifest::complete() const { return data_.value("complete", false); }

std::vector<std::string> Manifest::verify() const {
    std::vector<std::string> problems;
    if (!data_.contains("artifacts")) return {"manifest has no artifact table"};
    for (const auto& [rel, hash] : data_["artifacts"].items()) {
        const fs::path p = layout_.root / rel;
        if (!fs::exists(p)) {
            problems.push_back("missing artifact " + rel);
            continue;
        }
        if (io::sha256_file(p) != hash.get<std::string>()) problems.push_back("hash mismatch for " + rel);
    }
    return problems;
}

// ---------------------------------------------------------------------------
// Evaluation

MetricsReport evaluate_batch(const RunConfig& config, const SubspaceWorld& world, const RidgeEstimate& ridge,
                             const PseudoLabeledDataset& curated, const EncoderDecoderScore& model,
                             const SampleBatch& batch, std::uint64_t seed) {
    const double a = batch.a;
    const double nu = config.resolved_nu();
    const GaussianDesignOracle oracle(world, latent_coefficients(world, ridge), nu);

    MetricsReport r;
    r.a = a;
    r.seed = seed;
    r.n = batch.X.rows();
    r.score_id = batch.score_id;
    r.subspace_angle = subspace_angle(extract_subspace(model), world.A);
    r.off_support_mean = off_support_deviation(batch.X, world);
    const Suboptimality so = suboptimality(batch.X, world, a);
    r.subopt = so.subopt;
    r.avg_reward = so.avg_reward;

    const std::uint64_t cell = cell_seed(seed, a);
    const SuboptTerms terms = subopt_decomposition(batch.X, world, ridge, oracle, a, config.n_ref, cell);
    r.e1 = terms.e1;
    r.e2 = terms.e2;
    r.e3 = terms.e3;
    r.distro_shift = oracle.distro_shift_surrogate(a).surrogate;

    // Loss-family shift between the target (x | y_hat = a, y = a) and the
    // curated training pairs.
    {
        Rng rng(derive_seed(cell, stream::shift));
        const GaussianLaw law = oracle.conditional_latent_law(a);
        Matrix Z = sample_latent(law.cov + 1e-14 * Matrix::Identity(world.d(), world.d()), config.shift_rows, rng);
        Z.rowwise() += law.mean.transpose();
        LabeledSamples target{Z * world.A.transpose(), Vector::Constant(config.shift_rows, a)};

        const Eigen::Index m = std::min(config.shift_rows, curated.X.rows());
        LabeledSamples data{Matrix(m, world.D()), Vector(m)};
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(curated.X.rows()));
            data.X.row(i) = curated.X.row(j);
            data.y(i) = curated.y_hat(j);
        }
        const std::uint64_t inner = derive_seed(cell, stream::shift + 100);
        const std::vector<LossEvaluator> family = {
            denoising_loss_evaluator("fitted", std::make_shared<EncoderDecoderScore>(model), config.schedule,
                                     config.shift_inner, inner),
            denoising_loss_evaluator("zero", std::make_shared<ZeroScore>(world.D()), config.schedule,
                                     config.shift_inner, inner),
            denoising_loss_evaluator("oracle", std::make_shared<AnalyticScore>(oracle), config.schedule,
                                     config.shift_inner, inner)};
        const ShiftEstimate shift = distribution_shift_mc(target, data, family);
        r.distro_shift_mc = shift.ratio;
        r.distro_shift_argmax = shift.argmax_id;
    }

    r.coverage = coverage_trace(ridge, target_covariance(world, ridge, a, nu));
    const GaussianLaw noised = oracle.noised_conditional_law(a, config.schedule.t0);
    r.moment_gap = moment_discrepancy(batch.X, noised);
    const GaussianLaw latent{world.A.transpose() * noised.mean, world.A.transpose() * noised.cov * world.A};
    r.pushforward_gap = pushforward_discrepancy(batch.X, extract_subspace(model), world.A, latent);
    r.histogram = reward_histogram(batch.X, world, config.bins);
    return r;
}

// ---------------------------------------------------------------------------
// Experiment

Experiment::Experiment(RunConfig config, fs::path root, std::ostream& log)
    : config_(std::move(config)), layout_{std::move(root)}, log_(log),
      manifest_(Manifest::load_or_create(layout_, config_)) {
    config_.validate();
}

template <typename F>
auto Experiment::timed(const std::string& stage, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest_.timing(stage, secs);
        log_ << "  " << stage << " done in " << std::fixed << std::setprecision(2) << secs << " s\n"
             << std::defaultfloat;
    };
    if constexpr (std::is_void_v<decltype(body())>) {
        body();
        finish();
    } else {
        auto result = body();
        finish();
        return result;
    }
}

void Experiment::gen_data(std::uint64_t seed) {
    timed("seed_" + std::to_string(seed) + "/gen-data", [&] {
        const SubspaceWorld world = make_world(config_.world, seed);
        auto [unlabeled, labeled] = generate_datasets(world, config_.n1, config_.n2, config_.noise_sigma, seed);
        fs::create_directories(layout_.seed_dir(seed));
        save_world(layout_.world(seed), world);
        io::save_matrix(layout_.unlabeled(seed), unlabeled.X);
        io::save_matrix(layout_.labeled_x(seed), labeled.X);
        io::save_matrix(layout_.labeled_y(seed), Matrix(labeled.y));
        for (const auto& p : {layout_.world(seed), layout_.unlabeled(seed), layout_.labeled_x(seed),
                              layout_.labeled_y(seed)})
            manifest_.record(p);
        if (config_.csv) {
            Matrix table(labeled.X.rows(), labeled.X.cols() + 1);
            table << labeled.X, labeled.y;
            std::vector<std::string> header;
            for (Eigen::Index j = 0; j < labeled.X.cols(); ++j) header.push_back("x" + std::to_string(j));
            header.push_back("y");
            const fs::path csv = layout_.seed_dir(seed) / "labeled.csv";
            io::save_matrix_csv(csv, table, header);
            manifest_.record(csv);
        }
    });
    manifest_.save();
}

void Experiment::train_reward(std::uint64_t seed) {
    timed("seed_" + std::to_string(seed) + "/train-reward", [&] {
        LabeledDataset labeled;
        labeled.X = io::load_matrix(layout_.labeled_x(seed));
        labeled.y = io::load_matrix(layout_.labeled_y(seed)).col(0);
        labeled.noise_sigma = config_.noise_sigma;
        const RidgeEstimate ridge = fit_ridge(labeled, config_.lambda);

        UnlabeledDataset unlabeled{io::load_matrix(layout_.unlabeled(seed))};
        const PseudoLabeledDataset curated = pseudo_label(unlabeled, ridge, config_.resolved_nu(), seed);
        io::save_ridge(layout_.ridge(seed), ridge);
        io::save_matrix(layout_.curated_y(seed), Matrix(curated.y_hat));
        manifest_.record(layout_.ridge(seed));
        manifest_.record(layout_.curated_y(seed));
    });
    manifest_.save();
}

TrainResult Experiment::train_score(std::uint64_t seed) {
    auto result = timed("seed_" + std::to_string(seed) + "/train-score", [&] {
        const double nu = config_.resolved_nu();
        const PseudoLabeledDataset curated = load_curated(layout_, seed, nu);
        EncoderDecoderScore model =
            config_.variant == HeadKind::covering
                ? make_covering_model(config_.world.D, config_.world.d, nu, seed)
                : make_mlp_model(config_.world.D, config_.world.d, config_.hidden, seed);
        TrainConfig tc = config_.train;
        tc.seed = seed;
        const TrainResult tr = train(model, curated, tc, config_.schedule);
        const double angle = subspace_angle(extract_subspace(model), load_world(layout_.world(seed)).A);
        log_ << "  seed " << seed << ": validation loss " << tr.initial_validation << " -> " << tr.final_validation
             << " over " << tr.steps << " steps, subspace angle " << angle << "\n";
        io::save_score_model(layout_.score(seed), model, config_.schedule);
        write_json(layout_.loss_trace(seed), {{"epoch_loss", tr.epoch_loss},
                                              {"initial_validation", tr.initial_validation},
                                              {"final_validation", tr.final_validation},
                                              {"steps", tr.steps}});
        manifest_.record(layout_.score(seed));
        manifest_.record(layout_.loss_trace(seed));
        manifest_.set_loss_trace(seed, tr);
        return tr;
    });
    manifest_.save();
    return result;
}

std::vector<MetricsReport> Experiment::sample(std::uint64_t seed) {
    auto reports = timed("seed_" + std::to_string(seed) + "/sample", [&] {
        const SubspaceWorld world = load_world(layout_.world(seed));
        const RidgeEstimate ridge = io::load_ridge(layout_.ridge(seed));
        const PseudoLabeledDataset curated = load_curated(layout_, seed, config_.resolved_nu());
        const EncoderDecoderScore model = io::load_score_model(layout_.score(seed));

        std::vector<MetricsReport> out;
        for (double a : config_.a_grid) {
            const SampleBatch batch =
                run_backward(model, a, config_.n_eval, config_.schedule, cell_seed(seed, a), config_.workers);
            io::save_sample_batch(layout_.samples(seed, a), batch);
            MetricsReport report = evaluate_batch(config_, world, ridge, curated, model, batch, seed);
            write_json(layout_.metrics(seed, a), io::to_json(report));
            fs::path sidecar = layout_.samples(seed, a);
            sidecar += ".json";
            manifest_.record(layout_.samples(seed, a));
            manifest_.record(sidecar);
            manifest_.record(layout_.metrics(seed, a));
            log_ << "  seed " << seed << " a=" << format_value(a) << ": avg_reward " << report.avg_reward
                 << ", off-support " << report.off_support_mean << ", angle " << report.subspace_angle << "\n";
            out.push_back(std::move(report));
        }
        return out;
    });
    manifest_.save();
    return reports;
}

void Experiment::write_sweep_csv() {
    std::ostringstream out;
    out << std::setprecision(17);
    const auto& cols = sweep_columns();
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << cols[j];
    out << '\n';
    for (std::uint64_t seed : config_.seeds) {
        for (double a : config_.a_grid) {
            const json m = load_json(layout_.metrics(seed, a));
            out << format_value(a) << ',' << seed << ',' << m["subopt"].get<double>() << ','
                << m["avg_reward"].get<double>() << ',' << m["e1"].get<double>() << ',' << m["e2"].get<double>()
                << ',' << m["e3"].get<double>() << ',' << m["subspace_angle"].get<double>() << ','
                << m["off_support_mean"].get<double>() << ',' << m["distro_shift_mc"].get<double>() << '\n';
        }
    }
    io::write_atomic(layout_.sweep_csv(), out.str());
    manifest_.record(layout_.sweep_csv());
}

bool Experiment::pipeline(const Options& options) {
    if (!options.force && manifest_.complete() && manifest_.matches(config_) && manifest_.verify().empty()) {
        log_ << "run in " << layout_.root << " is complete and up to date (use --force to recompute)\n";
        return false;
    }
    if (options.dry_run) {
        manifest_.mark(false, "", true);
        manifest_.save();
        log_ << "dry run: configuration valid; wrote " << layout_.manifest() << "\n";
        return true;
    }
    manifest_.mark(false);
    manifest_.save();

    std::string stage;
    try {
        for (std::uint64_t seed : config_.seeds) {
            log_ << "seed " << seed << "\n";
            stage = "gen-data";
            gen_data(seed);
            stage = "train-reward";
            train_reward(seed);
            stage = "train-score";
            train_score(seed);
            stage = "sample";
            sample(seed);
        }
        stage = "sweep";
        write_sweep_csv();
    } catch (const Error& e) {
        manifest_.mark(false, stage);
        manifest_.save();
        throw StageError(stage, e.what());
    }
    manifest_.mark(true);
    manifest_.save();
    return true;
}

void Experiment::figures() {
    struct Cell {
        json metrics;
        Vector rewards;
    };
    std::vector<std::vector<Cell>> cells(config_.a_grid.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::uint64_t seed : config_.seeds) {
        for (std::size_t k = 0; k < config_.a_grid.size(); ++k) {
            const double a = config_.a_grid[k];
            for (const fs::path& p : {layout_.metrics(seed, a), layout_.samples(seed, a), layout_.world(seed)}) {
                if (!fs::exists(p))
                    throw StageError("figures", "missing " + p.string() +
                                                    "; run `rcgdm pipeline` (or `rcgdm sample`) for this config first");
            }
            const SubspaceWorld world = load_world(layout_.world(seed));
            Cell cell{load_json(layout_.metrics(seed, a)), true_rewards(world, io::load_matrix(layout_.samples(seed, a)))};
            lo = std::min(lo, cell.rewards.minCoeff());
            hi = std::max(hi, cell.rewards.maxCoeff());
            cells[k].push_back(std::move(cell));
        }
    }
    if (!(hi > lo)) hi = lo + 1.0;
    fs::create_directories(layout_.figures());

    auto curve = [&](const std::string& key) {
        std::vector<SeedStats> out;
        for (const auto& per_a : cells) {
            std::vector<double> v;
            for (const auto& c : per_a) v.push_back(c.metrics[key].get<double>());
            out.push_back(stats(v));
        }
        return out;
    };

    // Error bars: mean +- 2 standard deviations over seeds.
    constexpr double kBar = 2.0;
    auto write_curve = [&](const std::string& name, const std::string& title, const std::string& ylabel,
                           const std::string& key, const std::string& extra_key, bool reference_line) {
        const auto main = curve(key);
        const auto extra = extra_key.empty() ? std::vector<SeedStats>{} : curve(extra_key);
        std::ostringstream csv;
        csv << std::setprecision(17) << "a,mean,std,lower,upper";
        if (!extra.empty()) csv << ",surrogate_mean,surrogate_std";
        csv << '\n';
        svg::Series s{key, {}, {}, {}, {}, false};
        svg::Series s2{extra_key, {}, {}, {}, {}, false};
        svg::Series ref{"target", {}, {}, {}, {}, false};
        for (std::size_t k = 0; k < main.size(); ++k) {
            const double a = config_.a_grid[k];
            csv << format_value(a) << ',' << main[k].mean << ',' << main[k].std << ','
                << main[k].mean - kBar * main[k].std << ',' << main[k].mean + kBar * main[k].std;
            if (!extra.empty()) csv << ',' << extra[k].mean << ',' << extra[k].std;
            csv << '\n';
            s.x.push_back(a);
            s.y.push_back(main[k].mean);
            s.lo.push_back(main[k].mean - kBar * main[k].std);
            s.hi.push_back(main[k].mean + kBar * main[k].std);
            if (!extra.empty()) {
                s2.x.push_back(a);
                s2.y.push_back(extra[k].mean);
            }
            ref.x.push_back(a);
            ref.y.push_back(a);
        }
        const fs::path csv_path = layout_.figures() / (name + ".csv");
        const fs::path svg_path = layout_.figures() / (name + ".svg");
        io::write_atomic(csv_path, csv.str());
        svg::Plot plot{title, "target reward a", ylabel, {s}, 480, 360};
        if (!extra.empty()) plot.series.push_back(s2);
        if (reference_line) plot.series.push_back(ref);
        io::write_atomic(svg_path, svg::render(plot));
        manifest_.record(csv_path);
        manifest_.record(svg_path);
    };

    write_curve("curve_avg_reward", "Average reward of generated samples", "reward", "avg_reward", "", true);
    write_curve("curve_distribution_shift", "Distribution shift", "shift", "distro_shift_mc",
                "distro_shift_surrogate", false);
    write_curve("curve_off_support", "Off-support deviation", "E||x_perp||", "off_support_mean", "", false);

    svg::Plot hist_plot{"Reward distribution of generated samples", "reward", "count", {}, 480, 360};
    std::ostringstream summary;
    summary << std::setprecision(17) << "a,mean,std,n\n";
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const double a = config_.a_grid[k];
        Eigen::Index total = 0;
        for (const auto& c : cells[k]) total += c.rewards.size();
        Vector pooled(total);
        Eigen::Index off = 0;
        for (const auto& c : cells[k]) {
            pooled.segment(off, c.rewards.size()) = c.rewards;
            off += c.rewards.size();
        }
        const Histogram h = reward_histogram(pooled, config_.bins, lo, hi);
        std::ostringstream csv;
        csv << std::setprecision(17) << "lower,upper,count\n";
        svg::Series s{"a=" + format_value(a), {}, {}, {}, {}, true};
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            csv << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
            s.x.push_back(h.edges[b]);
            s.y.push_back(static_cast<double>(h.counts[b]));
        }
        s.x.push_back(h.edges.back());
        s.y.push_back(static_cast<double>(h.counts.back()));
        hist_plot.series.push_back(std::move(s));
        summary << format_value(a) << ',' << h.mean << ',' << h.stddev << ',' << total << '\n';
        const fs::path p = layout_.figures() / ("hist_a" + format_value(a) + ".csv");
        io::write_atomic(p, csv.str());
        manifest_.record(p);
    }
    const fs::path summary_path = layout_.figures() / "hist_summary.csv";
    const fs::path hist_svg = layout_.figures() / "histograms.svg";
    io::write_atomic(summary_path, summary.str());
    io::write_atomic(hist_svg, svg::render(hist_plot));
    manifest_.record(summary_path);
    manifest_.record(hist_svg);
    manifest_.save();
    log_ << "figures written to " << layout_.figures() << "\n";
}

}  // namespace rcgdm
