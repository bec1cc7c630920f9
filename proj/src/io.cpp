// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace rcgdm::io {

namespace {

class Writer {
public:
    template <typename T>
    void put(T value) {
        char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void raw(const char* data, std::size_t n) { out_.append(data, n); }
    void row_major(const Matrix& M) {
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            for (Eigen::Index j = 0; j < M.cols(); ++j) put<double>(M(i, j));
    }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::string take(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    Matrix row_major(std::uint64_t rows, std::uint64_t cols) {
        if (cols != 0 && rows > (limit_ - pos_) / 8 / cols) throw IoError("truncated or corrupt file (matrix payload)");
        Matrix M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = get<double>();
        return M;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (n > limit_ - pos_) throw IoError("truncated or corrupt file");
    }
    const std::string& bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string encode_matrix(const Matrix& M) {
    Writer w;
    w.raw(kMatrixMagic, sizeof kMatrixMagic);
    w.put<std::uint32_t>(kMatrixVersion);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(M.rows()));
    w.put<std::uint64_t>(static_cast<std::uint64_t>(M.cols()));
    w.row_major(M);
    return std::move(w.str());
}

Matrix decode_matrix(const std::string& bytes) {
    Reader r(bytes, bytes.size());
    if (r.take(sizeof kMatrixMagic) != std::string(kMatrixMagic, sizeof kMatrixMagic))
        throw IoError("not a matrix file (bad magic)");
    if (r.get<std::uint32_t>() != kMatrixVersion) throw IoError("unsupported matrix file version");
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    Matrix M = r.row_major(rows, cols);
    if (r.pos() != bytes.size()) throw IoError("matrix file has trailing bytes");
    return M;
}

void save_matrix(const fs::path& path, const Matrix& M) { write_atomic(path, encode_matrix(M)); }

Matrix load_matrix(const fs::path& path) { return decode_matrix(read_file(path)); }

void save_matrix_csv(const fs::path& path, const Matrix& M, const std::vector<std::string>& header) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    if (!header.empty()) out << '\n';
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) out << (j ? "," : "") << M(i, j);
        out << '\n';
    }
    write_atomic(path, out.str());
}

const Matrix& TensorFile::block(const std::string& name) const {
    for (const auto& [key, value] : blocks)
        if (key == name) return value;
    throw IoError("model file is missing block '" + name + "'");
}

std::string encode_tensor_file(const TensorFile& file) {
    Writer w;
    w.raw(kModelMagic, sizeof kModelMagic);
    w.put<std::uint32_t>(kModelVersion);
    const std::string header = file.header.dump();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
    w.raw(header.data(), header.size());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(file.blocks.size()));
    for (const auto& [name, M] : file.blocks) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
        w.raw(name.data(), name.size());
        w.put<std::uint64_t>(static_cast<std::uint64_t>(M.rows()));
        w.put<std::uint64_t>(static_cast<std::uint64_t>(M.cols()));
        w.row_major(M);
    }
    w.put<std::uint64_t>(fnv1a(w.str().data(), w.str().size()));
    return std::move(w.str());
}

TensorFile decode_tensor_file(const std::string& bytes) {
    if (bytes.size() < sizeof kModelMagic + 8) throw IoError("model file too short");
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, sizeof stored);
    if (stored != fnv1a(bytes.data(), body)) throw IoError("model file checksum mismatch (corrupt file)");

    Reader r(bytes, body);
    if (r.take(sizeof kModelMagic) != std::string(kModelMagic, sizeof kModelMagic))
        throw IoError("not a model file (bad magic)");
    if (r.get<std::uint32_t>() != kModelVersion) throw IoError("unsupported model file version");
    TensorFile file;
    const auto header_len = r.get<std::uint32_t>();
    try {
        file.header = json::parse(r.take(header_len));
    } catch (const json::exception& e) {
        throw IoError(std::string("model header is not valid JSON: ") + e.what());
    }
    const auto count = r.get<std::uint32_t>();
    for (std::uint32_t b = 0; b < count; ++b) {
        std::string name = r.take(r.get<std::uint32_t>());
        const auto rows = r.get<std::uint64_t>();
        const auto cols = r.get<std::uint64_t>();
        file.blocks.emplace_back(std::move(name), r.row_major(rows, cols));
    }
    if (r.pos() != body) throw IoError("model file has trailing bytes");
    return file;
}

void save_score_model(const fs::path& path, const EncoderDecoderScore& model, const DiffusionSchedule& schedule) {
    TensorFile file;
    const ScoreHead& head = model.head();
    file.header = {{"kind", "score"},
                   {"variant", head_name(head.kind())},
                   {"D", model.V().rows()},
                   {"d", model.V().cols()},
                   {"schedule", to_json(schedule)}};
    file.blocks.emplace_back("V", model.V());
    if (head.kind() == HeadKind::covering) {
        const auto& cov = static_cast<const CoveringHead&>(head);
        file.header["nu"] = cov.nu();
        file.blocks.emplace_back("SigmaInv", cov.precision());
        file.blocks.emplace_back("beta_tilde", Matrix(cov.beta()));
    } else {
        const auto& mlp = static_cast<const MlpHead&>(head);
        file.header["hidden"] = mlp.hidden();
        for (std::size_t l = 0; l < mlp.weights().size(); ++l) {
            file.blocks.emplace_back("W" + std::to_string(l), mlp.weights()[l]);
            file.blocks.emplace_back("b" + std::to_string(l), Matrix(mlp.biases()[l]));
        }
    }
    write_atomic(path, encode_tensor_file(file));
}

EncoderDecoderScore load_score_model(const fs::path& path) {
    const TensorFile file = decode_tensor_file(read_file(path));
    try {
        if (file.header.at("kind") != "score") throw IoError(path.string() + " is not a score model");
        const HeadKind kind = parse_head(file.header.at("variant").get<std::string>());
        const auto D = file.header.at("D").get<Eigen::Index>();
        const auto d = file.header.at("d").get<Eigen::Index>();
        const Matrix& V = file.block("V");
        if (V.rows() != D || V.cols() != d) throw IoError("model block V has the wrong shape");
        if (kind == HeadKind::covering) {
            auto head = std::make_unique<CoveringHead>(d, file.header.at("nu").get<double>());
            const Matrix& P = file.block("SigmaInv");
            const Matrix& beta = file.block("beta_tilde");
            if (P.rows() != d || P.cols() != d || beta.rows() != d || beta.cols() != 1)
                throw IoError("covering head blocks have the wrong shape");
            head->set_precision(P);
            head->set_beta(beta.col(0));
            return EncoderDecoderScore(V, std::move(head));
        }
        auto hidden = file.header.at("hidden").get<std::vector<Eigen::Index>>();
        auto head = std::make_unique<MlpHead>(d, hidden, 0);
        for (std::size_t l = 0; l <= hidden.size(); ++l) {
            const Matrix& b = file.block("b" + std::to_string(l));
            if (b.cols() != 1) throw IoError("bias block must be a column");
            head->set_layer(l, file.block("W" + std::to_string(l)), b.col(0));
        }
        return EncoderDecoderScore(V, std::move(head));
    } catch (const json::exception& e) {
        throw IoError(std::string("model header is malformed: ") + e.what());
    } catch (const DimensionError& e) {
        throw IoError(std::string("model blocks are inconsistent: ") + e.what());
    }
}

void save_ridge(const fs::path& path, const RidgeEstimate& est) {
    TensorFile file;
    file.header = {{"kind", "ridge"}, {"lambda", est.lambda}, {"n2", est.n2}, {"D", est.theta_hat.size()}};
    file.blocks.emplace_back("theta_hat", Matrix(est.theta_hat));
    file.blocks.emplace_back("Sigma_hat_lambda", est.Sigma_hat_lambda);
    write_atomic(path, encode_tensor_file(file));
}

RidgeEstimate load_ridge(const fs::path& path) {
    const TensorFile file = decode_tensor_file(read_file(path));
    try {
        if (file.header.at("kind") != "ridge") throw IoError(path.string() + " is not a ridge model");
        RidgeEstimate est;
        est.lambda = file.header.at("lambda").get<double>();
        est.n2 = file.header.at("n2").get<Eigen::Index>();
        est.theta_hat = file.block("theta_hat").col(0);
        est.Sigma_hat_lambda = file.block("Sigma_hat_lambda");
        return est;
    } catch (const json::exception& e) {
        throw IoError(std::string("ridge header is malformed: ") + e.what());
    }
}

void save_sample_batch(const fs::path& path, const SampleBatch& batch) {
    save_matrix(path, batch.X);
    const json sidecar = {{"a", batch.a},
                          {"n", batch.X.rows()},
                          {"D", batch.X.cols()},
                          {"schedule", to_json(batch.schedule)},
                          {"score", batch.score_id},
                          {"seed", batch.seed}};
    fs::path side = path;
    side += ".json";
    write_atomic(side, sidecar.dump(2) + "\n");
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return out.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

json to_json(const DiffusionSchedule& schedule) {
    return {{"T", schedule.T}, {"t0", schedule.t0}, {"eta", schedule.eta}};
}

json to_json(const Histogram& histogram) {
    return {{"edges", histogram.edges},
            {"counts", histogram.counts},
            {"mean", histogram.mean},
            {"stddev", histogram.stddev}};
}

json to_json(const MetricsReport& r) {
    return {{"a", r.a},
            {"seed", r.seed},
            {"n", r.n},
            {"subspace_angle", r.subspace_angle},
            {"off_support_mean", r.off_support_mean},
            {"avg_reward", r.avg_reward},
            {"subopt", r.subopt},
            {"e1", r.e1},
            {"e2", r.e2},
            {"e3", r.e3},
            {"distro_shift_surrogate", r.distro_shift},
            {"distro_shift_mc", r.distro_shift_mc},
            {"distro_shift_mc_argmax", r.distro_shift_argmax},
            {"coverage_trace", r.coverage},
            {"moment_discrepancy", {{"mean_gap", r.moment_gap.mean_gap}, {"cov_gap", r.moment_gap.cov_gap}}},
            {"pushforward_discrepancy",
             {{"mean_gap", r.pushforward_gap.mean_gap}, {"cov_gap", r.pushforward_gap.cov_gap}}},
            {"histogram", to_json(r.histogram)},
            {"score", r.score_id}};
}

}  // namespace rcgdm::io
