// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcgdm/metrics.hpp"
#include "rcgdm/oracle.hpp"
#include "rcgdm/regression.hpp"
#include "rcgdm/sampler.hpp"
#include "rcgdm/score.hpp"

namespace rcgdm::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Matrix file: "RCGDDATA" | u32 version | u64 rows | u64 cols | rows*cols f64,
// row-major, little-endian.
inline constexpr char kMatrixMagic[8] = {'R', 'C', 'G', 'D', 'D', 'A', 'T', 'A'};
inline constexpr std::uint32_t kMatrixVersion = 1;

// Model file: "RCGDMODL" | u32 version | u32 header bytes | header JSON |
// u32 block count | blocks | u64 FNV-1a of every preceding byte.
// Block: u32 name bytes | name | u64 rows | u64 cols | rows*cols f64 row-major.
inline constexpr char kModelMagic[8] = {'R', 'C', 'G', 'D', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Writes via a temporary sibling and rename.
void write_atomic(const fs::path& path, const std::string& bytes);
std::string read_file(const fs::path& path);

std::string encode_matrix(const Matrix& M);
Matrix decode_matrix(const std::string& bytes);
void save_matrix(const fs::path& path, const Matrix& M);
Matrix load_matrix(const fs::path& path);

void save_matrix_csv(const fs::path& path, const Matrix& M, const std::vector<std::string>& header = {});

struct TensorFile {
    json header;
    std::vector<std::pair<std::string, Matrix>> blocks;

    const Matrix& block(const std::string& name) const;
};

std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(const std::string& bytes);

void save_score_model(const fs::path& path, const EncoderDecoderScore& model, const DiffusionSchedule& schedule);
EncoderDecoderScore load_score_model(const fs::path& path);

void save_ridge(const fs::path& path, const RidgeEstimate& est);
RidgeEstimate load_ridge(const fs::path& path);

/// Sample batch as a matrix file plus "<path>.json" sidecar.
void save_sample_batch(const fs::path& path, const SampleBatch& batch);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

json to_json(const DiffusionSchedule& schedule);
json to_json(const Histogram& histogram);
json to_json(const MetricsReport& report);

}  // namespace rcgdm::io
