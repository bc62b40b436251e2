#pragma once

// Binary checkpoint container:
//   "RPCKPT\0\1" magic, u32 format version, u32 parameter count, then per
//   parameter: u32 name length, name bytes, u32 rank, u64 dims[rank],
//   little-endian f64 values.
// A JSON sidecar `<path>.json` records the architecture hyperparameters and
// the SHA-256 of the training configuration.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rallypose/nn/tensor.hpp"

namespace rallypose::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<Parameter> parameters; // grads are zero after loading
    nlohmann::json sidecar;
};

std::string encode_parameters(std::span<const Parameter* const> params);
std::vector<Parameter> decode_parameters(const std::string& bytes, const std::string& source);

void save_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params,
                     const nlohmann::json& architecture, const nlohmann::json& training_config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Copies values by name; throws ShapeError on a missing name or shape mismatch.
void assign_parameters(std::span<Parameter* const> dst, std::span<const Parameter> src);

} // namespace rallypose::nn
