#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "skolr/model.hpp"

namespace skolr {

/// Everything needed to resume or serve a trained model. Extra tensors carry side data such as
/// the dataset scaler; metadata holds provenance strings (hashes, seed, version).
struct Checkpoint {
    ModelConfig config;
    SkolrParams params;
    std::map<std::string, std::string> metadata;
    std::map<std::string, Tensor> extras;
};

/// Binary container: "SKOLRCK1" magic, a text header of key=value lines, then named tensors
/// (name, rank, extents, little-endian IEEE-754 doubles). Bit-exact roundtrip.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws DataError for missing files, FormatError for corrupt payloads and ConfigError naming the
/// first differing field when `expected` is given and does not match.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelConfig>& expected = std::nullopt);

/// Throws ConfigError naming the first field where the two configs differ.
void require_compatible(const ModelConfig& stored, const ModelConfig& expected);

}  // namespace skolr
