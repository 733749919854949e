#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "skolr/model.hpp"
#include "skolr/training.hpp"

namespace skolr::cli {

/// Everything a command needs. Serializes to the same flat keys the flags use, so a dumped
/// config.json can be passed back with --config.
struct RunConfig {
    std::string command;

    std::string data;
    std::vector<std::string> columns;
    std::string system;
    std::size_t steps = 20000;
    std::optional<double> dt;  // system default when unset
    std::map<std::string, double> params;
    std::array<double, 3> split{7.0, 1.0, 2.0};
    bool standardize = true;

    ModelConfig model;
    bool patch_given = false;
    TrainConfig train;

    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out;

    std::string checkpoint;
    std::string input;
    std::optional<std::size_t> origin;
    std::string eval_split = "test";
    std::size_t seasonality = 0;

    std::map<std::string, std::vector<double>> grid;

    /// Keys that came from the config file or a flag rather than the defaults.
    std::set<std::string> given;

    nlohmann::json to_json() const;
};

/// Applies `source` onto `cfg`; unknown keys and ill-typed values throw ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& source);

/// Converts a flag's text to the JSON value its config key expects.
nlohmann::json flag_value(const std::string& key, const std::string& text);

/// Keys accepted both in config files and as --flags (with '_' spelled '-').
const std::vector<std::string>& config_keys();

/// Fills the patch default (L/6) when none was given and validates both configs.
void finalize(RunConfig& cfg);

}  // namespace skolr::cli
