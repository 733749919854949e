#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "run_config.hpp"
#include "skolr/error.hpp"

using namespace skolr;
using namespace skolr::cli;

namespace {

const std::vector<std::string> data_keys = {"data", "columns", "system", "steps", "dt", "params", "split"};
const std::vector<std::string> model_keys = {"lookback", "horizon", "branches", "dynamic_dim", "ffn_layers", "patch",
                                             "dropout"};
const std::vector<std::string> train_keys = {"standardize", "lr", "weight_decay", "beta1", "beta2", "eps",
                                             "batch_size", "epochs", "patience", "micro_batch", "train_stride",
                                             "eval_stride", "clip_norm"};

const std::map<std::string, std::string> help = {
    {"seed", "seed for initialisation, shuffling and simulation (default 0)"},
    {"out", "output file or run directory"},
    {"threads", "worker threads; results do not depend on it (default 1)"},
    {"data", "input CSV"},
    {"columns", "comma-separated columns to use (default: all numeric)"},
    {"system", "pendulum, duffing, lotka_volterra or lorenz63"},
    {"steps", "trajectory length (default 20000)"},
    {"dt", "Euler step (default 0.001 pendulum, 0.01 otherwise)"},
    {"split", "train,val,test ratios (default 7,1,2)"},
    {"lookback", "input window L (default 96)"},
    {"horizon", "forecast length T; forecast accepts multiples of P beyond it (default 48)"},
    {"branches", "frequency branches N (default 2)"},
    {"dynamic_dim", "state width D per branch (default 64)"},
    {"ffn_layers", "hidden layers M per feed-forward net (default 1)"},
    {"patch", "patch length P (default L/6)"},
    {"dropout", "dropout after hidden activations (default 0)"},
    {"standardize", "z-score channels with train-split statistics (default true)"},
    {"lr", "AdamW learning rate (default 1e-4)"},
    {"weight_decay", "decoupled weight decay (default 5e-4)"},
    {"beta1", "AdamW beta1 (default 0.9)"},
    {"beta2", "AdamW beta2 (default 0.999)"},
    {"eps", "AdamW epsilon (default 1e-8)"},
    {"batch_size", "windows per optimiser step (default 32)"},
    {"epochs", "maximum epochs (default 100)"},
    {"patience", "epochs without validation improvement before stopping (default 10)"},
    {"micro_batch", "windows per gradient tape (default 32)"},
    {"train_stride", "window stride over the train split (default 1)"},
    {"eval_stride", "window stride for validation and evaluation (default 1)"},
    {"clip_norm", "global gradient-norm clip, 0 disables (default 0)"},
    {"checkpoint", "checkpoint file"},
    {"input", "CSV whose trailing L rows form the input window"},
    {"origin", "first input row instead of the trailing window"},
    {"eval_split", "train, val or test (default test)"},
    {"seasonality", "season length m for MASE and OWA"},
};

std::string dashed(std::string key)
{
    for (char& c : key)
        if (c == '_') c = '-';
    return "--" + key;
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Data:
    case ErrorKind::Format: return 3;
    case ErrorKind::Numeric: return 4;
    default: return 2;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral Koopman linear-RNN forecaster"};
    app.set_version_flag("--version", SKOLR_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::map<std::string, std::vector<std::string>> raw;
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with config keys; explicit flags override it");
    for (const char* key : {"seed", "out", "threads"})
        app.add_option(dashed(key), raw[key], help.at(key))->expected(1);

    auto add_keys = [&](CLI::App* cmd, const std::vector<std::string>& keys) {
        for (const auto& key : keys) {
            auto* opt = cmd->add_option(dashed(key), raw[key]);
            if (key == "params")
                opt->description("system parameter name=value (repeatable)");
            else if (key == "grid")
                opt->description("search key=v1,v2,... (repeatable)");
            else
                opt->expected(1)->description(help.at(key));
        }
    };
    auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };

    auto* gen = app.add_subcommand("generate", "Simulate a dynamical system to CSV");
    add_keys(gen, {"system", "steps", "dt", "params"});
    auto* trn = app.add_subcommand("train", "Train a model into a run directory");
    add_keys(trn, with(with(data_keys, model_keys), train_keys));
    auto* fc = app.add_subcommand("forecast", "Forecast from the last L rows of a CSV");
    add_keys(fc, with({"checkpoint", "input", "origin", "columns"}, model_keys));
    auto* ev = app.add_subcommand("evaluate", "Score a checkpoint on a dataset split");
    add_keys(ev, with(with(data_keys, model_keys), {"checkpoint", "eval_split", "eval_stride", "seasonality"}));
    auto* an = app.add_subcommand("analyze", "Export gate responses, branch signals and spectra");
    add_keys(an, with({"checkpoint", "input", "origin", "columns"}, model_keys));
    auto* grid = app.add_subcommand("gridsearch", "Train every point of a hyperparameter grid");
    add_keys(grid, with(with(with(data_keys, model_keys), train_keys), {"grid"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot read config file " + config_path);
            const auto j = nlohmann::json::parse(in, nullptr, false);
            if (j.is_discarded()) throw ConfigError("config file " + config_path + " is not valid JSON");
            apply_json(cfg, j);
        }
        nlohmann::json flags = nlohmann::json::object();
        for (const auto& [key, values] : raw) {
            if (values.empty()) continue;
            if (key == "params" || key == "grid") {
                for (const auto& v : values) flags[key].update(flag_value(key, v));
            } else {
                flags[key] = flag_value(key, values.back());
            }
        }
        apply_json(cfg, flags);

        CLI::App* cmd = app.get_subcommands().front();
        cfg.command = cmd->get_name();
        if (cmd == gen) return cmd_generate(cfg);
        if (cmd == trn) return cmd_train(cfg);
        if (cmd == fc) return cmd_forecast(cfg);
        if (cmd == ev) return cmd_evaluate(cfg);
        if (cmd == an) return cmd_analyze(cfg);
        return cmd_gridsearch(cfg);
    } catch (const skolr::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
