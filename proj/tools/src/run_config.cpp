#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "skolr/error.hpp"

namespace skolr::cli {

using nlohmann::json;

namespace {

template <class T>
T typed(const json& v, const std::string& key)
{
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<T>();
            if (v.is_number_float()) {
                const double d = v.get<double>();
                if (d >= 0 && std::floor(d) == d) return static_cast<T>(d);
            }
            throw ConfigError("config key '" + key + "' needs a non-negative integer, got " + v.dump());
        } else {
            return v.get<T>();
        }
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
    }
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

json parse_scalar(const std::string& text)
{
    const json v = json::parse(text, nullptr, false);
    return v.is_discarded() || v.is_object() || v.is_array() ? json(text) : v;
}

}  // namespace

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = {
        "command", "data", "columns", "system", "steps", "dt", "params", "split", "standardize",
        "lookback", "horizon", "branches", "dynamic_dim", "ffn_layers", "patch", "dropout",
        "lr", "weight_decay", "beta1", "beta2", "eps", "batch_size", "epochs", "patience", "micro_batch",
        "train_stride", "eval_stride", "clip_norm", "seed", "threads", "out", "checkpoint", "input", "origin",
        "eval_split", "seasonality", "grid"};
    return keys;
}

json flag_value(const std::string& key, const std::string& text)
{
    if (key == "columns") return split_list(text);
    if (key == "split") {
        json arr = json::array();
        for (const auto& item : split_list(text)) arr.push_back(parse_scalar(item));
        return arr;
    }
    if (key == "params" || key == "grid") {
        // k=v or k=v1,v2,...
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("--" + key + " expects name=value, got '" + text + "'");
        const std::string name = text.substr(0, eq);
        json values = json::array();
        for (const auto& item : split_list(text.substr(eq + 1))) values.push_back(parse_scalar(item));
        if (key == "params") return json{{name, values.empty() ? json() : values.front()}};
        return json{{name, values}};
    }
    if (key == "data" || key == "system" || key == "out" || key == "checkpoint" || key == "input" ||
        key == "eval_split" || key == "command")
        return text;
    return parse_scalar(text);
}

void apply_json(RunConfig& cfg, const json& source)
{
    if (!source.is_object()) throw ConfigError("config must be a JSON object");
    const auto& keys = config_keys();
    for (const auto& [key, v] : source.items()) {
        if (key == "provenance") continue;
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError("unknown config key '" + key + "'");
        cfg.given.insert(key);
        auto& m = cfg.model;
        auto& t = cfg.train;
        if (key == "command") cfg.command = typed<std::string>(v, key);
        else if (key == "data") cfg.data = typed<std::string>(v, key);
        else if (key == "columns") cfg.columns = typed<std::vector<std::string>>(v, key);
        else if (key == "system") cfg.system = typed<std::string>(v, key);
        else if (key == "steps") cfg.steps = typed<std::size_t>(v, key);
        else if (key == "dt") cfg.dt = typed<double>(v, key);
        else if (key == "params") {
            if (!v.is_object()) throw ConfigError("config key 'params' must be an object of name: value");
            for (const auto& [name, value] : v.items()) cfg.params[name] = typed<double>(value, "params." + name);
        } else if (key == "split") {
            const auto r = typed<std::vector<double>>(v, key);
            if (r.size() != 3) throw ConfigError("split needs three ratios train,val,test");
            std::copy(r.begin(), r.end(), cfg.split.begin());
        } else if (key == "standardize") cfg.standardize = typed<bool>(v, key);
        else if (key == "lookback") m.lookback = typed<std::size_t>(v, key);
        else if (key == "horizon") m.horizon = typed<std::size_t>(v, key);
        else if (key == "branches") m.branches = typed<std::size_t>(v, key);
        else if (key == "dynamic_dim") m.dynamic_dim = typed<std::size_t>(v, key);
        else if (key == "ffn_layers") m.ffn_layers = typed<std::size_t>(v, key);
        else if (key == "patch") {
            m.patch = typed<std::size_t>(v, key);
            cfg.patch_given = true;
        } else if (key == "dropout") m.dropout = typed<double>(v, key);
        else if (key == "lr") t.lr = typed<double>(v, key);
        else if (key == "weight_decay") t.weight_decay = typed<double>(v, key);
        else if (key == "beta1") t.beta1 = typed<double>(v, key);
        else if (key == "beta2") t.beta2 = typed<double>(v, key);
        else if (key == "eps") t.eps = typed<double>(v, key);
        else if (key == "batch_size") t.batch_size = typed<std::size_t>(v, key);
        else if (key == "epochs") t.max_epochs = typed<std::size_t>(v, key);
        else if (key == "patience") t.patience = typed<std::size_t>(v, key);
        else if (key == "micro_batch") t.micro_batch = typed<std::size_t>(v, key);
        else if (key == "train_stride") t.train_stride = typed<std::size_t>(v, key);
        else if (key == "eval_stride") t.eval_stride = typed<std::size_t>(v, key);
        else if (key == "clip_norm") t.clip_norm = typed<double>(v, key);
        else if (key == "seed") cfg.seed = typed<std::uint64_t>(v, key);
        else if (key == "threads") cfg.threads = typed<std::size_t>(v, key);
        else if (key == "out") cfg.out = typed<std::string>(v, key);
        else if (key == "checkpoint") cfg.checkpoint = typed<std::string>(v, key);
        else if (key == "input") cfg.input = typed<std::string>(v, key);
        else if (key == "origin") cfg.origin = v.is_null() ? std::nullopt : std::optional(typed<std::size_t>(v, key));
        else if (key == "eval_split") cfg.eval_split = typed<std::string>(v, key);
        else if (key == "seasonality") cfg.seasonality = typed<std::size_t>(v, key);
        else if (key == "grid") {
            if (!v.is_object()) throw ConfigError("config key 'grid' must map names to value lists");
            for (const auto& [name, values] : v.items())
                cfg.grid[name] = values.is_array() ? typed<std::vector<double>>(values, "grid." + name)
                                                   : std::vector<double>{typed<double>(values, "grid." + name)};
        }
    }
    cfg.train.seed = cfg.seed;
    cfg.train.threads = cfg.threads;
}

json RunConfig::to_json() const
{
    json j;
    j["command"] = command;
    j["data"] = data;
    j["columns"] = columns;
    j["system"] = system;
    j["steps"] = steps;
    if (dt) j["dt"] = *dt;
    j["params"] = params;
    j["split"] = split;
    j["standardize"] = standardize;
    j["lookback"] = model.lookback;
    j["horizon"] = model.horizon;
    j["branches"] = model.branches;
    j["dynamic_dim"] = model.dynamic_dim;
    j["ffn_layers"] = model.ffn_layers;
    j["patch"] = model.patch;
    j["dropout"] = model.dropout;
    j["lr"] = train.lr;
    j["weight_decay"] = train.weight_decay;
    j["beta1"] = train.beta1;
    j["beta2"] = train.beta2;
    j["eps"] = train.eps;
    j["batch_size"] = train.batch_size;
    j["epochs"] = train.max_epochs;
    j["patience"] = train.patience;
    j["micro_batch"] = train.micro_batch;
    j["train_stride"] = train.train_stride;
    j["eval_stride"] = train.eval_stride;
    j["clip_norm"] = train.clip_norm;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out"] = out;
    if (!grid.empty()) j["grid"] = grid;
    return j;
}

void finalize(RunConfig& cfg)
{
    auto& m = cfg.model;
    if (!cfg.patch_given) m.patch = default_patch(m.lookback);
    if (m.patch != 0 && m.lookback % m.patch == 0 && m.horizon % m.patch != 0) {
        // Point at the closest patch length that divides both L and T.
        std::size_t best = 0;
        for (std::size_t d : divisors(m.lookback))
            if (m.horizon % d == 0 &&
                (best == 0 || (d > m.patch ? d - m.patch : m.patch - d) < (best > m.patch ? best - m.patch : m.patch - best)))
                best = d;
        throw ConfigError("patch length P=" + std::to_string(m.patch) + " does not divide horizon T=" +
                          std::to_string(m.horizon) + "; nearest valid P is " + std::to_string(best));
    }
    m.validate();
    cfg.train.seed = cfg.seed;
    cfg.train.threads = cfg.threads;
    cfg.train.validate();
}

}  // namespace skolr::cli
