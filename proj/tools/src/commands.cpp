#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "skolr/checkpoint.hpp"
#include "skolr/data.hpp"
#include "skolr/dynamics.hpp"
#include "skolr/error.hpp"
#include "skolr/koopman.hpp"
#include "skolr/rng.hpp"
#include "svg.hpp"

namespace skolr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

SystemSpec system_spec(const RunConfig& cfg)
{
    SystemSpec spec = SystemSpec::defaults(parse_system(cfg.system));
    if (cfg.dt) spec.dt = *cfg.dt;
    spec.steps = cfg.steps;
    spec.seed = cfg.seed;
    for (const auto& [name, value] : cfg.params) spec.set_param(name, value);
    spec.validate();
    return spec;
}

std::string file_hash(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return fnv1a_hex(bytes.str());
}

struct LoadedData {
    Dataset ds;
    std::string hash;
};

LoadedData load_dataset(const RunConfig& cfg)
{
    if (!cfg.data.empty()) {
        CsvSchema schema;
        schema.columns = cfg.columns;
        LoadedData out{load_csv(cfg.data, schema), file_hash(cfg.data)};
        return out;
    }
    if (!cfg.system.empty()) {
        const SystemSpec spec = system_spec(cfg);
        const Trajectory traj = generate(spec);
        LoadedData out;
        out.ds.values = traj.states;
        out.ds.channel_names = state_names(spec.kind);
        out.ds.source = "system:" + to_string(spec.kind);
        std::ostringstream text;
        write_trajectory_csv(text, traj);
        out.hash = fnv1a_hex(text.str());
        return out;
    }
    throw ConfigError("no dataset: pass --data <csv> or --system <name>");
}

std::string provenance(const RunConfig& cfg, const std::map<std::string, std::string>& extra = {})
{
    std::string line = "# skolr version=" SKOLR_VERSION " command=" + cfg.command + " seed=" + std::to_string(cfg.seed);
    for (const auto& [k, v] : extra) line += " " + k + "=" + v;
    return line;
}

std::string join(const std::vector<std::string>& items, char sep)
{
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : std::string(1, sep)) + s;
    return out;
}

std::string ratios_text(const std::array<double, 3>& r)
{
    return format_double(r[0]) + "," + format_double(r[1]) + "," + format_double(r[2]);
}

std::array<double, 3> parse_ratios(const std::string& text)
{
    std::array<double, 3> r{};
    std::stringstream s(text);
    std::string item;
    for (double& v : r) {
        if (!std::getline(s, item, ',')) throw FormatError("checkpoint split metadata is malformed: " + text);
        v = std::stod(item);
    }
    return r;
}

std::ofstream open_out(const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

Standardizer scaler_of(const Checkpoint& ckpt)
{
    const auto m = ckpt.extras.find("scaler.mean"), s = ckpt.extras.find("scaler.std");
    if (m == ckpt.extras.end() || s == ckpt.extras.end()) return Standardizer::identity(ckpt.config.channels);
    return {m->second.storage(), s->second.storage()};
}

/// Refuses a checkpoint whose config disagrees with explicitly requested model settings or the data width.
void check_compatible(const RunConfig& cfg, const ModelConfig& stored, std::size_t channels, bool horizon_is_model)
{
    ModelConfig expected = stored;
    const auto given = [&](const char* k) { return cfg.given.count(k) > 0; };
    if (given("lookback")) expected.lookback = cfg.model.lookback;
    if (horizon_is_model && given("horizon")) expected.horizon = cfg.model.horizon;
    if (given("branches")) expected.branches = cfg.model.branches;
    if (given("dynamic_dim")) expected.dynamic_dim = cfg.model.dynamic_dim;
    if (given("ffn_layers")) expected.ffn_layers = cfg.model.ffn_layers;
    if (given("patch")) expected.patch = cfg.model.patch;
    if (given("dropout")) expected.dropout = cfg.model.dropout;
    expected.channels = channels;
    require_compatible(stored, expected);
}

Dataset load_input(const RunConfig& cfg, const Checkpoint& ckpt)
{
    if (cfg.input.empty()) throw ConfigError("missing --input <csv>");
    CsvSchema schema;
    schema.columns = cfg.columns;
    if (schema.columns.empty()) {
        const auto it = ckpt.metadata.find("columns");
        if (it != ckpt.metadata.end() && !it->second.empty()) {
            std::stringstream s(it->second);
            std::string item;
            while (std::getline(s, item, ',')) schema.columns.push_back(item);
        }
    }
    return load_csv(cfg.input, schema);
}

Tensor input_window(const RunConfig& cfg, const Dataset& ds, std::size_t lookback)
{
    if (ds.rows() < lookback)
        throw DataError(cfg.input + " has " + std::to_string(ds.rows()) + " rows; the model needs L=" +
                        std::to_string(lookback));
    const std::size_t origin = cfg.origin.value_or(ds.rows() - lookback);
    if (origin + lookback > ds.rows())
        throw ConfigError("origin " + std::to_string(origin) + " leaves fewer than L=" + std::to_string(lookback) +
                          " rows in " + cfg.input);
    Tensor window({lookback, ds.channels()});
    for (std::size_t k = 0; k < lookback; ++k)
        for (std::size_t c = 0; c < ds.channels(); ++c) window(k, c) = ds.values(origin + k, c);
    return window;
}

void write_table(std::ostream& out, const std::string& header, const std::vector<std::string>& names, const Tensor& rows,
                 std::size_t first_index = 0)
{
    out << header << '\n' << "step";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        out << first_index + r;
        for (std::size_t c = 0; c < rows.cols(); ++c) out << ',' << format_double(rows(r, c));
        out << '\n';
    }
}

json report_json(const MetricReport& r)
{
    json j{{"mse", r.mse}, {"mae", r.mae}, {"count", r.count}};
    j["smape"] = r.smape ? json(*r.smape) : json();
    j["mase"] = r.mase ? json(*r.mase) : json();
    j["owa"] = r.owa ? json(*r.owa) : json();
    return j;
}

struct TrainOutcome {
    TrainResult result;
    MetricReport test;
};

TrainOutcome run_training(const RunConfig& cfg, const LoadedData& data, const fs::path& dir)
{
    const Dataset& ds = data.ds;
    const SplitRanges ranges = split_rows(ds.rows(), cfg.split);
    const Standardizer scaler = cfg.standardize ? Standardizer::fit(ds.values, ranges.train)
                                                : Standardizer::identity(ds.channels());
    const Tensor values = scaler.apply(ds.values);

    fs::create_directories(dir);
    const std::string train_hash = fnv1a_hex(cfg.train.canonical());
    const std::map<std::string, std::string> prov{{"config_hash", config_hash(cfg.model)},
                                                  {"train_hash", train_hash},
                                                  {"data_hash", data.hash}};
    {
        json j = cfg.to_json();
        j["provenance"] = {{"version", SKOLR_VERSION}, {"config_hash", config_hash(cfg.model)},
                           {"train_hash", train_hash}, {"data_hash", data.hash},
                           {"data_source", ds.source}, {"rng", std::string(Rng::algorithm)}};
        open_out(dir / "config.json") << j.dump(2) << '\n';
    }

    std::ofstream log = open_out(dir / "train_log.csv");
    log << provenance(cfg, prov) << '\n' << "epoch,train_mse,val_mse,lr,seconds\n";
    std::cerr << "training on " << ds.source << ": " << ranges.train.size() << "/" << ranges.val.size() << "/"
              << ranges.test.size() << " rows, " << expected_parameter_count(cfg.model) << " parameters\n";
    TrainOutcome outcome;
    outcome.result = train(cfg.model, values, ranges.train, ranges.val, cfg.train, [&](const EpochLog& e) {
        log << e.epoch << ',' << format_double(e.train_mse) << ',' << format_double(e.val_mse) << ','
            << format_double(e.lr) << ',' << format_double(e.seconds) << '\n'
            << std::flush;
        std::cerr << "epoch " << e.epoch << " train_mse=" << e.train_mse << " val_mse=" << e.val_mse << " ("
                  << e.seconds << " s)\n";
    });
    const TrainResult& r = outcome.result;

    Checkpoint ckpt;
    ckpt.config = cfg.model;
    ckpt.metadata = {{"version", SKOLR_VERSION},
                     {"seed", std::to_string(cfg.seed)},
                     {"train_hash", train_hash},
                     {"data_hash", data.hash},
                     {"data_source", ds.source},
                     {"columns", join(ds.channel_names, ',')},
                     {"split", ratios_text(cfg.split)},
                     {"standardize", cfg.standardize ? "true" : "false"},
                     {"best_epoch", std::to_string(r.best_epoch)}};
    ckpt.extras["scaler.mean"] = Tensor::vector(scaler.mean);
    ckpt.extras["scaler.std"] = Tensor::vector(scaler.stdev);
    ckpt.params = r.best;
    save_checkpoint(dir / "best.ckpt", ckpt);
    ckpt.params = r.last;
    ckpt.metadata["epochs_run"] = std::to_string(r.log.size());
    save_checkpoint(dir / "last.ckpt", ckpt);

    if (ranges.test.size() >= cfg.model.lookback + cfg.model.horizon)
        outcome.test = evaluate_range(r.best, cfg.model, values, ranges.test, cfg.train.eval_stride, cfg.threads);

    json summary{{"best_epoch", r.best_epoch},
                 {"best_val_mse", std::isfinite(r.best_val) ? json(r.best_val) : json()},
                 {"epochs", r.log.size()},
                 {"stop_reason", r.stop_reason},
                 {"diverged", r.diverged},
                 {"test", report_json(outcome.test)}};
    open_out(dir / "summary.json") << summary.dump(2) << '\n';
    return outcome;
}

}  // namespace

int cmd_generate(const RunConfig& cfg)
{
    if (cfg.system.empty()) throw ConfigError("generate needs --system");
    const Trajectory traj = generate(system_spec(cfg));
    if (cfg.out.empty()) {
        write_trajectory_csv(std::cout, traj);
    } else {
        std::ofstream out = open_out(cfg.out);
        write_trajectory_csv(out, traj);
        std::cerr << "wrote " << traj.states.rows() << " steps to " << cfg.out << '\n';
    }
    return 0;
}

int cmd_train(RunConfig cfg)
{
    const LoadedData data = load_dataset(cfg);
    cfg.model.channels = data.ds.channels();
    finalize(cfg);
    const fs::path dir = cfg.out.empty() ? fs::path("run") : fs::path(cfg.out);
    const TrainOutcome o = run_training(cfg, data, dir);
    std::cout << json{{"run_dir", dir.string()},
                      {"best_epoch", o.result.best_epoch},
                      {"best_val_mse", std::isfinite(o.result.best_val) ? json(o.result.best_val) : json()},
                      {"test", report_json(o.test)},
                      {"stop_reason", o.result.stop_reason}}
                     .dump()
              << '\n';
    if (o.result.diverged) {
        std::cerr << "error: training diverged (" << o.result.stop_reason << "); best.ckpt holds the last good state\n";
        return 4;
    }
    return 0;
}

int cmd_forecast(const RunConfig& cfg)
{
    if (cfg.checkpoint.empty()) throw ConfigError("missing --checkpoint");
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    const Dataset ds = load_input(cfg, ckpt);
    check_compatible(cfg, ckpt.config, ds.channels(), false);
    const ModelConfig& m = ckpt.config;
    const std::size_t horizon = cfg.given.count("horizon") ? cfg.model.horizon : m.horizon;

    const Standardizer scaler = scaler_of(ckpt);
    const Tensor window = scaler.apply(input_window(cfg, ds, m.lookback));
    const Tensor pred = scaler.invert(extend_horizon(window, ckpt.params, m, horizon));

    const std::string header = provenance(cfg, {{"config_hash", config_hash(m)},
                                                {"checkpoint", cfg.checkpoint},
                                                {"input", cfg.input},
                                                {"horizon", std::to_string(horizon)}});
    if (cfg.out.empty()) {
        write_table(std::cout, header, ds.channel_names, pred);
    } else {
        std::ofstream out = open_out(cfg.out);
        write_table(out, header, ds.channel_names, pred);
    }
    return 0;
}

int cmd_evaluate(const RunConfig& cfg)
{
    if (cfg.checkpoint.empty()) throw ConfigError("missing --checkpoint");
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    RunConfig data_cfg = cfg;
    if (data_cfg.columns.empty() && !data_cfg.data.empty()) {
        const auto it = ckpt.metadata.find("columns");
        if (it != ckpt.metadata.end() && !it->second.empty()) {
            std::stringstream s(it->second);
            std::string item;
            while (std::getline(s, item, ',')) data_cfg.columns.push_back(item);
        }
    }
    const LoadedData data = load_dataset(data_cfg);
    check_compatible(cfg, ckpt.config, data.ds.channels(), true);
    const ModelConfig& m = ckpt.config;

    std::array<double, 3> ratios = cfg.split;
    if (!cfg.given.count("split") && ckpt.metadata.count("split")) ratios = parse_ratios(ckpt.metadata.at("split"));
    const SplitRanges ranges = split_rows(data.ds.rows(), ratios);
    IndexRange range;
    if (cfg.eval_split == "train") range = ranges.train;
    else if (cfg.eval_split == "val") range = ranges.val;
    else if (cfg.eval_split == "test") range = ranges.test;
    else throw ConfigError("eval_split must be train, val or test, got '" + cfg.eval_split + "'");

    const Standardizer scaler = scaler_of(ckpt);
    const Tensor values = scaler.apply(data.ds.values);
    const std::size_t stride = cfg.train.eval_stride;
    const RangeForecast f = forecast_range(ckpt.params, m, values, range, stride, cfg.threads);

    MetricAccumulator acc;
    for (std::size_t i = 0; i < f.origins.size(); ++i)
        acc.add(f.predictions[i], f.truths[i], cfg.seasonality ? &f.histories[i] : nullptr, cfg.seasonality);
    const MetricReport report = acc.report();
    const MetricReport baseline = persistence_baseline(values, range, m.lookback, m.horizon, stride);

    json j{{"split", cfg.eval_split}, {"windows", f.origins.size()}, {"metrics", report_json(report)},
           {"persistence", report_json(baseline)}, {"config_hash", config_hash(m)}, {"checkpoint", cfg.checkpoint}};
    if (!cfg.out.empty()) {
        const fs::path dir(cfg.out);
        const std::string header = provenance(cfg, {{"config_hash", config_hash(m)},
                                                    {"checkpoint", cfg.checkpoint},
                                                    {"data_hash", data.hash},
                                                    {"split", cfg.eval_split}});
        std::ofstream pred = open_out(dir / "predictions.csv");
        pred << header << '\n' << "origin,step,channel,truth,prediction,scaled_truth,scaled_prediction\n";
        for (std::size_t i = 0; i < f.origins.size(); ++i) {
            const Tensor raw = scaler.invert(f.predictions[i]);
            for (std::size_t t = 0; t < m.horizon; ++t)
                for (std::size_t c = 0; c < m.channels; ++c)
                    pred << f.origins[i] << ',' << t << ',' << data.ds.channel_names[c] << ','
                         << format_double(data.ds.values(f.origins[i] + m.lookback + t, c)) << ','
                         << format_double(raw(t, c)) << ',' << format_double(f.truths[i](t, c)) << ','
                         << format_double(f.predictions[i](t, c)) << '\n';
        }
        json saved = j;
        saved["provenance"] = header.substr(2);
        open_out(dir / "metrics.json") << saved.dump(2) << '\n';
    }
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_analyze(const RunConfig& cfg)
{
    if (cfg.checkpoint.empty()) throw ConfigError("missing --checkpoint");
    const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
    const Dataset ds = load_input(cfg, ckpt);
    check_compatible(cfg, ckpt.config, ds.channels(), true);
    const ModelConfig& m = ckpt.config;
    const fs::path dir = cfg.out.empty() ? fs::path("analysis") : fs::path(cfg.out);
    fs::create_directories(dir);
    const std::string header = provenance(cfg, {{"config_hash", config_hash(m)}, {"checkpoint", cfg.checkpoint},
                                                {"input", cfg.input}});

    const Standardizer scaler = scaler_of(ckpt);
    const Tensor window = scaler.apply(input_window(cfg, ds, m.lookback));
    const auto [normalized, state] = instance_norm(window);
    const GateBank gates = ckpt.params.gate_bank();

    // Branch signals per channel, in instance-normalized units.
    std::vector<Tensor> recon(m.branches, Tensor({m.lookback, m.channels}));
    for (std::size_t c = 0; c < m.channels; ++c) {
        Tensor col({m.lookback});
        for (std::size_t k = 0; k < m.lookback; ++k) col[k] = normalized(k, c);
        const auto parts = decompose(col, gates);
        for (std::size_t n = 0; n < m.branches; ++n)
            for (std::size_t k = 0; k < m.lookback; ++k) recon[n](k, c) = parts[n][k];
    }

    // Per-branch forecasts in data units; the dataset mean is split evenly so the files sum to forecast.csv.
    const auto parts = branch_forecasts(window, ckpt.params, m);
    const Tensor combined = scaler.invert(forward(window, ckpt.params, m));
    std::vector<Tensor> predictions;
    for (const auto& p : parts) {
        Tensor raw = p;
        for (std::size_t t = 0; t < raw.rows(); ++t)
            for (std::size_t c = 0; c < raw.cols(); ++c)
                raw(t, c) = p(t, c) * scaler.stdev[c] + scaler.mean[c] / static_cast<double>(m.branches);
        predictions.push_back(std::move(raw));
    }

    std::vector<SpectrumReport> spectra;
    std::vector<Series> gate_series, pred_series, recon_series;
    for (std::size_t n = 0; n < m.branches; ++n) {
        const std::string suffix = "_branch" + std::to_string(n) + ".csv";
        Series gs{"branch " + std::to_string(n), {}, {}};
        {
            std::ofstream out = open_out(dir / ("gate_response" + suffix));
            out << header << '\n' << "bin,frequency,gate\n";
            for (std::size_t f = 0; f < m.gate_bins(); ++f) {
                const double freq = static_cast<double>(f) / static_cast<double>(m.lookback);
                const double g = 1.0 / (1.0 + std::exp(-gates.logits[n][f]));
                out << f << ',' << format_double(freq) << ',' << format_double(g) << '\n';
                gs.x.push_back(freq);
                gs.y.push_back(g);
            }
        }
        gate_series.push_back(std::move(gs));
        {
            std::ofstream out = open_out(dir / ("reconstruction" + suffix));
            write_table(out, header + " units=instance_normalized", ds.channel_names, recon[n]);
        }
        {
            std::ofstream out = open_out(dir / ("prediction" + suffix));
            write_table(out, header, ds.channel_names, predictions[n], m.lookback);
        }
        spectra.push_back(eigenvalues(ckpt.params.branches[n].transition, n));
        {
            std::ofstream out = open_out(dir / ("eigenvalues" + suffix));
            out << header << '\n';
            write_spectrum_csv(out, std::span(&spectra.back(), 1));
        }
        Series ps{"branch " + std::to_string(n), {}, {}}, rs{"branch " + std::to_string(n), {}, {}};
        for (std::size_t t = 0; t < m.horizon; ++t) {
            ps.x.push_back(static_cast<double>(m.lookback + t));
            ps.y.push_back(predictions[n](t, 0));
        }
        for (std::size_t k = 0; k < m.lookback; ++k) {
            rs.x.push_back(static_cast<double>(k));
            rs.y.push_back(recon[n](k, 0));
        }
        pred_series.push_back(std::move(ps));
        recon_series.push_back(std::move(rs));
    }
    {
        std::ofstream out = open_out(dir / "forecast.csv");
        write_table(out, header, ds.channel_names, combined, m.lookback);
    }
    Series input{"input", {}, {}}, total{"forecast", {}, {}};
    const Tensor raw_window = scaler.invert(window);
    for (std::size_t k = 0; k < m.lookback; ++k) {
        input.x.push_back(static_cast<double>(k));
        input.y.push_back(raw_window(k, 0));
    }
    for (std::size_t t = 0; t < m.horizon; ++t) {
        total.x.push_back(static_cast<double>(m.lookback + t));
        total.y.push_back(combined(t, 0));
    }
    pred_series.insert(pred_series.begin(), {std::move(input), std::move(total)});
    write_line_svg(dir / "gate_response.svg", "gate response by frequency", gate_series);
    write_line_svg(dir / "reconstruction.svg", "branch signals, " + ds.channel_names[0], recon_series);
    write_line_svg(dir / "prediction.svg", "branch forecasts, " + ds.channel_names[0], pred_series);
    write_spectrum_svg(dir / "eigenvalues.svg", spectra);

    json j{{"out", dir.string()}, {"branches", json::array()}};
    for (const auto& s : spectra) j["branches"].push_back({{"branch", s.branch}, {"spectral_radius", s.spectral_radius()}});
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_gridsearch(RunConfig cfg)
{
    if (cfg.grid.empty()) throw ConfigError("gridsearch needs at least one --grid name=v1,v2,... entry");
    static const std::set<std::string> searchable = {"lookback", "horizon", "branches", "dynamic_dim", "ffn_layers",
                                                     "patch",    "dropout", "lr",       "weight_decay", "batch_size"};
    for (const auto& [key, values] : cfg.grid) {
        if (!searchable.count(key)) throw ConfigError("grid key '" + key + "' is not searchable");
        if (values.empty()) throw ConfigError("grid key '" + key + "' has no values");
    }
    const LoadedData data = load_dataset(cfg);

    // Expand the Cartesian product in key order and validate every point before training any.
    std::vector<json> points{json::object()};
    for (const auto& [key, values] : cfg.grid) {
        std::vector<json> next;
        for (const auto& p : points)
            for (double v : values) {
                json q = p;
                q[key] = v;
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    std::vector<RunConfig> runs;
    for (const auto& p : points) {
        RunConfig c = cfg;
        c.grid.clear();
        apply_json(c, p);
        c.command = "train";
        c.model.channels = data.ds.channels();
        finalize(c);
        runs.push_back(std::move(c));
    }

    const fs::path dir = cfg.out.empty() ? fs::path("grid") : fs::path(cfg.out);
    fs::create_directories(dir);
    std::ofstream table = open_out(dir / "gridsearch.csv");
    table << provenance(cfg, {{"data_hash", data.hash}}) << '\n' << "run";
    for (const auto& [key, values] : cfg.grid) table << ',' << key;
    table << ",best_epoch,best_val_mse,test_mse,diverged\n";

    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string name = "run_" + std::to_string(i);
        std::cerr << "grid point " << i + 1 << "/" << runs.size() << ": " << points[i].dump() << '\n';
        const TrainOutcome o = run_training(runs[i], data, dir / name);
        table << name;
        for (const auto& [key, values] : cfg.grid) table << ',' << format_double(points[i][key].get<double>());
        table << ',' << o.result.best_epoch << ',' << format_double(o.result.best_val) << ','
              << format_double(o.test.mse) << ',' << (o.result.diverged ? "true" : "false") << '\n'
              << std::flush;
        if (o.result.best_val < best_val) {
            best_val = o.result.best_val;
            best = i;
        }
    }
    std::cout << json{{"best_run", "run_" + std::to_string(best)}, {"point", points[best]}, {"best_val_mse", best_val}}
                     .dump()
              << '\n';
    return 0;
}

}  // namespace skolr::cli
