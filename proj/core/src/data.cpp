#include "skolr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "skolr/error.hpp"

namespace skolr {

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_rows(std::ostream& out, const Tensor& rows)
{
    const std::size_t r = rows.rows(), c = rows.cols();
    std::string line;
    for (std::size_t i = 0; i < r; ++i) {
        line.clear();
        for (std::size_t j = 0; j < c; ++j) {
            if (j) line += ',';
            line += format_double(rows.storage()[i * c + j]);
        }
        line += '\n';
        out << line;
    }
}

namespace {

std::string trim(std::string s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t start = 0;
    while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
    return s.substr(start);
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

void parse_metadata(const std::string& comment, std::map<std::string, std::string>& meta)
{
    std::istringstream in(comment.substr(1));
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq != std::string::npos) meta[token.substr(0, eq)] = token.substr(eq + 1);
    }
}

bool parse_number(const std::string& text, double& out)
{
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvSchema& schema, const std::string& source)
{
    Dataset ds;
    ds.source = source;
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
        if (line.empty()) continue;
        if (line[0] == '#') {
            parse_metadata(line, ds.metadata);
            continue;
        }
        header = split_fields(line);
        break;
    }
    if (header.empty()) throw DataError(source + ": missing header row");

    std::vector<std::size_t> picked;
    if (schema.columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            std::string lower = header[c];
            std::transform(lower.begin(), lower.end(), lower.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
            const bool skip = c == 0 && std::find(schema.ignored.begin(), schema.ignored.end(), lower) != schema.ignored.end();
            if (!skip) picked.push_back(c);
        }
    } else {
        for (const auto& name : schema.columns) {
            const auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw DataError(source + ": schema column '" + name + "' not found in header");
            picked.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }
    if (picked.empty()) throw DataError(source + ": no value columns");
    for (std::size_t c : picked) ds.channel_names.push_back(header[c]);

    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw DataError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()));
        for (std::size_t c : picked) {
            double v = 0.0;
            if (!parse_number(fields[c], v))
                throw DataError(source + ": cannot parse '" + fields[c] + "' at row " + std::to_string(line_no) +
                                ", column " + std::to_string(c + 1) + " (" + header[c] + ")");
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw DataError(source + ": dataset is empty (header only)");
    ds.values = Tensor({rows, picked.size()}, std::move(values));
    return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_csv(in, schema, path.string());
}

void write_csv(std::ostream& out, const Tensor& values, const std::vector<std::string>& names)
{
    if (names.size() != values.cols())
        throw DimensionError("write_csv: " + std::to_string(names.size()) + " names for " + shape_string(values.shape()));
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    write_rows(out, values);
}

SplitRanges split_rows(std::size_t rows, const std::array<double, 3>& ratios)
{
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (!(ratios[0] > 0.0 && ratios[1] >= 0.0 && ratios[2] > 0.0))
        throw ConfigError("split ratios must be positive (validation may be zero)");
    const auto part = [&](double r) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(rows) * r / total + 1e-9));
    };
    const std::size_t train = part(ratios[0]);
    const std::size_t val = part(ratios[1]);
    return {{0, train}, {train, train + val}, {train + val, rows}};
}

Standardizer Standardizer::fit(const Tensor& values, IndexRange rows)
{
    if (rows.size() < 2 || rows.end > values.rows())
        throw ConfigError("standardizer needs at least two rows inside the dataset");
    Standardizer s;
    const std::size_t c = values.cols();
    s.mean.assign(c, 0.0);
    s.stdev.assign(c, 0.0);
    for (std::size_t r = rows.begin; r < rows.end; ++r)
        for (std::size_t j = 0; j < c; ++j) s.mean[j] += values(r, j);
    for (double& m : s.mean) m /= static_cast<double>(rows.size());
    for (std::size_t r = rows.begin; r < rows.end; ++r)
        for (std::size_t j = 0; j < c; ++j) {
            const double d = values(r, j) - s.mean[j];
            s.stdev[j] += d * d;
        }
    for (double& v : s.stdev) {
        v = std::sqrt(v / static_cast<double>(rows.size()));
        if (v == 0.0) v = 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(std::size_t channels)
{
    return {std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0)};
}

Tensor Standardizer::apply(const Tensor& values) const
{
    if (values.cols() != mean.size()) throw DimensionError("standardizer channel count mismatch");
    Tensor out = values;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean[c]) / stdev[c];
    return out;
}

Tensor Standardizer::invert(const Tensor& values) const
{
    if (values.cols() != mean.size()) throw DimensionError("standardizer channel count mismatch");
    Tensor out = values;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * stdev[c] + mean[c];
    return out;
}

std::size_t window_count(IndexRange range, std::size_t lookback, std::size_t horizon, std::size_t stride)
{
    if (stride == 0) throw ConfigError("window stride must be positive");
    const std::size_t extent = lookback + horizon;
    if (range.size() < extent) return 0;
    return (range.size() - extent) / stride + 1;
}

std::vector<WindowSample> make_windows(const Tensor& values, IndexRange range, std::size_t lookback,
                                       std::size_t horizon, std::size_t stride)
{
    if (range.end > values.rows()) throw ConfigError("window range exceeds the dataset");
    const std::size_t extent = lookback + horizon;
    if (range.size() < extent)
        throw ConfigError("split of " + std::to_string(range.size()) + " rows is shorter than the required L+T=" +
                          std::to_string(extent));
    const std::size_t count = window_count(range, lookback, horizon, stride);
    const std::size_t c = values.cols();
    std::vector<WindowSample> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t origin = range.begin + w * stride;
        WindowSample s{Tensor({lookback, c}), Tensor({horizon, c}), origin};
        const auto first = values.storage().begin() + static_cast<std::ptrdiff_t>(origin * c);
        std::copy(first, first + static_cast<std::ptrdiff_t>(lookback * c), s.input.storage().begin());
        std::copy(first + static_cast<std::ptrdiff_t>(lookback * c), first + static_cast<std::ptrdiff_t>(extent * c),
                  s.target.storage().begin());
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<UnitBatch> batch_channel_independent(const std::vector<WindowSample>& samples, std::size_t batch_size)
{
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    std::vector<UnitKey> keys;
    for (std::size_t s = 0; s < samples.size(); ++s)
        for (std::size_t c = 0; c < samples[s].input.cols(); ++c) keys.push_back({s, c});

    std::vector<UnitBatch> batches;
    for (std::size_t start = 0; start < keys.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, keys.size() - start);
        const std::size_t lookback = samples[keys[start].sample].input.rows();
        const std::size_t horizon = samples[keys[start].sample].target.rows();
        UnitBatch b{{}, Tensor({n, lookback}), Tensor({n, horizon})};
        for (std::size_t i = 0; i < n; ++i) {
            const UnitKey key = keys[start + i];
            const auto& s = samples[key.sample];
            for (std::size_t k = 0; k < lookback; ++k) b.inputs(i, k) = s.input(k, key.channel);
            for (std::size_t k = 0; k < horizon; ++k) b.targets(i, k) = s.target(k, key.channel);
            b.keys.push_back(key);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

std::vector<Tensor> reassemble(const std::vector<UnitBatch>& batches, const std::vector<Tensor>& outputs,
                               std::size_t samples, std::size_t channels)
{
    if (batches.size() != outputs.size()) throw DimensionError("reassemble: one output per batch required");
    std::vector<Tensor> result;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const Tensor& out = outputs[b];
        if (out.rows() != batches[b].keys.size())
            throw DimensionError("reassemble: output rows do not match batch units");
        for (std::size_t i = 0; i < batches[b].keys.size(); ++i) {
            const UnitKey key = batches[b].keys[i];
            if (key.sample >= samples || key.channel >= channels) throw DimensionError("reassemble: key out of range");
            if (result.empty()) result.assign(samples, Tensor({out.cols(), channels}));
            for (std::size_t t = 0; t < out.cols(); ++t) result[key.sample](t, key.channel) = out(i, t);
        }
    }
    return result;
}

}  // namespace skolr
