#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skolr/dynamics.hpp"
#include "skolr/tensor.hpp"

namespace skolr {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Comma-separated rows with format_double cells.
void write_rows(std::ostream& out, const Tensor& rows);

struct CsvSchema {
    /// Columns to keep, in order; empty keeps every non-timestamp column.
    std::vector<std::string> columns;
    /// Leading columns with these names are skipped.
    std::vector<std::string> ignored = {"date", "timestamp"};
};

struct Dataset {
    Tensor values;  // rows x channels
    std::vector<std::string> channel_names;
    std::string source;
    /// key=value pairs from '#' comment lines (trajectory metadata).
    std::map<std::string, std::string> metadata;

    std::size_t rows() const { return values.rows(); }
    std::size_t channels() const { return values.cols(); }
};

Dataset parse_csv(std::istream& in, const CsvSchema& schema = {}, const std::string& source = "<stream>");
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_csv(std::ostream& out, const Tensor& values, const std::vector<std::string>& names);

/// Contiguous split with |train| = floor(n*a/(a+b+c)), |val| = floor(n*b/(a+b+c)), remainder to test.
SplitRanges split_rows(std::size_t rows, const std::array<double, 3>& ratios);

/// Per-channel affine standardization fit on one range of rows.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stdev;

    static Standardizer fit(const Tensor& values, IndexRange rows);
    static Standardizer identity(std::size_t channels);
    Tensor apply(const Tensor& values) const;
    Tensor invert(const Tensor& values) const;
};

struct WindowSample {
    Tensor input;   // L x C
    Tensor target;  // T x C
    std::size_t origin = 0;  // first input row in the source series
};

/// Every window whose L+T rows lie inside `range`, stepping by `stride`.
std::vector<WindowSample> make_windows(const Tensor& values, IndexRange range, std::size_t lookback,
                                       std::size_t horizon, std::size_t stride = 1);
std::size_t window_count(IndexRange range, std::size_t lookback, std::size_t horizon, std::size_t stride = 1);

/// One univariate unit of work: channel `channel` of sample `sample`.
struct UnitKey {
    std::size_t sample = 0;
    std::size_t channel = 0;
    friend bool operator==(const UnitKey&, const UnitKey&) = default;
};

struct UnitBatch {
    std::vector<UnitKey> keys;
    Tensor inputs;   // units x L
    Tensor targets;  // units x T
};

std::vector<UnitBatch> batch_channel_independent(const std::vector<WindowSample>& samples, std::size_t batch_size);

/// Inverse of the expansion: per-unit outputs [units x T] back to one [T x C] tensor per sample.
std::vector<Tensor> reassemble(const std::vector<UnitBatch>& batches, const std::vector<Tensor>& outputs,
                               std::size_t samples, std::size_t channels);

}  // namespace skolr
