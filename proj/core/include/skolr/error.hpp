#pragma once

#include <stdexcept>
#include <string>
#include <vector>
#include <cstddef>

namespace skolr {

/// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
    Dimension,  // shape / width mismatch
    Config,     // invalid configuration or usage
    Data,       // unreadable or malformed input
    Format,     // inconsistent serialized payload
    Numeric,    // divergence, non-convergence, non-finite values
    Contract,   // API precondition violated by the caller
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error(ErrorKind::Dimension, what) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};
struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};
struct ContractError : Error {
    explicit ContractError(const std::string& what) : Error(ErrorKind::Contract, what) {}
};

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace skolr
