#pragma once

#include <stdexcept>
#include <string>

namespace gppp {

/// Coarse failure class; the CLI maps each to an exit code.
enum class ErrorKind { config, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

// Data-side refinements.
struct SchemaError : DataError {
    using DataError::DataError;
};
struct ParseError : DataError {
    using DataError::DataError;
};
struct DuplicateKeyError : DataError {
    using DataError::DataError;
};
struct DegenerateCharacteristicError : DataError {
    using DataError::DataError;
};
struct WindowError : DataError {
    using DataError::DataError;
};

// Numeric refinements.
struct DimensionError : NumericError {
    using NumericError::NumericError;
};
struct DomainError : NumericError {
    using NumericError::NumericError;
};
struct SingularCovarianceError : NumericError {
    using NumericError::NumericError;
};
struct FlatFrontierError : NumericError {
    using NumericError::NumericError;
};
struct DiagnosticsError : NumericError {
    using NumericError::NumericError;
};
struct InitializationError : NumericError {
    using NumericError::NumericError;
};

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numeric: return 4;
    }
    return 4;
}

}  // namespace gppp
