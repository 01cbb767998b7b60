#pragma once
// Exception taxonomy shared across the library. The CLI maps these to
// process exit codes: config/usage -> 1, parse/data -> 2, numeric -> 3.

#include <stdexcept>
#include <string>

namespace urir {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Zero usable triples. Pipelines may degrade to raw-embedding items.
struct EmptyGraphError : DataError {
    using DataError::DataError;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace urir
