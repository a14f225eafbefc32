#pragma once

#include <stdexcept>
#include <string>

namespace hdfuzz {

/// Invalid configuration: bad flag values, malformed config JSON, unknown keys.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data: IDX, PGM or model-file parse failures.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failures, annotated with the offending path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hdfuzz
