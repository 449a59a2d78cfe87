#pragma once

#include <stdexcept>
#include <string>

namespace phoenix {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    kOk = 0,
    kGeneric = 1,
    kConfig = 2,
    kFormat = 3,
    kNumeric = 4,
    kStructural = 5,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::kGeneric; }
};

/// Invalid or inconsistent configuration (unknown key, single-class split, ...).
class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

/// Malformed file contents (bad magic, truncation, unparsable manifest line).
class FormatError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kFormat; }
};

/// NaN/Inf where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
};

/// Shape mismatches and API misuse.
class StructuralError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::kStructural; }
};

}  // namespace phoenix
