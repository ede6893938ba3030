#pragma once

#include <stdexcept>
#include <string>

namespace feddc {

// Violated precondition or broken internal invariant. Maps to exit code 3
// in the CLI.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Invalid configuration, bad file, unusable parameter combination. Maps to
// exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data (CSV rows that do not parse). Carries the offending
// row in the message.
class IngestionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// A requested guarantee cannot be met with the given resources.
class InfeasibleError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

inline void require_config(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace feddc
