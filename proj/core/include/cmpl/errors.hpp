#pragma once

#include <stdexcept>
#include <string>

namespace cmpl {

// Invalid experiment/dataset/net configuration, detected before any compute.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A documented operation precondition was violated by the caller.
struct PreconditionError : std::invalid_argument {
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values or other numeric breakdowns.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse, e.g. backward() before any forward pass was recorded.
struct UsageError : std::logic_error {
    explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Missing or inconsistent logged data when assembling a report.
struct ReportError : std::runtime_error {
    explicit ReportError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cmpl
