#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace vqsvc {

// Error categories double as the machine-parseable failure tags the CLI
// prints on exit.
enum class ErrorCategory {
    invalid_input,
    bad_config,
    missing_file,
    io_error,
    unknown_singer,
    untrained_module,
    bad_args,
    unknown_metric,
    internal,
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::invalid_input: return "invalid_input";
        case ErrorCategory::bad_config: return "bad_config";
        case ErrorCategory::missing_file: return "missing_file";
        case ErrorCategory::io_error: return "io_error";
        case ErrorCategory::unknown_singer: return "unknown_singer";
        case ErrorCategory::untrained_module: return "untrained_module";
        case ErrorCategory::bad_args: return "bad_args";
        case ErrorCategory::unknown_metric: return "unknown_metric";
        case ErrorCategory::internal: return "internal";
    }
    return "internal";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& message) {
    throw Error(c, message);
}

inline void require(bool ok, ErrorCategory c, const std::string& message) {
    if (!ok) fail(c, message);
}

using Rng = std::mt19937_64;

// Derives an independent stream from a master seed so that e.g. parameter
// init and batch sampling do not share state.
inline Rng derived_rng(std::uint64_t seed, std::uint64_t stream) {
    const std::uint64_t mixed = stream ^ std::uint64_t{0x9e3779b97f4a7c15};
    std::seed_seq seq{seed, mixed};
    return Rng(seq);
}

}  // namespace vqsvc
