#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace degbench {

enum class ErrorKind {
    io,
    parse,
    schema,
    curation,
    split,
    metrics,
    jv,
    fit,
    forecast,
    training,
    prediction,
    config,
    benchmark,
    verification,
    shapley,
    leakage,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this type; kind() lets callers
// (and the CLI's JSON error output) distinguish the cases.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace degbench
