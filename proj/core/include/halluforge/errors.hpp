#pragma once

#include <stdexcept>
#include <string>

namespace halluforge {

enum class ErrorCode {
    precondition,
    config,
    io,
    serialization,
    numeric,
    fixture_miss,
    backend_unavailable,
    judge_parse,
    lookup,
    triple_failure,
    pool_shortfall,
    export_error,
};

const char* error_code_name(ErrorCode code);

/// All failures surface as this one exception type; the code tells callers
/// which contract was broken (some codes are recoverable per stage, e.g.
/// a judge_parse error on one sample drops that sample, not the run).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool ok, ErrorCode code, const std::string& message) {
    if (!ok) fail(code, message);
}

}  // namespace halluforge
