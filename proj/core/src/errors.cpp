#include "halluforge/errors.hpp"

namespace halluforge {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::precondition: return "precondition";
        case ErrorCode::config: return "config";
        case ErrorCode::io: return "io";
        case ErrorCode::serialization: return "serialization";
        case ErrorCode::numeric: return "numeric";
        case ErrorCode::fixture_miss: return "fixture-miss";
        case ErrorCode::backend_unavailable: return "backend-unavailable";
        case ErrorCode::judge_parse: return "judge-parse";
        case ErrorCode::lookup: return "lookup";
        case ErrorCode::triple_failure: return "triple-failure";
        case ErrorCode::pool_shortfall: return "pool-shortfall";
        case ErrorCode::export_error: return "export";
    }
    return "unknown";
}

}  // namespace halluforge
