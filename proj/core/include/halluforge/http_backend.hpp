#pragma once

#include "halluforge/backends.hpp"

namespace halluforge {

/// POSTs canonical JSON to one backend service, with bounded concurrency,
/// deterministic exponential backoff and bearer-token auth from the
/// environment. Shared by all five role adapters.
class HttpTransport {
public:
    explicit HttpTransport(BackendConfig config);
    ~HttpTransport();

    HttpTransport(const HttpTransport&) = delete;
    HttpTransport& operator=(const HttpTransport&) = delete;

    /// Sends the request, retrying connection failures, 429 and 5xx with
    /// backoff_initial * backoff_factor^attempt waits. Other HTTP errors and
    /// retry exhaustion throw ErrorCode::backend_unavailable.
    json post(const std::string& endpoint, const json& body);

    const BackendConfig& config() const { return config_; }

private:
    struct Gate;  // counting semaphore, hidden to keep <semaphore> out of the header

    BackendConfig config_;
    std::string bearer_token_;
    std::unique_ptr<Gate> gate_;
};

}  // namespace halluforge
