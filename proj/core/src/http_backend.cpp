#include "halluforge/http_backend.hpp"

#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>

namespace halluforge {

struct HttpTransport::Gate {
    explicit Gate(int count) : sem(count) {}
    std::counting_semaphore<1 << 16> sem;
};

HttpTransport::HttpTransport(BackendConfig config) : config_(std::move(config)) {
    require(!config_.endpoint.empty(), ErrorCode::config, "backend endpoint is empty");
    require(config_.max_in_flight >= 1, ErrorCode::config, "max_in_flight must be >= 1");
    require(config_.max_retries >= 0, ErrorCode::config, "max_retries must be >= 0");
    require(config_.backoff_factor >= 1.0, ErrorCode::config, "backoff_factor must be >= 1");
    if (const char* token = std::getenv(kBackendTokenEnv)) bearer_token_ = token;
    gate_ = std::make_unique<Gate>(config_.max_in_flight);
}

HttpTransport::~HttpTransport() = default;

json HttpTransport::post(const std::string& endpoint, const json& body) {
    std::string payload = serialize_line(body);

    gate_->sem.acquire();
    struct Release {
        Gate* g;
        ~Release() { g->sem.release(); }
    } release{gate_.get()};

    std::string last_failure;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            double scale = 1.0;
            for (int i = 1; i < attempt; ++i) scale *= config_.backoff_factor;
            auto wait = std::chrono::milliseconds(
                static_cast<long>(config_.backoff_initial.count() * scale));
            if (config_.sleep_fn) config_.sleep_fn(wait);
            else std::this_thread::sleep_for(wait);
        }

        // One client per request keeps connections isolated across the
        // in-flight workers; the services here are close enough that the
        // reconnect cost is noise next to model latency.
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(config_.timeout);
        client.set_read_timeout(config_.timeout);
        client.set_write_timeout(config_.timeout);
        httplib::Headers headers;
        if (!bearer_token_.empty())
            headers.emplace("Authorization", "Bearer " + bearer_token_);

        auto result = client.Post(endpoint, headers, payload, "application/json");
        if (!result) {
            last_failure = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        int status = result->status;
        if (status == 429 || (status >= 500 && status < 600)) {
            last_failure = "HTTP " + std::to_string(status);
            continue;
        }
        if (status < 200 || status >= 300)
            fail(ErrorCode::backend_unavailable,
                 config_.endpoint + endpoint + " returned HTTP " + std::to_string(status) +
                     ": " + result->body.substr(0, 200));

        json parsed = json::parse(result->body, nullptr, /*allow_exceptions=*/false);
        require(!parsed.is_discarded(), ErrorCode::serialization,
                config_.endpoint + endpoint + " returned malformed JSON");
        return parsed;
    }
    fail(ErrorCode::backend_unavailable,
         config_.endpoint + endpoint + " unreachable after " +
             std::to_string(config_.max_retries + 1) + " attempts (" + last_failure + ")");
}

namespace {

class HttpGrounding final : public GroundingBackend {
public:
    explicit HttpGrounding(std::shared_ptr<HttpTransport> t) : t_(std::move(t)) {}
    GroundingResult ground(const std::string& image_ref, const ObjectLabel& object) override {
        return parse_ground_response(t_->post(kGroundEndpoint, ground_request(image_ref, object)), object);
    }

private:
    std::shared_ptr<HttpTransport> t_;
};

class HttpVqa final : public VqaBackend {
public:
    explicit HttpVqa(std::shared_ptr<HttpTransport> t) : t_(std::move(t)) {}
    std::string ask(const VqaQuery& query) override {
        return parse_text_response(t_->post(kVqaEndpoint, vqa_request(query)));
    }

private:
    std::shared_ptr<HttpTransport> t_;
};

class HttpJudge final : public JudgeBackend {
public:
    explicit HttpJudge(std::shared_ptr<HttpTransport> t) : t_(std::move(t)) {}
    std::string judge(JudgeKind kind, const json& payload) override {
        return parse_text_response(t_->post(kJudgeEndpoint, judge_request(kind, payload)));
    }

private:
    std::shared_ptr<HttpTransport> t_;
};

class HttpEmbed final : public EmbedBackend {
public:
    explicit HttpEmbed(std::shared_ptr<HttpTransport> t) : t_(std::move(t)) {}
    std::vector<double> embed(const std::string& text) override {
        return parse_embed_response(t_->post(kEmbedEndpoint, embed_request(text)));
    }

private:
    std::shared_ptr<HttpTransport> t_;
};

class HttpImageGen final : public ImageGenBackend {
public:
    explicit HttpImageGen(std::shared_ptr<HttpTransport> t) : t_(std::move(t)) {}
    std::string generate(const std::string& prompt, const std::string& negative) override {
        return parse_generate_response(t_->post(kGenerateEndpoint, generate_request(prompt, negative)));
    }

private:
    std::shared_ptr<HttpTransport> t_;
};

}  // namespace

BackendSet make_http_backends(const BackendConfig& config) {
    auto transport = std::make_shared<HttpTransport>(config);
    BackendSet set;
    set.grounding = std::make_shared<HttpGrounding>(transport);
    set.vqa = std::make_shared<HttpVqa>(transport);
    set.judge = std::make_shared<HttpJudge>(transport);
    set.embed = std::make_shared<HttpEmbed>(transport);
    set.imagegen = std::make_shared<HttpImageGen>(transport);
    set.embed = with_dim_check(set.embed);
    return set;
}

}  // namespace halluforge
