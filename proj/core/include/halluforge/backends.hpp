#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "halluforge/datamodel.hpp"

namespace halluforge {

/// Normalized image-space rectangle, corner form; all coordinates in [0,1]
/// with x0 < x1 and y0 < y1.
struct Box {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    bool operator==(const Box&) const = default;
};

/// Expands a box by `pad` of its own width/height on every side, clamped to
/// the unit square. Gives the verifier some context around a region.
Box pad_box(const Box& b, double pad);

struct GroundingResult {
    ObjectLabel object;
    std::optional<double> score;  // unset when the model matched no region
    std::optional<Box> box;       // present exactly when score is present
};

struct VqaQuery {
    std::string image_ref;
    std::string question;
    std::optional<Box> region;           // crop hint for region-level questions
    std::optional<std::string> caption;  // context for caption-conditioned asks
};

enum class JudgeKind {
    adp_presence,      // does the caption claim the adversary object?
    cpbench_presence,  // does the answer claim the queried object?
    semantic_gap,      // 1..3 severity between chosen and rejected
    question_gen,      // presupposition question from a caption
    answer_inversion,  // rewrite a correct answer into a wrong one
};

std::string to_string(JudgeKind v);
JudgeKind judge_kind_from(std::string_view s);

// The five model roles. Every pipeline stage talks to these interfaces only;
// HTTP and fixture-backed implementations are interchangeable.

class GroundingBackend {
public:
    virtual ~GroundingBackend() = default;
    virtual GroundingResult ground(const std::string& image_ref,
                                   const ObjectLabel& object) = 0;
};

class VqaBackend {
public:
    virtual ~VqaBackend() = default;
    virtual std::string ask(const VqaQuery& query) = 0;
};

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    /// Returns the judge model's raw text; callers parse it.
    virtual std::string judge(JudgeKind kind, const json& payload) = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

class ImageGenBackend {
public:
    virtual ~ImageGenBackend() = default;
    /// Returns an opaque reference to the rendered image.
    virtual std::string generate(const std::string& prompt,
                                 const std::string& negative) = 0;
};

struct BackendSet {
    std::shared_ptr<GroundingBackend> grounding;
    std::shared_ptr<VqaBackend> vqa;
    std::shared_ptr<JudgeBackend> judge;
    std::shared_ptr<EmbedBackend> embed;
    std::shared_ptr<ImageGenBackend> imagegen;
};

// ---------------------------------------------------------------------------
// Wire protocol. Request bodies are canonical JSON; their digest keys both
// the fixture files and the recorder, so the HTTP client and the mock must
// build byte-identical bodies.

inline constexpr const char* kGroundEndpoint = "/v1/ground";
inline constexpr const char* kVqaEndpoint = "/v1/vqa";
inline constexpr const char* kJudgeEndpoint = "/v1/judge";
inline constexpr const char* kEmbedEndpoint = "/v1/embed";
inline constexpr const char* kGenerateEndpoint = "/v1/generate";

json ground_request(const std::string& image_ref, const ObjectLabel& object);
json vqa_request(const VqaQuery& query);
json judge_request(JudgeKind kind, const json& payload);
json embed_request(const std::string& text);
json generate_request(const std::string& prompt, const std::string& negative);

/// FNV-1a 64 over "<endpoint>\n<canonical body>", as 16 hex chars.
std::string request_digest(const std::string& endpoint, const json& body);

GroundingResult parse_ground_response(const json& body, const ObjectLabel& object);
std::string parse_text_response(const json& body);  // vqa, judge
std::vector<double> parse_embed_response(const json& body);
std::string parse_generate_response(const json& body);

// Boxes travel as [x0, y0, x1, y1].
void to_json(json& j, const Box& v);
void from_json(const json& j, Box& v);

// ---------------------------------------------------------------------------
// Judge output parsing

/// One parsed judge reply. Which field is set depends on the kind:
/// presence kinds fill `present`, semantic_gap fills `score`, the text kinds
/// fill `text` (or `skip` when question_gen declines).
struct JudgeVerdict {
    std::optional<bool> present;
    std::optional<int> score;
    std::optional<std::string> text;
    bool skip = false;
    std::string raw;
};

/// Strictly parses judge text for the given kind. The text must contain a
/// JSON object with the expected field of the expected type (prose around
/// the object is tolerated). Throws ErrorCode::judge_parse on anything else.
JudgeVerdict parse_judge_reply(JudgeKind kind, const std::string& text);

/// Calls the judge, parses, and on a parse failure retries once with a
/// `repair` field appended to the payload. A second failure propagates the
/// judge-parse error; the caller picks the fallback, which is task-specific.
JudgeVerdict judge_with_repair(JudgeBackend& judge, JudgeKind kind, const json& payload);

inline constexpr const char* kJudgeRepairNote = "Return only the JSON.";

// ---------------------------------------------------------------------------
// Configuration

enum class BackendKind { http, mock };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    /// Base URL (scheme://host[:port]) for http, fixture directory for mock.
    std::string endpoint;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;  // additional attempts after the first
    int max_in_flight = 4;
    std::chrono::milliseconds backoff_initial{100};
    double backoff_factor = 2.0;
    /// Test seam for backoff waits; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep_fn;
};

/// Name of the environment variable holding the bearer token, if any.
inline constexpr const char* kBackendTokenEnv = "HALLUFORGE_BACKEND_TOKEN";

BackendSet make_http_backends(const BackendConfig& config);

/// Dispatches on config.kind (http client or fixture-replay mock).
BackendSet make_backends(const BackendConfig& config);

/// Wraps an embed backend so that the vector dimension is locked by the
/// first call; a later mismatch is a configuration error. Applied by both
/// factories, exposed for composing custom sets.
std::shared_ptr<EmbedBackend> with_dim_check(std::shared_ptr<EmbedBackend> inner);

}  // namespace halluforge
