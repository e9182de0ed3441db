#include "halluforge/backends.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "halluforge/digest.hpp"
#include "halluforge/mock_backend.hpp"

namespace halluforge {

Box pad_box(const Box& b, double pad) {
    double dx = (b.x1 - b.x0) * pad;
    double dy = (b.y1 - b.y0) * pad;
    return Box{std::clamp(b.x0 - dx, 0.0, 1.0), std::clamp(b.y0 - dy, 0.0, 1.0),
               std::clamp(b.x1 + dx, 0.0, 1.0), std::clamp(b.y1 + dy, 0.0, 1.0)};
}

std::string to_string(JudgeKind v) {
    switch (v) {
        case JudgeKind::adp_presence: return "adp_presence";
        case JudgeKind::cpbench_presence: return "cpbench_presence";
        case JudgeKind::semantic_gap: return "semantic_gap";
        case JudgeKind::question_gen: return "question_gen";
        case JudgeKind::answer_inversion: return "answer_inversion";
    }
    fail(ErrorCode::serialization, "bad JudgeKind value");
}

JudgeKind judge_kind_from(std::string_view s) {
    if (s == "adp_presence") return JudgeKind::adp_presence;
    if (s == "cpbench_presence") return JudgeKind::cpbench_presence;
    if (s == "semantic_gap") return JudgeKind::semantic_gap;
    if (s == "question_gen") return JudgeKind::question_gen;
    if (s == "answer_inversion") return JudgeKind::answer_inversion;
    fail(ErrorCode::serialization, "unknown judge kind '" + std::string(s) + "'");
}

void to_json(json& j, const Box& v) { j = json::array({v.x0, v.y0, v.x1, v.y1}); }

void from_json(const json& j, Box& v) {
    require(j.is_array() && j.size() == 4, ErrorCode::serialization,
            "box must be [x0, y0, x1, y1]");
    v.x0 = j[0].get<double>();
    v.y0 = j[1].get<double>();
    v.x1 = j[2].get<double>();
    v.y1 = j[3].get<double>();
}

json ground_request(const std::string& image_ref, const ObjectLabel& object) {
    require(!object.empty(), ErrorCode::precondition, "grounding object is empty");
    return json{{"image", image_ref}, {"object", object.name()}};
}

json vqa_request(const VqaQuery& query) {
    require(!query.question.empty(), ErrorCode::precondition, "VQA question is empty");
    json j{{"image", query.image_ref}, {"question", query.question}};
    if (query.region) j["region"] = *query.region;
    if (query.caption) j["caption"] = *query.caption;
    return j;
}

json judge_request(JudgeKind kind, const json& payload) {
    return json{{"kind", to_string(kind)}, {"payload", payload}};
}

json embed_request(const std::string& text) {
    require(!text.empty(), ErrorCode::precondition, "embed text is empty");
    return json{{"text", text}};
}

json generate_request(const std::string& prompt, const std::string& negative) {
    require(!prompt.empty(), ErrorCode::precondition, "image prompt is empty");
    return json{{"prompt", prompt}, {"negative", negative}};
}

std::string request_digest(const std::string& endpoint, const json& body) {
    std::string material = endpoint + "\n" + serialize_line(body);
    return to_hex(fnv1a64(material));
}

GroundingResult parse_ground_response(const json& body, const ObjectLabel& object) {
    require(body.is_object(), ErrorCode::serialization, "grounding response is not an object");
    GroundingResult out;
    out.object = object;
    if (body.contains("score")) {
        require(body["score"].is_number(), ErrorCode::serialization,
                "grounding score is not a number");
        double score = body["score"].get<double>();
        require(std::isfinite(score) && score >= 0.0 && score <= 1.0,
                ErrorCode::serialization, "grounding score outside [0,1]");
        out.score = score;
    }
    if (body.contains("box")) out.box = body["box"].get<Box>();
    require(out.score.has_value() == out.box.has_value(), ErrorCode::serialization,
            "grounding response must carry score and box together");
    if (out.box)
        require(out.box->x0 < out.box->x1 && out.box->y0 < out.box->y1,
                ErrorCode::serialization, "grounding box is degenerate");
    return out;
}

std::string parse_text_response(const json& body) {
    require(body.is_object() && body.contains("text") && body["text"].is_string(),
            ErrorCode::serialization, "response lacks a string 'text' field");
    return body["text"].get<std::string>();
}

std::vector<double> parse_embed_response(const json& body) {
    require(body.is_object() && body.contains("vector") && body["vector"].is_array(),
            ErrorCode::serialization, "response lacks an array 'vector' field");
    auto out = body["vector"].get<std::vector<double>>();
    require(!out.empty(), ErrorCode::serialization, "embedding vector is empty");
    for (double x : out)
        require(std::isfinite(x), ErrorCode::serialization, "embedding entry not finite");
    return out;
}

std::string parse_generate_response(const json& body) {
    require(body.is_object() && body.contains("image_ref") && body["image_ref"].is_string(),
            ErrorCode::serialization, "response lacks a string 'image_ref' field");
    return body["image_ref"].get<std::string>();
}

namespace {

/// Judge models tend to wrap their JSON in prose. Accept the reply if the
/// first '{'..'}' span parses; anything looser is a parse failure.
std::optional<json> extract_object(const std::string& text) {
    json direct = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (direct.is_object()) return direct;
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        return std::nullopt;
    json inner = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (inner.is_object()) return inner;
    return std::nullopt;
}

[[noreturn]] void parse_fail(JudgeKind kind, const std::string& text) {
    std::string snippet = text.substr(0, 120);
    fail(ErrorCode::judge_parse,
         "cannot parse " + to_string(kind) + " reply: '" + snippet + "'");
}

}  // namespace

JudgeVerdict parse_judge_reply(JudgeKind kind, const std::string& text) {
    auto obj = extract_object(text);
    if (!obj) parse_fail(kind, text);
    JudgeVerdict v;
    v.raw = text;
    const json& j = *obj;
    switch (kind) {
        case JudgeKind::adp_presence:
        case JudgeKind::cpbench_presence:
            if (!j.contains("present") || !j["present"].is_boolean()) parse_fail(kind, text);
            v.present = j["present"].get<bool>();
            return v;
        case JudgeKind::semantic_gap: {
            if (!j.contains("score") || !j["score"].is_number_integer())
                parse_fail(kind, text);
            int score = j["score"].get<int>();
            if (score < 1 || score > 3) parse_fail(kind, text);
            v.score = score;
            return v;
        }
        case JudgeKind::question_gen:
            if (j.contains("skip") && j["skip"].is_boolean() && j["skip"].get<bool>()) {
                v.skip = true;
                return v;
            }
            if (!j.contains("question") || !j["question"].is_string() ||
                j["question"].get<std::string>().empty())
                parse_fail(kind, text);
            v.text = j["question"].get<std::string>();
            return v;
        case JudgeKind::answer_inversion:
            if (!j.contains("answer") || !j["answer"].is_string() ||
                j["answer"].get<std::string>().empty())
                parse_fail(kind, text);
            v.text = j["answer"].get<std::string>();
            return v;
    }
    parse_fail(kind, text);
}

JudgeVerdict judge_with_repair(JudgeBackend& judge, JudgeKind kind, const json& payload) {
    std::string first = judge.judge(kind, payload);
    try {
        return parse_judge_reply(kind, first);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::judge_parse) throw;
    }
    json repaired = payload;
    repaired["repair"] = kJudgeRepairNote;
    std::string second = judge.judge(kind, repaired);
    return parse_judge_reply(kind, second);  // second failure propagates
}

namespace {

class DimCheckingEmbed final : public EmbedBackend {
public:
    explicit DimCheckingEmbed(std::shared_ptr<EmbedBackend> inner)
        : inner_(std::move(inner)) {}

    std::vector<double> embed(const std::string& text) override {
        auto vec = inner_->embed(text);
        std::lock_guard lock(mu_);
        if (dim_ == 0) {
            dim_ = vec.size();
        } else if (vec.size() != dim_) {
            fail(ErrorCode::config,
                 "embedding dimension changed mid-run: expected " + std::to_string(dim_) +
                     ", got " + std::to_string(vec.size()));
        }
        return vec;
    }

private:
    std::shared_ptr<EmbedBackend> inner_;
    std::mutex mu_;
    std::size_t dim_ = 0;
};

}  // namespace

std::shared_ptr<EmbedBackend> with_dim_check(std::shared_ptr<EmbedBackend> inner) {
    return std::make_shared<DimCheckingEmbed>(std::move(inner));
}

BackendSet make_backends(const BackendConfig& config) {
    require(!config.endpoint.empty(), ErrorCode::config, "backend endpoint is empty");
    return config.kind == BackendKind::http ? make_http_backends(config)
                                            : make_mock_backends(config.endpoint);
}

}  // namespace halluforge
