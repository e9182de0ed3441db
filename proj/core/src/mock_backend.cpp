#include "halluforge/mock_backend.hpp"

#include "halluforge/jsonl.hpp"

namespace halluforge {

namespace fs = std::filesystem;

FixtureTable FixtureTable::load(const fs::path& file) {
    FixtureTable table;
    if (!fs::exists(file)) return table;
    JsonlReader reader(file);
    json line;
    while (reader.next(line)) {
        require(line.contains("request_digest") && line["request_digest"].is_string() &&
                    line.contains("response"),
                ErrorCode::serialization,
                file.string() + ":" + std::to_string(reader.line()) +
                    ": fixture line needs request_digest and response");
        table.by_digest_[line["request_digest"].get<std::string>()] = line["response"];
    }
    return table;
}

FixtureTable FixtureTable::from_pairs(const std::string& endpoint,
                                      const std::vector<std::pair<json, json>>& entries) {
    FixtureTable table;
    for (const auto& [request, response] : entries)
        table.by_digest_[request_digest(endpoint, request)] = response;
    return table;
}

const json& FixtureTable::lookup(const std::string& endpoint, const json& request) const {
    std::string digest = request_digest(endpoint, request);
    auto it = by_digest_.find(digest);
    if (it == by_digest_.end())
        fail(ErrorCode::fixture_miss, "no fixture for " + endpoint + " digest " + digest +
                                          " request " + serialize_line(request));
    return it->second;
}

namespace {

class MockGrounding final : public GroundingBackend {
public:
    explicit MockGrounding(FixtureTable table) : table_(std::move(table)) {}
    GroundingResult ground(const std::string& image_ref, const ObjectLabel& object) override {
        return parse_ground_response(
            table_.lookup(kGroundEndpoint, ground_request(image_ref, object)), object);
    }

private:
    FixtureTable table_;
};

class MockVqa final : public VqaBackend {
public:
    explicit MockVqa(FixtureTable table) : table_(std::move(table)) {}
    std::string ask(const VqaQuery& query) override {
        return parse_text_response(table_.lookup(kVqaEndpoint, vqa_request(query)));
    }

private:
    FixtureTable table_;
};

class MockJudge final : public JudgeBackend {
public:
    explicit MockJudge(FixtureTable table) : table_(std::move(table)) {}
    std::string judge(JudgeKind kind, const json& payload) override {
        return parse_text_response(table_.lookup(kJudgeEndpoint, judge_request(kind, payload)));
    }

private:
    FixtureTable table_;
};

class MockEmbed final : public EmbedBackend {
public:
    explicit MockEmbed(FixtureTable table) : table_(std::move(table)) {}
    std::vector<double> embed(const std::string& text) override {
        return parse_embed_response(table_.lookup(kEmbedEndpoint, embed_request(text)));
    }

private:
    FixtureTable table_;
};

class MockImageGen final : public ImageGenBackend {
public:
    explicit MockImageGen(FixtureTable table) : table_(std::move(table)) {}
    std::string generate(const std::string& prompt, const std::string& negative) override {
        return parse_generate_response(
            table_.lookup(kGenerateEndpoint, generate_request(prompt, negative)));
    }

private:
    FixtureTable table_;
};

}  // namespace

BackendSet make_mock_backends(FixtureTable ground, FixtureTable vqa, FixtureTable judge,
                              FixtureTable embed, FixtureTable generate) {
    BackendSet set;
    set.grounding = std::make_shared<MockGrounding>(std::move(ground));
    set.vqa = std::make_shared<MockVqa>(std::move(vqa));
    set.judge = std::make_shared<MockJudge>(std::move(judge));
    set.embed = std::make_shared<MockEmbed>(std::move(embed));
    set.imagegen = std::make_shared<MockImageGen>(std::move(generate));
    set.embed = with_dim_check(set.embed);
    return set;
}

BackendSet make_mock_backends(const fs::path& fixture_dir) {
    return make_mock_backends(FixtureTable::load(fixture_dir / "ground.jsonl"),
                              FixtureTable::load(fixture_dir / "vqa.jsonl"),
                              FixtureTable::load(fixture_dir / "judge.jsonl"),
                              FixtureTable::load(fixture_dir / "embed.jsonl"),
                              FixtureTable::load(fixture_dir / "generate.jsonl"));
}

// ---------------------------------------------------------------------------
// Recorder

namespace {

class RecordingGrounding final : public GroundingBackend {
public:
    RecordingGrounding(FixtureRecorder* rec, std::shared_ptr<GroundingBackend> inner)
        : rec_(rec), inner_(std::move(inner)) {}
    GroundingResult ground(const std::string& image_ref, const ObjectLabel& object) override;

private:
    FixtureRecorder* rec_;
    std::shared_ptr<GroundingBackend> inner_;
};

class RecordingVqa final : public VqaBackend {
public:
    RecordingVqa(FixtureRecorder* rec, std::shared_ptr<VqaBackend> inner)
        : rec_(rec), inner_(std::move(inner)) {}
    std::string ask(const VqaQuery& query) override;

private:
    FixtureRecorder* rec_;
    std::shared_ptr<VqaBackend> inner_;
};

class RecordingJudge final : public JudgeBackend {
public:
    RecordingJudge(FixtureRecorder* rec, std::shared_ptr<JudgeBackend> inner)
        : rec_(rec), inner_(std::move(inner)) {}
    std::string judge(JudgeKind kind, const json& payload) override;

private:
    FixtureRecorder* rec_;
    std::shared_ptr<JudgeBackend> inner_;
};

class RecordingEmbed final : public EmbedBackend {
public:
    RecordingEmbed(FixtureRecorder* rec, std::shared_ptr<EmbedBackend> inner)
        : rec_(rec), inner_(std::move(inner)) {}
    std::vector<double> embed(const std::string& text) override;

private:
    FixtureRecorder* rec_;
    std::shared_ptr<EmbedBackend> inner_;
};

class RecordingImageGen final : public ImageGenBackend {
public:
    RecordingImageGen(FixtureRecorder* rec, std::shared_ptr<ImageGenBackend> inner)
        : rec_(rec), inner_(std::move(inner)) {}
    std::string generate(const std::string& prompt, const std::string& negative) override;

private:
    FixtureRecorder* rec_;
    std::shared_ptr<ImageGenBackend> inner_;
};

}  // namespace

GroundingResult RecordingGrounding::ground(const std::string& image_ref,
                                           const ObjectLabel& object) {
    json request = ground_request(image_ref, object);
    GroundingResult result = inner_->ground(image_ref, object);
    json response = json::object();
    if (result.score) response["score"] = *result.score;
    if (result.box) response["box"] = *result.box;
    rec_->remember(kGroundEndpoint, request, response);
    return result;
}

std::string RecordingVqa::ask(const VqaQuery& query) {
    json request = vqa_request(query);
    std::string text = inner_->ask(query);
    rec_->remember(kVqaEndpoint, request, json{{"text", text}});
    return text;
}

std::string RecordingJudge::judge(JudgeKind kind, const json& payload) {
    json request = judge_request(kind, payload);
    std::string text = inner_->judge(kind, payload);
    rec_->remember(kJudgeEndpoint, request, json{{"text", text}});
    return text;
}

std::vector<double> RecordingEmbed::embed(const std::string& text) {
    json request = embed_request(text);
    auto vec = inner_->embed(text);
    rec_->remember(kEmbedEndpoint, request, json{{"vector", vec}});
    return vec;
}

std::string RecordingImageGen::generate(const std::string& prompt,
                                        const std::string& negative) {
    json request = generate_request(prompt, negative);
    std::string ref = inner_->generate(prompt, negative);
    rec_->remember(kGenerateEndpoint, request, json{{"image_ref", ref}});
    return ref;
}

FixtureRecorder::FixtureRecorder(BackendSet inner, fs::path out_dir)
    : inner_(std::move(inner)), out_dir_(std::move(out_dir)) {}

BackendSet FixtureRecorder::backends() {
    BackendSet set;
    set.grounding = std::make_shared<RecordingGrounding>(this, inner_.grounding);
    set.vqa = std::make_shared<RecordingVqa>(this, inner_.vqa);
    set.judge = std::make_shared<RecordingJudge>(this, inner_.judge);
    set.embed = std::make_shared<RecordingEmbed>(this, inner_.embed);
    set.imagegen = std::make_shared<RecordingImageGen>(this, inner_.imagegen);
    return set;
}

void FixtureRecorder::remember(const std::string& endpoint, const json& request,
                               const json& response) {
    std::lock_guard lock(mu_);
    recorded_[endpoint][request_digest(endpoint, request)] =
        json{{"request_digest", request_digest(endpoint, request)},
             {"request", request},
             {"response", response}};
}

void FixtureRecorder::flush() {
    static const std::map<std::string, std::string> kFileFor = {
        {kGroundEndpoint, "ground.jsonl"}, {kVqaEndpoint, "vqa.jsonl"},
        {kJudgeEndpoint, "judge.jsonl"},   {kEmbedEndpoint, "embed.jsonl"},
        {kGenerateEndpoint, "generate.jsonl"}};
    std::lock_guard lock(mu_);
    for (const auto& [endpoint, file] : kFileFor) {
        auto it = recorded_.find(endpoint);
        if (it == recorded_.end() || it->second.empty()) continue;
        AtomicJsonlWriter writer(out_dir_ / file);
        for (const auto& [digest, entry] : it->second) writer.write(entry);
        writer.commit();
    }
}

}  // namespace halluforge
