// Generates the shipped test fixtures: a synthetic 50-image world with
// scripted model backends, recorded through the fixture recorder so the
// mock backends replay the exact same exchanges.
//
// Usage: fixturegen <output-root>
//
// Writes <root>/golden50 (benchmark chain + evaluation) and <root>/prefs20
// (preference chain), each with inputs/, fixtures/ and a config in both
// accepted formats. After recording, every set is replayed twice from the
// fixtures alone and byte-compared, and the artifact digests are printed so
// they can be pinned in the acceptance tests.
//
// The worlds are engineered to keep score rankings away from float ties:
// a near-tie in a PMI sum or a pairing argmax would make the golden output
// hinge on the last bit of a libm log, which is exactly the kind of
// fragility these fixtures exist to rule out. A margin check below fails
// generation if any decision comes closer than 1e-6.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "halluforge/annotator.hpp"
#include "halluforge/cooccur.hpp"
#include "halluforge/digest.hpp"
#include "halluforge/jsonl.hpp"
#include "halluforge/mock_backend.hpp"
#include "halluforge/pipeline.hpp"
#include "halluforge/prefforge.hpp"
#include "halluforge/rng.hpp"

namespace fs = std::filesystem;
using namespace halluforge;

namespace {

std::uint64_t hash_of(const std::string& s) { return fnv1a64(s); }

// ---------------------------------------------------------------------------
// Synthetic world

struct SceneCluster {
    std::string name;
    std::vector<std::string> objects;
};

const std::vector<SceneCluster>& clusters() {
    static const std::vector<SceneCluster> kClusters = {
        {"kitchen",
         {"refrigerator", "oven", "microwave", "sink", "toaster", "spoon", "bowl", "cup"}},
        {"street",
         {"car", "bicycle", "traffic light", "stop sign", "bus", "truck", "dog", "bench"}},
        {"living room",
         {"couch", "tv", "remote", "book", "vase", "potted plant", "lamp", "cat"}},
        {"beach", {"umbrella", "surfboard", "boat", "kite", "frisbee", "towel", "seagull"}},
    };
    return kClusters;
}

struct WorldImage {
    std::string id;
    std::size_t cluster = 0;
    std::vector<std::string> present;  // cluster order, deterministic
    std::string caption;
};

struct World {
    std::vector<WorldImage> images;
    std::map<std::string, const WorldImage*> by_id;

    bool present(const std::string& image_id, const std::string& object) const {
        auto it = by_id.find(image_id);
        if (it == by_id.end()) return false;
        const auto& p = it->second->present;
        return std::find(p.begin(), p.end(), object) != p.end();
    }
};

std::string image_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "img%03zu", index + 1);
    return buf;
}

std::string with_article(const std::string& noun) {
    bool vowel = noun.find_first_of("aeiou") == 0;
    return (vowel ? "an " : "a ") + noun;
}

World build_world(std::uint64_t seed, std::size_t count) {
    World world;
    world.images.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        WorldImage img;
        img.id = image_name(i);
        img.cluster = i % clusters().size();
        const auto& pool = clusters()[img.cluster].objects;

        Rng rng(derive_seed(seed, "world/" + img.id));
        std::size_t n = 3 + uniform_below(rng, 4);  // 3..6 present objects
        for (std::size_t idx : sample_without_replacement(rng, pool.size(), n)) {
            img.present.push_back(pool[idx]);
        }
        std::sort(img.present.begin(), img.present.end());

        img.caption = "A " + clusters()[img.cluster].name + " scene with ";
        for (std::size_t k = 0; k < img.present.size(); ++k) {
            if (k > 0) img.caption += k + 1 == img.present.size() ? " and " : ", ";
            img.caption += with_article(img.present[k]);
        }
        img.caption += ".";
        world.images.push_back(std::move(img));
    }
    for (const auto& img : world.images) world.by_id[img.id] = &img;
    return world;
}

// ---------------------------------------------------------------------------
// Scripted backends. Each answers deterministically from the world plus an
// input hash, so recording twice gives identical fixtures.

class ScriptedGrounding final : public GroundingBackend {
public:
    explicit ScriptedGrounding(const World& world) : world_(world) {}

    GroundingResult ground(const std::string& image_ref, const ObjectLabel& object) override {
        GroundingResult out;
        out.object = object;
        std::uint64_t h = hash_of(image_ref + "|ground|" + object.name());
        bool present = world_.present(image_ref, object.name());

        std::optional<double> score;
        if (present) {
            // Mostly confident detections, occasionally a weak one that
            // forces the VQA confirmation path.
            score = h % 5 == 0 ? 0.42 + static_cast<double>((h >> 8) % 14) * 0.01
                               : 0.65 + static_cast<double>((h >> 8) % 31) * 0.01;
        } else if (h % 10 < 3) {
            // A spurious weak match on an absent object.
            score = 0.36 + static_cast<double>((h >> 8) % 20) * 0.01;
        }
        if (score.has_value()) {
            out.score = score;
            Box box;
            box.x0 = static_cast<double>(h % 40) * 0.01;
            box.y0 = static_cast<double>((h >> 4) % 40) * 0.01;
            box.x1 = std::min(1.0, box.x0 + 0.2 + static_cast<double>((h >> 12) % 30) * 0.01);
            box.y1 = std::min(1.0, box.y0 + 0.2 + static_cast<double>((h >> 16) % 30) * 0.01);
            out.box = box;
        }
        return out;
    }

private:
    const World& world_;
};

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.rfind(prefix, 0) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

class ScriptedVqa final : public VqaBackend {
public:
    explicit ScriptedVqa(const World& world) : world_(world) {}

    std::string ask(const VqaQuery& query) override {
        const std::string& q = query.question;
        std::uint64_t h = hash_of(query.image_ref + "|vqa|" + q);

        // Presence confirmations from the two-stage verifier.
        if (starts_with(q, "Is ") && ends_with(q, " present in the image?")) {
            std::string object = q.substr(3, q.size() - 3 - 22);
            if (world_.present(query.image_ref, object)) {
                return h % 3 == 0 ? "Yes." : "Yes, it is.";
            }
            return h % 3 == 0 ? "No." : "No, it is not.";
        }

        // Hinted instructions (the hint is appended to the base query).
        auto deny_pos = q.find("Note: there is no ");
        if (deny_pos != std::string::npos) {
            std::string object = between(q, deny_pos + 18, " in the image.");
            return "There is no " + object + " in the image. The scene mainly shows " +
                   first_present(query.image_ref) + " under even light.";
        }
        auto affirm_pos = q.find("Note: a ");
        if (affirm_pos != std::string::npos && q.find(" is visible in the image.") != std::string::npos) {
            std::string object = between(q, affirm_pos + 8, " is visible in the image.");
            return "The " + object + " sits near the " + first_present(query.image_ref) +
                   ", " + pick(h, {"slightly off-center", "catching the light",
                                   "partly in shadow", "close to the frame edge"}) +
                   ".";
        }

        if (q == "Describe the image in detail.") return describe(query.image_ref);
        if (q == "Describe the image.") {
            auto it = world_.by_id.find(query.image_ref);
            return it == world_.by_id.end() ? "An empty scene." : it->second->caption;
        }

        // A post-hoc stub ends with an instantiated injection prefix; the
        // model is expected to keep narrating the planted object.
        if (is_stub(q)) {
            return pick(h, {"It looks worn at the edges and slightly tilted.",
                            "Its surface catches a thin strip of sunlight.",
                            "It appears half-hidden behind the nearest object.",
                            "A faint reflection of it shows on the floor."});
        }

        // Plain task queries: colors, presence chit-chat, whatever the task
        // file asks. Content only needs to be deterministic and distinct.
        return pick(h, {"It is a deep shade of crimson.", "Mostly chrome with black trim.",
                        "A muted olive green, slightly faded.", "Pale blue with white speckles.",
                        "Matte charcoal, almost black.", "Warm amber with a gloss finish."});
    }

private:
    std::string between(const std::string& s, std::size_t from, const std::string& until) {
        auto end = s.find(until, from);
        return end == std::string::npos ? s.substr(from) : s.substr(from, end - from);
    }

    std::string first_present(const std::string& image_ref) {
        auto it = world_.by_id.find(image_ref);
        return it == world_.by_id.end() || it->second->present.empty()
                   ? "the background"
                   : "the " + it->second->present.front();
    }

    std::string describe(const std::string& image_ref) {
        auto it = world_.by_id.find(image_ref);
        if (it == world_.by_id.end()) return "An empty scene.";
        const auto& p = it->second->present;
        std::uint64_t h = hash_of(image_ref + "|describe");
        std::string text = "The image shows " + with_article(p[0]);
        if (p.size() > 1) text += " next to " + with_article(p[1]);
        text += ". ";
        if (p.size() > 2) {
            std::string third = with_article(p[2]);
            third[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(third[0])));
            text += third + " sits further back. ";
        }
        text += pick(h, {"The lighting is soft and even.", "Shadows stretch toward the corner.",
                         "The colors are slightly washed out.", "Everything is in sharp focus."});
        text += " ";
        text += pick(h >> 7, {"Nothing else stands out.", "The background stays blurry.",
                              "The framing is a little tight.", "The scene feels unstaged."});
        // A marker for the semantic-gap judge scripts: (glare) pairs stay
        // malformed through the repair, (haze) pairs recover on repair.
        if (image_ref == "img013") text += " (glare)";
        if (image_ref == "img014") text += " (haze)";
        return text;
    }

    bool is_stub(const std::string& q) {
        static const std::vector<std::string> kPrefixCores = {
            "The image shows", "The scene includes", "There is", "The picture features",
            "In the image,",   "The photograph depicts", "The view contains",
            "The setting reveals", "Visible in the image is", "The composition highlights"};
        for (const auto& core : kPrefixCores) {
            auto pos = q.rfind(core);
            if (pos != std::string::npos && ends_with(q, ".")) return true;
        }
        return false;
    }

    std::string pick(std::uint64_t h, const std::vector<std::string>& options) {
        return options[h % options.size()];
    }

    const World& world_;
};

class ScriptedJudge final : public JudgeBackend {
public:
    explicit ScriptedJudge(const World& world) : world_(world) {}

    std::string judge(JudgeKind kind, const json& payload) override {
        switch (kind) {
            case JudgeKind::question_gen: return gen_question(payload);
            case JudgeKind::adp_presence: {
                std::string caption = lower(payload.at("caption").get<std::string>());
                bool rejects = caption.find("there is no") != std::string::npos ||
                               caption.find("don't see") != std::string::npos;
                return json{{"present", !rejects}}.dump();
            }
            case JudgeKind::cpbench_presence: {
                std::string answer = lower(payload.at("answer").get<std::string>());
                bool denies = answer.find("no") == 0 ||
                              answer.find("there is no") != std::string::npos;
                return json{{"present", !denies}}.dump();
            }
            case JudgeKind::semantic_gap: {
                std::string chosen = payload.at("chosen").get<std::string>();
                std::string rejected = payload.at("rejected").get<std::string>();
                std::string both = chosen + rejected;
                if (both.find("(glare)") != std::string::npos) return "score: high";
                if (both.find("(haze)") != std::string::npos && !payload.contains("repair")) {
                    return "the gap is large";
                }
                int score = 1 + static_cast<int>(hash_of("gap|" + both) % 3);
                return json{{"score", score}}.dump();
            }
            case JudgeKind::answer_inversion: {
                std::string answer = payload.at("answer").get<std::string>();
                if (answer.find("perfectly still") != std::string::npos) {
                    return json{{"answer", answer}}.dump();  // lazy echo
                }
                if (answer.find("glass orb") != std::string::npos) {
                    return json{{"answer", "There is no glass orb in the image."}}.dump();
                }
                return json{{"answer", invert(answer)}}.dump();
            }
        }
        return "{}";
    }

private:
    std::string gen_question(const json& payload) {
        static const std::vector<std::string> kTemplates = {
            "What color is the {}?",
            "What material is the {} made of?",
            "What size is the {} compared to its surroundings?",
            "What shape does the {} have?",
            "What pattern decorates the {}?",
            "What condition is the {} in?",
            "What brand name appears on the {}?",
            "What style would you call the {}?",
            "Which part of the {} is closest to the camera?",
            "Which side of the image is the {} on?",
            "What is resting on top of the {}?",
            "What is the {} leaning against?",
            "What does the surface of the {} look like?",
            "What time of day does the lighting on the {} suggest?",
        };
        std::string object = payload.at("adversarial").get<std::string>();
        std::size_t used = payload.at("skip").size();
        if (payload.contains("feedback")) ++used;
        const std::string& tmpl = kTemplates[used % kTemplates.size()];
        auto slot = tmpl.find("{}");
        return json{{"question", tmpl.substr(0, slot) + object + tmpl.substr(slot + 2)}}.dump();
    }

    std::string invert(const std::string& answer) {
        // Swap the first color word; otherwise tack on a wrong attribute.
        static const std::vector<std::pair<std::string, std::string>> kSwaps = {
            {"crimson", "turquoise"}, {"chrome", "rosewood"}, {"olive green", "bright pink"},
            {"pale blue", "mustard yellow"}, {"charcoal", "ivory"}, {"amber", "violet"},
            {"silver", "copper"}, {"red", "green"}, {"white", "black"}};
        for (const auto& [from, to] : kSwaps) {
            auto pos = answer.find(from);
            if (pos != std::string::npos) {
                return answer.substr(0, pos) + to + answer.substr(pos + from.size());
            }
        }
        return answer + " It is covered in bright turquoise varnish.";
    }

    std::string lower(std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    }

    const World& world_;
};

/// Axis-aligned unit embeddings: texts land on one of 16 signed axes, so
/// cosine distances are exactly 0, 1 or 2 and the pair filter's verdicts
/// cannot drift with floating-point noise.
class ScriptedEmbed final : public EmbedBackend {
public:
    std::vector<double> embed(const std::string& text) override {
        std::uint64_t h = hash_of("embed|" + text);
        std::vector<double> v(8, 0.0);
        v[h % 8] = (h >> 4) % 2 == 0 ? 1.0 : -1.0;
        return v;
    }
};

class ScriptedImageGen final : public ImageGenBackend {
public:
    std::string generate(const std::string& prompt, const std::string& negative) override {
        return "gen://" + to_hex(hash_of(prompt + "|" + negative));
    }
};

BackendSet scripted_backends(const World& world) {
    BackendSet set;
    set.grounding = std::make_shared<ScriptedGrounding>(world);
    set.vqa = std::make_shared<ScriptedVqa>(world);
    set.judge = std::make_shared<ScriptedJudge>(world);
    set.embed = with_dim_check(std::make_shared<ScriptedEmbed>());
    set.imagegen = std::make_shared<ScriptedImageGen>();
    return set;
}

// ---------------------------------------------------------------------------
// Input files

void write_embeddings(const World& world, const fs::path& path, std::uint64_t seed) {
    AtomicJsonlWriter writer(path);
    for (const auto& img : world.images) {
        EmbeddedCaption cap;
        cap.id = img.id;
        cap.text = img.caption;
        Rng rng(derive_seed(seed, "embed/" + img.id));
        for (int d = 0; d < 8; ++d) {
            // One correctly-rounded division, so the JSON shows the plain
            // six-decimal value instead of float residue.
            auto k = static_cast<double>(uniform_below(rng, 2000001));
            cap.vector.push_back((k - 1000000.0) / 1000000.0);
        }
        writer.write_record(cap);
    }
    writer.commit();
}

void write_candidates(const World& world, const fs::path& path) {
    AtomicJsonlWriter writer(path);
    for (const auto& img : world.images) {
        std::vector<CandidateObject> cands;
        std::uint64_t h = hash_of("cand|" + img.id);

        // One present object is withheld from every third-ish image with
        // spares, so the adversary walk meets candidates that verify present.
        std::size_t withhold = img.present.size() >= 4 && h % 3 == 0
                                   ? 1 + h % (img.present.size() - 1)
                                   : img.present.size();
        for (std::size_t k = 0; k < img.present.size(); ++k) {
            if (k == withhold) continue;
            cands.push_back({ObjectLabel(img.present[k]), CandidateOrigin::coco});
        }

        // A few absent probes from a neighboring cluster, as a detector
        // sweep would produce.
        const auto& other = clusters()[(img.cluster + 1 + h % 3) % clusters().size()].objects;
        for (std::size_t k = 0; k < 3; ++k) {
            cands.push_back({ObjectLabel(other[(h >> (8 + 4 * k)) % other.size()]),
                             CandidateOrigin::detector});
        }

        json line{{"image_id", img.id}, {"candidates", cands}};
        writer.write(line);
    }
    writer.commit();
}

void write_responses(const World& world, const std::vector<BenchmarkItem>& items,
                     const fs::path& path) {
    AtomicJsonlWriter writer(path);
    for (const auto& item : items) {
        for (const auto& q : item.questions) {
            std::string qid = BenchmarkItem::question_id(item.image_id, q.kind);
            std::uint64_t h = hash_of("resp|" + qid);
            if (q.kind != QuestionKind::adp && h % 53 == 0) continue;  // dropped answer

            ResponseRecord resp;
            resp.question_id = qid;
            resp.model_name = "scripted-lvlm-1";
            switch (q.kind) {
                case QuestionKind::rec_pos:
                    resp.text = h % 10 < 9 ? (h % 2 ? "Yes." : "Yes, there is.")
                                           : "No, I don't see one.";
                    break;
                case QuestionKind::rec_rnd:
                    resp.text = h % 10 < 9 ? (h % 2 ? "No." : "No, there is not.") : "Yes.";
                    break;
                case QuestionKind::rec_adv:
                    resp.text = h % 10 < 7 ? "No." : (h % 2 ? "Yes." : "Yes, clearly.");
                    break;
                case QuestionKind::adp:
                    resp.text = h % 4 < 3 ? "There is no " + q.target_object.name() +
                                                " in the image, so I cannot say."
                                          : "The " + q.target_object.name() +
                                                " is deep crimson with a worn finish.";
                    break;
            }
            (void)world;
            writer.write_record(resp);
        }
    }
    writer.commit();
}

void write_pref_tasks(const World& world, const fs::path& path) {
    std::vector<PrefTask> tasks;
    int counter = 0;
    auto next_id = [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "t%03d", ++counter);
        return std::string(buf);
    };

    auto absent_object = [&](const WorldImage& img, std::uint64_t salt) {
        const auto& pool = clusters()[img.cluster].objects;
        std::uint64_t h = hash_of("absent|" + img.id) + salt;
        for (std::size_t k = 0; k < pool.size(); ++k) {
            const std::string& cand = pool[(h + k) % pool.size()];
            if (!world.present(img.id, cand)) return cand;
        }
        return clusters()[(img.cluster + 1) % clusters().size()].objects.front();
    };
    auto present_object = [&](const WorldImage& img, std::uint64_t salt) {
        return img.present[(hash_of("present|" + img.id) + salt) % img.present.size()];
    };

    for (int i = 0; i < 12; ++i) {
        const WorldImage& img = world.images[i % world.images.size()];
        PrefTask t;
        t.id = next_id();
        t.image_id = img.id;
        t.task = TaskType::cpq;
        t.strategy = GenStrategy::unilateral;
        t.object = absent_object(img, i);
        t.object_present = false;
        t.query = "What color is the " + t.object + " in the image?";
        tasks.push_back(t);
    }
    for (int i = 0; i < 12; ++i) {
        const WorldImage& img = world.images[(i + 12) % world.images.size()];
        PrefTask t;
        t.id = next_id();
        t.image_id = img.id;
        t.task = TaskType::tpq;
        t.strategy = GenStrategy::unilateral;
        t.object = present_object(img, i);
        t.object_present = true;
        t.query = "What color is the " + t.object + "?";
        tasks.push_back(t);
    }
    for (int i = 0; i < 12; ++i) {
        const WorldImage& img = world.images[(i + 24) % world.images.size()];
        PrefTask t;
        t.id = next_id();
        t.image_id = img.id;
        t.task = TaskType::pope;
        t.strategy = GenStrategy::unilateral;
        t.object = present_object(img, i + 7);
        t.object_present = true;
        t.query = "Is there a " + t.object + " in the image?";
        tasks.push_back(t);
    }
    const GenStrategy kDescStrategies[] = {GenStrategy::unilateral, GenStrategy::contrastive,
                                           GenStrategy::posthoc};
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < 5; ++i) {
            // Starts at img011 so the two judge-marker images are covered.
            const WorldImage& img = world.images[(5 * s + i + 10) % world.images.size()];
            PrefTask t;
            t.id = next_id();
            t.image_id = img.id;
            t.task = TaskType::description;
            t.strategy = kDescStrategies[s];
            t.object = absent_object(img, static_cast<std::uint64_t>(i) + 100 * s);
            t.object_present = false;
            t.query = "Describe the image in detail.";
            tasks.push_back(t);
        }
    }
    for (int i = 0; i < 9; ++i) {
        const WorldImage& img = world.images[(3 * i + 1) % world.images.size()];
        PrefTask t;
        t.id = next_id();
        t.image_id = img.id;
        t.task = TaskType::attribute;
        t.strategy = GenStrategy::inversion;
        t.object = present_object(img, i + 3);
        t.object_present = true;
        t.query = "What does the " + t.object + " look like?";
        if (i == 3) {
            t.correct_answer = "The mirror stands perfectly still.";  // judge echoes this
        } else if (i == 6) {
            t.correct_answer = "A glass orb rests on the shelf.";  // judge denies this
        } else {
            t.correct_answer = "The " + t.object + " is " +
                               (i % 2 ? std::string("silver") : std::string("pale blue")) +
                               " with a matte finish.";
        }
        tasks.push_back(t);
    }

    write_jsonl(path, tasks);
}

// ---------------------------------------------------------------------------
// Config files

void write_golden_configs(const fs::path& dir, std::uint64_t seed, std::size_t pool_k) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.jobs = 1;
    cfg.out_dir = "out";
    cfg.backend.kind = BackendKind::mock;
    cfg.backend.endpoint = "fixtures";
    cfg.embeddings = "inputs/embeddings.jsonl";
    cfg.pool_k = pool_k;
    cfg.candidates = "inputs/candidates.jsonl";
    cfg.responses = "inputs/responses.jsonl";
    write_text_atomic(dir / "config.json", config_to_json(cfg).dump(2) + "\n");

    std::string toml;
    toml += "# Benchmark-chain config for the shipped 50-image fixture world.\n";
    toml += "seed = " + std::to_string(seed) + "\n";
    toml += "jobs = 1\n";
    toml += "out_dir = \"out\"\n\n";
    toml += "[backend]\n";
    toml += "kind = \"mock\"\n";
    toml += "endpoint = \"fixtures\"\n\n";
    toml += "[pool]\n";
    toml += "embeddings = \"inputs/embeddings.jsonl\"\n";
    toml += "k = " + std::to_string(pool_k) + "\n\n";
    toml += "[annotate]\n";
    toml += "candidates = \"inputs/candidates.jsonl\"\n\n";
    toml += "[evaluate]\n";
    toml += "responses = \"inputs/responses.jsonl\"\n";
    write_text_atomic(dir / "config.toml", toml);
}

void write_prefs_configs(const fs::path& dir, std::uint64_t seed, std::size_t total) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.jobs = 1;
    cfg.out_dir = "out";
    cfg.backend.kind = BackendKind::mock;
    cfg.backend.endpoint = "fixtures";
    cfg.tasks = "inputs/tasks.jsonl";
    cfg.total = total;
    write_text_atomic(dir / "config.json", config_to_json(cfg).dump(2) + "\n");

    std::string toml;
    toml += "# Preference-chain config for the shipped fixture world.\n";
    toml += "seed = " + std::to_string(seed) + "\n";
    toml += "jobs = 1\n";
    toml += "out_dir = \"out\"\n\n";
    toml += "[backend]\n";
    toml += "kind = \"mock\"\n";
    toml += "endpoint = \"fixtures\"\n\n";
    toml += "[prefs]\n";
    toml += "tasks = \"inputs/tasks.jsonl\"\n";
    toml += "total = " + std::to_string(total) + "\n";
    write_text_atomic(dir / "config.toml", toml);
}

// ---------------------------------------------------------------------------
// Self-checks

/// Smallest gap between adjacent ranked scores that are not exact ties, and
/// the gap of the present-object pairing argmax; either under 1e-6 means the
/// fixture world is one libm ulp away from flipping a decision.
void check_ranking_margins(const fs::path& ranking_file) {
    JsonlReader reader(ranking_file);
    json j;
    double worst = 1e300;
    while (reader.next(j)) {
        auto ranked = j.at("ranked");
        for (std::size_t i = 1; i < ranked.size(); ++i) {
            double a = ranked[i - 1].at("score").get<double>();
            double b = ranked[i].at("score").get<double>();
            if (a != b) worst = std::min(worst, a - b);
        }
    }
    if (worst < 1e-6) {
        fail(ErrorCode::numeric,
             "ranking margin " + std::to_string(worst) + " is too close to a tie");
    }
    std::cout << "  worst non-tie ranking margin: " << worst << "\n";
}

std::vector<fs::path> artifact_files(const fs::path& out_dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(out_dir)) {
        if (entry.path().extension() == ".jsonl" || entry.path().extension() == ".json") {
            if (entry.path().string().find(".manifest.") == std::string::npos) {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

void compare_runs(const fs::path& a, const fs::path& b) {
    auto files_a = artifact_files(a);
    auto files_b = artifact_files(b);
    if (files_a.size() != files_b.size()) {
        fail(ErrorCode::io, "replay produced a different artifact set");
    }
    for (std::size_t i = 0; i < files_a.size(); ++i) {
        if (files_a[i].filename() != files_b[i].filename() ||
            digest_file(files_a[i].string()) != digest_file(files_b[i].string())) {
            fail(ErrorCode::io, "replay mismatch on " + files_a[i].filename().string());
        }
    }
}

void print_digests(const std::string& label, const fs::path& out_dir) {
    std::cout << "  artifact digests (" << label << "):\n";
    for (const auto& file : artifact_files(out_dir)) {
        std::cout << "    {\"" << file.filename().string() << "\", \""
                  << digest_file(file.string()) << "\"},\n";
    }
}

// ---------------------------------------------------------------------------
// Set generation

void generate_golden50(const World& world, const fs::path& dir) {
    std::cout << "golden50 -> " << dir << "\n";
    fs::create_directories(dir / "inputs");
    fs::create_directories(dir / "fixtures");

    const std::uint64_t seed = 413;
    const std::size_t pool_k = 40;

    write_embeddings(world, dir / "inputs/embeddings.jsonl", seed);
    write_candidates(world, dir / "inputs/candidates.jsonl");

    // Recording pass: scripted services behind the recorder, ranking sidecar
    // on so the margin check can see the scores. This config is throwaway;
    // the shipped one below uses relative paths and no sidecar.
    FixtureRecorder recorder(scripted_backends(world), dir / "fixtures");
    BackendFactory record_factory = [&](const BackendConfig&) { return recorder.backends(); };

    PipelineConfig rec;
    rec.seed = seed;
    rec.out_dir = dir / "record_out";
    rec.embeddings = dir / "inputs/embeddings.jsonl";
    rec.pool_k = pool_k;
    rec.candidates = dir / "inputs/candidates.jsonl";
    rec.emit_ranking = true;
    run_pipeline(rec, "", "", record_factory);

    auto items = read_jsonl<BenchmarkItem>(rec.out_dir / "benchmark.jsonl");
    std::cout << "  benchmark items: " << items.size() << "\n";
    if (items.size() < 30) fail(ErrorCode::numeric, "too many images fell out of the benchmark");
    write_responses(world, items, dir / "inputs/responses.jsonl");

    rec.responses = dir / "inputs/responses.jsonl";
    run_pipeline(rec, "evaluate", "evaluate", record_factory);
    recorder.flush();

    check_ranking_margins(rec.out_dir / "ranking.jsonl");

    ValidationReport validation = validate_dataset((rec.out_dir / "benchmark.jsonl").string(),
                                                   {RecordType::benchmark_item, true, 20});
    if (!validation.ok()) {
        fail(ErrorCode::io, "benchmark items failed validation: " +
                                std::to_string(validation.violation_count) + " violations");
    }

    write_golden_configs(dir, seed, pool_k);
    fs::remove_all(rec.out_dir);

    // Replay twice from the fixtures alone, through the shipped config.
    fs::path cwd = fs::current_path();
    fs::current_path(dir);
    PipelineConfig shipped = load_config("config.toml");
    run_pipeline(shipped);
    fs::rename("out", "out_first");
    run_pipeline(shipped);
    compare_runs("out", "out_first");
    print_digests("golden50", "out");
    fs::remove_all("out_first");
    fs::remove_all("out");
    fs::current_path(cwd);
    std::cout << "  replay: byte-identical\n";
}

void generate_prefs20(const World& world, const fs::path& dir) {
    std::cout << "prefs20 -> " << dir << "\n";
    fs::create_directories(dir / "inputs");
    fs::create_directories(dir / "fixtures");

    const std::uint64_t seed = 877;
    const std::size_t total = 20;

    write_pref_tasks(world, dir / "inputs/tasks.jsonl");

    FixtureRecorder recorder(scripted_backends(world), dir / "fixtures");
    BackendFactory record_factory = [&](const BackendConfig&) { return recorder.backends(); };

    PipelineConfig rec;
    rec.seed = seed;
    rec.out_dir = dir / "record_out";
    rec.tasks = dir / "inputs/tasks.jsonl";
    rec.total = total;
    run_pipeline(rec, "", "", record_factory);
    recorder.flush();

    // The composition must never sit exactly at a bucket's pool size, or the
    // fixture regenerates into a shortfall the moment a script changes.
    auto weighted = read_jsonl<PreferenceSample>(rec.out_dir / "weighted.jsonl");
    std::map<std::string, std::size_t> buckets;
    for (const auto& s : weighted) {
        std::string key = s.task == TaskType::description
                              ? "description/" + to_string(s.gen_strategy)
                              : to_string(s.task);
        ++buckets[key];
    }
    CompositionPlan plan = plan_composition(total, kDefaultCompositionRatio);
    const char* kTaskNames[] = {"cpq", "tpq", "pope", "description", "attribute"};
    for (int t = 0; t < 5; ++t) {
        if (t == 3) continue;
        if (buckets[kTaskNames[t]] < plan.task_quota[t] + 1) {
            fail(ErrorCode::pool_shortfall, std::string("bucket ") + kTaskNames[t] +
                                                " too small: " +
                                                std::to_string(buckets[kTaskNames[t]]));
        }
    }
    const char* kStratNames[] = {"unilateral", "contrastive", "posthoc"};
    for (int s = 0; s < 3; ++s) {
        std::string key = std::string("description/") + kStratNames[s];
        if (buckets[key] < plan.description_split[s] + 1) {
            fail(ErrorCode::pool_shortfall, "bucket " + key + " too small: " +
                                                std::to_string(buckets[key]));
        }
    }

    write_prefs_configs(dir, seed, total);
    fs::remove_all(rec.out_dir);

    fs::path cwd = fs::current_path();
    fs::current_path(dir);
    PipelineConfig shipped = load_config("config.toml");
    run_pipeline(shipped);
    fs::rename("out", "out_first");
    run_pipeline(shipped);
    compare_runs("out", "out_first");
    print_digests("prefs20", "out");
    fs::remove_all("out_first");
    fs::remove_all("out");
    fs::current_path(cwd);
    std::cout << "  replay: byte-identical\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: fixturegen <output-root>\n";
        return 2;
    }
    try {
        World world = build_world(99551, 50);
        fs::path root = argv[1];
        generate_golden50(world, root / "golden50");
        generate_prefs20(world, root / "prefs20");
    } catch (const std::exception& e) {
        std::cerr << "fixturegen failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
