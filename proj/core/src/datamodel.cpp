#include "halluforge/datamodel.hpp"

#include <cmath>
#include <fstream>

namespace halluforge {

namespace {

/// Walks a parsed value and reports the first non-finite number. nlohmann
/// would silently dump NaN/inf as `null`, which corrupts round-trips, so we
/// refuse before writing.
void reject_non_finite(const json& j, const std::string& path) {
    if (j.is_number_float()) {
        double d = j.get<double>();
        if (!std::isfinite(d))
            fail(ErrorCode::serialization, "non-finite number at " + path);
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            reject_non_finite(it.value(), path + "/" + it.key());
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            reject_non_finite(j[i], path + "/" + std::to_string(i));
    }
}

json labels_to_array(const ObjectSet& set) {
    json arr = json::array();
    for (const auto& label : set) arr.push_back(label.name());
    return arr;
}

ObjectSet labels_from_array(const json& arr) {
    ObjectSet out;
    for (const auto& item : arr) out.insert(ObjectLabel(item.get<std::string>()));
    return out;
}

[[noreturn]] void bad_enum(const char* what, std::string_view s) {
    fail(ErrorCode::serialization,
         std::string("unknown ") + what + " '" + std::string(s) + "'");
}

}  // namespace

std::string to_string(ImageSource v) {
    switch (v) {
        case ImageSource::coco_instances: return "coco-instances";
        case ImageSource::detector: return "detector";
        case ImageSource::generated: return "generated";
    }
    fail(ErrorCode::serialization, "bad ImageSource value");
}

std::string to_string(QuestionKind v) {
    switch (v) {
        case QuestionKind::rec_pos: return "rec_pos";
        case QuestionKind::rec_rnd: return "rec_rnd";
        case QuestionKind::rec_adv: return "rec_adv";
        case QuestionKind::adp: return "adp";
    }
    fail(ErrorCode::serialization, "bad QuestionKind value");
}

std::string to_string(GoldAnswer v) {
    switch (v) {
        case GoldAnswer::yes: return "yes";
        case GoldAnswer::no: return "no";
        case GoldAnswer::absent_object: return "absent-object";
    }
    fail(ErrorCode::serialization, "bad GoldAnswer value");
}

std::string to_string(BenchmarkSubset v) {
    switch (v) {
        case BenchmarkSubset::instances: return "instances";
        case BenchmarkSubset::florence_like: return "florence-like";
    }
    fail(ErrorCode::serialization, "bad BenchmarkSubset value");
}

std::string to_string(TaskType v) {
    switch (v) {
        case TaskType::cpq: return "cpq";
        case TaskType::tpq: return "tpq";
        case TaskType::pope: return "pope";
        case TaskType::description: return "description";
        case TaskType::attribute: return "attribute";
    }
    fail(ErrorCode::serialization, "bad TaskType value");
}

std::string to_string(GenStrategy v) {
    switch (v) {
        case GenStrategy::unilateral: return "unilateral";
        case GenStrategy::contrastive: return "contrastive";
        case GenStrategy::posthoc: return "posthoc";
        case GenStrategy::inversion: return "inversion";
    }
    fail(ErrorCode::serialization, "bad GenStrategy value");
}

ImageSource image_source_from(std::string_view s) {
    if (s == "coco-instances") return ImageSource::coco_instances;
    if (s == "detector") return ImageSource::detector;
    if (s == "generated") return ImageSource::generated;
    bad_enum("image source", s);
}

QuestionKind question_kind_from(std::string_view s) {
    if (s == "rec_pos") return QuestionKind::rec_pos;
    if (s == "rec_rnd") return QuestionKind::rec_rnd;
    if (s == "rec_adv") return QuestionKind::rec_adv;
    if (s == "adp") return QuestionKind::adp;
    bad_enum("question kind", s);
}

GoldAnswer gold_answer_from(std::string_view s) {
    if (s == "yes") return GoldAnswer::yes;
    if (s == "no") return GoldAnswer::no;
    if (s == "absent-object") return GoldAnswer::absent_object;
    bad_enum("gold answer", s);
}

BenchmarkSubset subset_from(std::string_view s) {
    if (s == "instances") return BenchmarkSubset::instances;
    if (s == "florence-like") return BenchmarkSubset::florence_like;
    bad_enum("benchmark subset", s);
}

TaskType task_type_from(std::string_view s) {
    if (s == "cpq") return TaskType::cpq;
    if (s == "tpq") return TaskType::tpq;
    if (s == "pope") return TaskType::pope;
    if (s == "description") return TaskType::description;
    if (s == "attribute") return TaskType::attribute;
    bad_enum("task type", s);
}

GenStrategy gen_strategy_from(std::string_view s) {
    if (s == "unilateral") return GenStrategy::unilateral;
    if (s == "contrastive") return GenStrategy::contrastive;
    if (s == "posthoc") return GenStrategy::posthoc;
    if (s == "inversion") return GenStrategy::inversion;
    bad_enum("generation strategy", s);
}

std::string BenchmarkItem::question_id(const std::string& image_id, QuestionKind kind) {
    return image_id + "#" + to_string(kind);
}

void to_json(json& j, const ObjectLabel& v) { j = json{{"name", v.name()}}; }

void from_json(const json& j, ObjectLabel& v) {
    v = ObjectLabel(j.at("name").get<std::string>());
}

void to_json(json& j, const ObjectTriple& v) {
    j = json{{"present", v.present.name()},
             {"random", v.random.name()},
             {"adversarial", v.adversarial.name()}};
}

void from_json(const json& j, ObjectTriple& v) {
    v.present = ObjectLabel(j.at("present").get<std::string>());
    v.random = ObjectLabel(j.at("random").get<std::string>());
    v.adversarial = ObjectLabel(j.at("adversarial").get<std::string>());
}

void to_json(json& j, const ImageRecord& v) {
    j = json{{"id", v.id},
             {"source", to_string(v.source)},
             {"caption", v.caption},
             {"extra_captions", v.extra_captions},
             {"present_objects", labels_to_array(v.present_objects)},
             {"absent_verified", labels_to_array(v.absent_verified)}};
    if (v.triple) j["triple"] = *v.triple;
}

void from_json(const json& j, ImageRecord& v) {
    v.id = j.at("id").get<std::string>();
    v.source = image_source_from(j.at("source").get<std::string>());
    v.caption = j.at("caption").get<std::string>();
    v.extra_captions = j.at("extra_captions").get<std::vector<std::string>>();
    v.present_objects = labels_from_array(j.at("present_objects"));
    v.absent_verified = labels_from_array(j.at("absent_verified"));
    v.triple.reset();
    if (j.contains("triple")) v.triple = j.at("triple").get<ObjectTriple>();
}

void to_json(json& j, const QuestionRecord& v) {
    j = json{{"text", v.text},
             {"kind", to_string(v.kind)},
             {"target_object", v.target_object.name()},
             {"gold", to_string(v.gold)}};
}

void from_json(const json& j, QuestionRecord& v) {
    v.text = j.at("text").get<std::string>();
    v.kind = question_kind_from(j.at("kind").get<std::string>());
    v.target_object = ObjectLabel(j.at("target_object").get<std::string>());
    v.gold = gold_answer_from(j.at("gold").get<std::string>());
}

void to_json(json& j, const BenchmarkItem& v) {
    j = json{{"image_id", v.image_id},
             {"subset", to_string(v.subset)},
             {"questions", v.questions}};
}

void from_json(const json& j, BenchmarkItem& v) {
    v.image_id = j.at("image_id").get<std::string>();
    v.subset = subset_from(j.at("subset").get<std::string>());
    v.questions = j.at("questions").get<std::vector<QuestionRecord>>();
}

void to_json(json& j, const PreferenceSample& v) {
    j = json{{"id", v.id},
             {"image_id", v.image_id},
             {"instruction", v.instruction},
             {"chosen", v.chosen},
             {"rejected", v.rejected},
             {"task", to_string(v.task)},
             {"gen_strategy", to_string(v.gen_strategy)}};
    if (v.weight) j["weight"] = *v.weight;
    if (v.norm_weight) j["norm_weight"] = *v.norm_weight;
    if (v.distance) j["distance"] = *v.distance;
    if (v.weight_fallback) j["weight_fallback"] = *v.weight_fallback;
    if (v.weight_judge_raw) j["weight_judge_raw"] = *v.weight_judge_raw;
}

void from_json(const json& j, PreferenceSample& v) {
    v.id = j.at("id").get<std::string>();
    v.image_id = j.at("image_id").get<std::string>();
    v.instruction = j.at("instruction").get<std::string>();
    v.chosen = j.at("chosen").get<std::string>();
    v.rejected = j.at("rejected").get<std::string>();
    v.task = task_type_from(j.at("task").get<std::string>());
    v.gen_strategy = gen_strategy_from(j.at("gen_strategy").get<std::string>());
    v.weight.reset();
    v.norm_weight.reset();
    v.distance.reset();
    v.weight_fallback.reset();
    v.weight_judge_raw.reset();
    if (j.contains("weight")) v.weight = j.at("weight").get<int>();
    if (j.contains("norm_weight")) v.norm_weight = j.at("norm_weight").get<double>();
    if (j.contains("distance")) v.distance = j.at("distance").get<double>();
    if (j.contains("weight_fallback")) v.weight_fallback = j.at("weight_fallback").get<bool>();
    if (j.contains("weight_judge_raw"))
        v.weight_judge_raw = j.at("weight_judge_raw").get<std::string>();
}

void to_json(json& j, const LogProbPair& v) {
    j = json{{"sample_id", v.sample_id},
             {"logp_policy_chosen", v.logp_policy_chosen},
             {"logp_policy_rejected", v.logp_policy_rejected},
             {"logp_ref_chosen", v.logp_ref_chosen},
             {"logp_ref_rejected", v.logp_ref_rejected}};
}

void from_json(const json& j, LogProbPair& v) {
    v.sample_id = j.at("sample_id").get<std::string>();
    v.logp_policy_chosen = j.at("logp_policy_chosen").get<double>();
    v.logp_policy_rejected = j.at("logp_policy_rejected").get<double>();
    v.logp_ref_chosen = j.at("logp_ref_chosen").get<double>();
    v.logp_ref_rejected = j.at("logp_ref_rejected").get<double>();
}

void to_json(json& j, const EmbeddedCaption& v) {
    j = json{{"id", v.id}, {"text", v.text}, {"vector", v.vector}};
}

void from_json(const json& j, EmbeddedCaption& v) {
    v.id = j.at("id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.vector = j.at("vector").get<std::vector<double>>();
}

void to_json(json& j, const RunManifest& v) {
    j = json{{"pipeline_stage", v.pipeline_stage},
             {"config_digest", v.config_digest},
             {"global_seed", v.global_seed},
             {"input_digests", v.input_digests},
             {"stats", v.stats},
             {"tool_version", v.tool_version},
             {"timestamp", v.timestamp}};
}

void from_json(const json& j, RunManifest& v) {
    v.pipeline_stage = j.at("pipeline_stage").get<std::string>();
    v.config_digest = j.at("config_digest").get<std::string>();
    v.global_seed = j.at("global_seed").get<std::uint64_t>();
    v.input_digests = j.at("input_digests").get<std::map<std::string, std::string>>();
    v.stats = j.value("stats", std::map<std::string, std::uint64_t>{});
    v.tool_version = j.at("tool_version").get<std::string>();
    v.timestamp = j.at("timestamp").get<std::string>();
}

std::string serialize_line(const json& value) {
    reject_non_finite(value, "");
    return value.dump();
}

// ---------------------------------------------------------------------------
// Validation

std::string to_string(RecordType v) {
    switch (v) {
        case RecordType::auto_detect: return "auto";
        case RecordType::object_label: return "object-label";
        case RecordType::image_record: return "image-record";
        case RecordType::benchmark_item: return "benchmark-item";
        case RecordType::preference_sample: return "preference-sample";
        case RecordType::logprob_pair: return "logprob-pair";
        case RecordType::embedded_caption: return "embedded-caption";
    }
    fail(ErrorCode::serialization, "bad RecordType value");
}

namespace {

void add(std::vector<Violation>& out, std::string rule, std::string message) {
    out.push_back(Violation{0, std::move(rule), std::move(message)});
}

bool want_string(const json& r, const char* key, std::vector<Violation>& out,
                 bool allow_empty = false) {
    if (!r.contains(key) || !r[key].is_string()) {
        add(out, "schema", std::string("missing or non-string field '") + key + "'");
        return false;
    }
    if (!allow_empty && r[key].get<std::string>().empty()) {
        add(out, "schema", std::string("empty field '") + key + "'");
        return false;
    }
    return true;
}

bool normal_form(const std::string& s) {
    return !s.empty() && s == text::normalize_label(s);
}

void check_label_array(const json& r, const char* key, std::vector<Violation>& out) {
    if (!r.contains(key) || !r[key].is_array()) {
        add(out, "schema", std::string("missing or non-array field '") + key + "'");
        return;
    }
    for (const auto& item : r[key]) {
        if (!item.is_string()) {
            add(out, "schema", std::string("non-string label in '") + key + "'");
            return;
        }
        if (!normal_form(item.get<std::string>()))
            add(out, "label-normal-form",
                "label '" + item.get<std::string>() + "' in '" + key +
                    "' is not in normal form");
    }
}

std::set<std::string> string_set(const json& arr) {
    std::set<std::string> out;
    if (arr.is_array())
        for (const auto& item : arr)
            if (item.is_string()) out.insert(item.get<std::string>());
    return out;
}

void check_image_record(const json& r, const ValidateOptions& opts,
                        std::vector<Violation>& out) {
    want_string(r, "id", out);
    if (r.contains("source") && r["source"].is_string()) {
        try {
            image_source_from(r["source"].get<std::string>());
        } catch (const Error&) {
            add(out, "schema", "unknown source '" + r["source"].get<std::string>() + "'");
        }
    } else {
        add(out, "schema", "missing or non-string field 'source'");
    }
    want_string(r, "caption", out, /*allow_empty=*/true);
    check_label_array(r, "present_objects", out);
    check_label_array(r, "absent_verified", out);

    auto present = string_set(r.value("present_objects", json::array()));
    auto absent = string_set(r.value("absent_verified", json::array()));
    for (const auto& name : present)
        if (absent.count(name))
            add(out, "present-absent-overlap",
                "'" + name + "' listed both present and absent");

    if (opts.benchmark_stage && present.size() < 3)
        add(out, "min-present-objects",
            "benchmark image needs >= 3 present objects, has " +
                std::to_string(present.size()));

    if (r.contains("triple")) {
        const auto& t = r["triple"];
        if (!t.is_object() || !t.contains("present") || !t.contains("random") ||
            !t.contains("adversarial")) {
            add(out, "schema", "triple must carry present/random/adversarial");
            return;
        }
        auto p = t["present"].is_string() ? t["present"].get<std::string>() : "";
        auto rn = t["random"].is_string() ? t["random"].get<std::string>() : "";
        auto a = t["adversarial"].is_string() ? t["adversarial"].get<std::string>() : "";
        if (p == rn || p == a || rn == a)
            add(out, "triple-distinct", "triple objects must be pairwise distinct");
        if (!present.count(p))
            add(out, "triple-present-membership",
                "triple.present '" + p + "' is not a present object");
        if (present.count(rn))
            add(out, "triple-random-membership",
                "triple.random '" + rn + "' is a present object");
        if (present.count(a))
            add(out, "triple-adversarial-membership",
                "triple.adversarial '" + a + "' is a present object");
    }
}

void check_benchmark_item(const json& r, std::vector<Violation>& out) {
    want_string(r, "image_id", out);
    if (r.contains("subset") && r["subset"].is_string()) {
        try {
            subset_from(r["subset"].get<std::string>());
        } catch (const Error&) {
            add(out, "schema", "unknown subset '" + r["subset"].get<std::string>() + "'");
        }
    } else {
        add(out, "schema", "missing or non-string field 'subset'");
    }
    if (!r.contains("questions") || !r["questions"].is_array()) {
        add(out, "schema", "missing or non-array field 'questions'");
        return;
    }
    const auto& qs = r["questions"];
    if (qs.size() != 4)
        add(out, "question-kinds",
            "expected 4 questions, found " + std::to_string(qs.size()));

    std::map<std::string, int> kind_count;
    std::string adv_target, adp_target;
    for (const auto& q : qs) {
        if (!q.is_object() || !q.contains("kind") || !q["kind"].is_string() ||
            !q.contains("gold") || !q["gold"].is_string() || !q.contains("text") ||
            !q.contains("target_object")) {
            add(out, "schema", "malformed question record");
            continue;
        }
        std::string kind = q["kind"].get<std::string>();
        std::string gold = q["gold"].get<std::string>();
        ++kind_count[kind];
        std::string expected;
        if (kind == "rec_pos") expected = "yes";
        else if (kind == "rec_rnd" || kind == "rec_adv") expected = "no";
        else if (kind == "adp") expected = "absent-object";
        else {
            add(out, "schema", "unknown question kind '" + kind + "'");
            continue;
        }
        if (gold != expected)
            add(out, "gold-consistency",
                kind + " question must carry gold '" + expected + "', has '" + gold + "'");
        if (q["text"].is_string() && q["text"].get<std::string>().empty())
            add(out, "schema", "empty question text");
        if (kind == "rec_adv" && q["target_object"].is_string())
            adv_target = q["target_object"].get<std::string>();
        if (kind == "adp" && q["target_object"].is_string())
            adp_target = q["target_object"].get<std::string>();
    }
    for (const char* kind : {"rec_pos", "rec_rnd", "rec_adv", "adp"})
        if (kind_count[kind] != 1)
            add(out, "question-kinds",
                std::string("expected exactly one '") + kind + "' question, found " +
                    std::to_string(kind_count[kind]));
    if (!adv_target.empty() && !adp_target.empty() && adv_target != adp_target)
        add(out, "adv-target",
            "rec_adv targets '" + adv_target + "' but adp targets '" + adp_target + "'");
}

void check_preference_sample(const json& r, std::vector<Violation>& out) {
    want_string(r, "id", out);
    want_string(r, "image_id", out);
    want_string(r, "instruction", out);
    bool has_chosen = want_string(r, "chosen", out);
    bool has_rejected = want_string(r, "rejected", out);
    if (has_chosen && has_rejected &&
        r["chosen"].get<std::string>() == r["rejected"].get<std::string>())
        add(out, "chosen-differs", "chosen and rejected responses are identical");
    for (const char* key : {"task", "gen_strategy"}) {
        if (!r.contains(key) || !r[key].is_string()) {
            add(out, "schema", std::string("missing or non-string field '") + key + "'");
            continue;
        }
        try {
            if (std::string(key) == "task") task_type_from(r[key].get<std::string>());
            else gen_strategy_from(r[key].get<std::string>());
        } catch (const Error&) {
            add(out, "schema",
                std::string("unknown ") + key + " '" + r[key].get<std::string>() + "'");
        }
    }
    if (r.contains("weight")) {
        if (!r["weight"].is_number_integer() || r["weight"].get<int>() < 1 ||
            r["weight"].get<int>() > 3)
            add(out, "weight-range", "weight must be an integer in {1,2,3}");
    }
    if (r.contains("norm_weight")) {
        if (!r["norm_weight"].is_number() || !(r["norm_weight"].get<double>() > 0.0) ||
            !std::isfinite(r["norm_weight"].get<double>()))
            add(out, "norm-weight", "norm_weight must be finite and positive");
    }
}

void check_logprob_pair(const json& r, std::vector<Violation>& out) {
    want_string(r, "sample_id", out);
    for (const char* key : {"logp_policy_chosen", "logp_policy_rejected",
                            "logp_ref_chosen", "logp_ref_rejected"}) {
        if (!r.contains(key) || !r[key].is_number()) {
            add(out, "schema", std::string("missing or non-numeric field '") + key + "'");
            continue;
        }
        if (!std::isfinite(r[key].get<double>()))
            add(out, "finite-logprob", std::string("field '") + key + "' is not finite");
    }
}

void check_embedded_caption(const json& r, std::vector<Violation>& out) {
    want_string(r, "id", out);
    want_string(r, "text", out, /*allow_empty=*/true);
    if (!r.contains("vector") || !r["vector"].is_array()) {
        add(out, "schema", "missing or non-array field 'vector'");
        return;
    }
    if (r["vector"].empty()) add(out, "vector-empty", "embedding vector is empty");
    for (const auto& x : r["vector"]) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            add(out, "vector-finite", "embedding vector has a non-finite entry");
            break;
        }
    }
}

void check_object_label(const json& r, std::vector<Violation>& out) {
    if (!want_string(r, "name", out)) return;
    if (!normal_form(r["name"].get<std::string>()))
        add(out, "label-normal-form",
            "label '" + r["name"].get<std::string>() + "' is not in normal form");
}

}  // namespace

RecordType detect_record_type(const json& r) {
    if (!r.is_object()) return RecordType::auto_detect;
    if (r.contains("questions")) return RecordType::benchmark_item;
    if (r.contains("present_objects")) return RecordType::image_record;
    if (r.contains("chosen") && r.contains("rejected")) return RecordType::preference_sample;
    if (r.contains("logp_policy_chosen")) return RecordType::logprob_pair;
    if (r.contains("vector")) return RecordType::embedded_caption;
    if (r.contains("name")) return RecordType::object_label;
    return RecordType::auto_detect;
}

std::vector<Violation> check_record(const json& record, RecordType type,
                                    const ValidateOptions& opts) {
    std::vector<Violation> out;
    if (!record.is_object()) {
        add(out, "schema", "record is not a JSON object");
        return out;
    }
    switch (type) {
        case RecordType::object_label: check_object_label(record, out); break;
        case RecordType::image_record: check_image_record(record, opts, out); break;
        case RecordType::benchmark_item: check_benchmark_item(record, out); break;
        case RecordType::preference_sample: check_preference_sample(record, out); break;
        case RecordType::logprob_pair: check_logprob_pair(record, out); break;
        case RecordType::embedded_caption: check_embedded_caption(record, out); break;
        case RecordType::auto_detect:
            add(out, "schema", "unrecognized record shape");
            break;
    }
    return out;
}

ValidationReport validate_dataset(const std::string& path, const ValidateOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open '" + path + "'");

    ValidationReport report;
    report.detected = opts.type;
    std::optional<std::size_t> embed_dim;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++report.records;

        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded()) {
            ++report.violation_count;
            if (report.first_violations.size() < opts.max_reported)
                report.first_violations.push_back({line_no, "parse", "malformed JSON line"});
            continue;
        }
        if (report.detected == RecordType::auto_detect) {
            report.detected = detect_record_type(record);
            if (report.detected == RecordType::auto_detect) {
                ++report.violation_count;
                if (report.first_violations.size() < opts.max_reported)
                    report.first_violations.push_back(
                        {line_no, "schema", "cannot infer record type from fields"});
                continue;
            }
        }

        auto violations = check_record(record, report.detected, opts);

        // Embedding width must agree across the file; the first record fixes it.
        if (report.detected == RecordType::embedded_caption && record.contains("vector") &&
            record["vector"].is_array() && !record["vector"].empty()) {
            if (!embed_dim) {
                embed_dim = record["vector"].size();
            } else if (record["vector"].size() != *embed_dim) {
                violations.push_back(
                    {0, "vector-dim",
                     "vector has " + std::to_string(record["vector"].size()) +
                         " entries, file uses " + std::to_string(*embed_dim)});
            }
        }

        if (violations.empty()) {
            ++report.valid;
        } else {
            report.violation_count += violations.size();
            for (auto& v : violations) {
                if (report.first_violations.size() >= opts.max_reported) break;
                v.line = line_no;
                report.first_violations.push_back(std::move(v));
            }
        }
    }
    return report;
}

}  // namespace halluforge
