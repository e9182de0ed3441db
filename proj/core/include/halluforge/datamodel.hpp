#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "halluforge/errors.hpp"
#include "halluforge/text.hpp"

namespace halluforge {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "halluforge 0.1.0";

/// Normalized object name (lowercase, trimmed, single-spaced). Labels arrive
/// from COCO annotations, detector output and generated candidates; the
/// normal form makes them joinable.
class ObjectLabel {
public:
    ObjectLabel() = default;
    explicit ObjectLabel(std::string_view raw) : name_(text::normalize_label(raw)) {}

    const std::string& name() const { return name_; }
    bool empty() const { return name_.empty(); }

    auto operator<=>(const ObjectLabel&) const = default;

private:
    std::string name_;
};

using ObjectSet = std::set<ObjectLabel>;

struct ObjectTriple {
    ObjectLabel present;
    ObjectLabel random;
    ObjectLabel adversarial;

    bool operator==(const ObjectTriple&) const = default;
};

enum class ImageSource { coco_instances, detector, generated };

struct ImageRecord {
    std::string id;
    ImageSource source = ImageSource::coco_instances;
    std::string caption;
    std::vector<std::string> extra_captions;
    ObjectSet present_objects;
    ObjectSet absent_verified;
    std::optional<ObjectTriple> triple;

    bool benchmark_eligible() const { return present_objects.size() >= 3; }

    bool operator==(const ImageRecord&) const = default;
};

enum class QuestionKind { rec_pos, rec_rnd, rec_adv, adp };
enum class GoldAnswer { yes, no, absent_object };

struct QuestionRecord {
    std::string text;
    QuestionKind kind = QuestionKind::rec_pos;
    ObjectLabel target_object;
    GoldAnswer gold = GoldAnswer::yes;

    bool operator==(const QuestionRecord&) const = default;
};

enum class BenchmarkSubset { instances, florence_like };

struct BenchmarkItem {
    std::string image_id;
    BenchmarkSubset subset = BenchmarkSubset::instances;
    std::vector<QuestionRecord> questions;  // exactly four, one per kind

    /// Join key for response files: "<image_id>#<kind>".
    static std::string question_id(const std::string& image_id, QuestionKind kind);

    bool operator==(const BenchmarkItem&) const = default;
};

enum class TaskType { cpq, tpq, pope, description, attribute };
enum class GenStrategy { unilateral, contrastive, posthoc, inversion };

struct PreferenceSample {
    std::string id;
    std::string image_id;
    std::string instruction;
    std::string chosen;
    std::string rejected;
    TaskType task = TaskType::cpq;
    GenStrategy gen_strategy = GenStrategy::unilateral;
    std::optional<int> weight;                   // semantic-gap score in {1,2,3}
    std::optional<double> norm_weight;           // weight / subset mean
    std::optional<double> distance;              // embedding distance at filter time
    std::optional<bool> weight_fallback;         // set when the judge could not score
    std::optional<std::string> weight_judge_raw; // raw judge text, for audit

    bool operator==(const PreferenceSample&) const = default;
};

struct LogProbPair {
    std::string sample_id;
    double logp_policy_chosen = 0.0;
    double logp_policy_rejected = 0.0;
    double logp_ref_chosen = 0.0;
    double logp_ref_rejected = 0.0;

    bool operator==(const LogProbPair&) const = default;
};

struct EmbeddedCaption {
    std::string id;
    std::string text;
    std::vector<double> vector;

    bool operator==(const EmbeddedCaption&) const = default;
};

struct RunManifest {
    std::string pipeline_stage;
    std::string config_digest;
    std::uint64_t global_seed = 0;
    std::map<std::string, std::string> input_digests;
    std::map<std::string, std::uint64_t> stats;  // stage counters (failed items etc.)
    std::string tool_version = kToolVersion;
    std::string timestamp;  // excluded from all digests

    bool operator==(const RunManifest&) const = default;
};

// Enum <-> wire spellings.
std::string to_string(ImageSource v);
std::string to_string(QuestionKind v);
std::string to_string(GoldAnswer v);
std::string to_string(BenchmarkSubset v);
std::string to_string(TaskType v);
std::string to_string(GenStrategy v);

ImageSource image_source_from(std::string_view s);
QuestionKind question_kind_from(std::string_view s);
GoldAnswer gold_answer_from(std::string_view s);
BenchmarkSubset subset_from(std::string_view s);
TaskType task_type_from(std::string_view s);
GenStrategy gen_strategy_from(std::string_view s);

void to_json(json& j, const ObjectLabel& v);
void from_json(const json& j, ObjectLabel& v);
void to_json(json& j, const ObjectTriple& v);
void from_json(const json& j, ObjectTriple& v);
void to_json(json& j, const ImageRecord& v);
void from_json(const json& j, ImageRecord& v);
void to_json(json& j, const QuestionRecord& v);
void from_json(const json& j, QuestionRecord& v);
void to_json(json& j, const BenchmarkItem& v);
void from_json(const json& j, BenchmarkItem& v);
void to_json(json& j, const PreferenceSample& v);
void from_json(const json& j, PreferenceSample& v);
void to_json(json& j, const LogProbPair& v);
void from_json(const json& j, LogProbPair& v);
void to_json(json& j, const EmbeddedCaption& v);
void from_json(const json& j, EmbeddedCaption& v);
void to_json(json& j, const RunManifest& v);
void from_json(const json& j, RunManifest& v);

/// Canonical JSONL form: keys sorted, no insignificant whitespace, one line.
/// Serialization is a pure function of the record value, so equal records
/// serialize to identical bytes. Non-finite numbers are rejected.
std::string serialize_line(const json& value);

template <typename T>
std::string serialize_record(const T& record) {
    return serialize_line(json(record));
}

template <typename T>
T deserialize_record(const std::string& line) {
    return json::parse(line).get<T>();
}

// ---------------------------------------------------------------------------
// Dataset validation

enum class RecordType {
    auto_detect,
    object_label,
    image_record,
    benchmark_item,
    preference_sample,
    logprob_pair,
    embedded_caption,
};

struct Violation {
    std::size_t line = 0;  // 1-based
    std::string rule;
    std::string message;
};

struct ValidationReport {
    RecordType detected = RecordType::auto_detect;
    std::size_t records = 0;
    std::size_t valid = 0;
    std::size_t violation_count = 0;
    std::vector<Violation> first_violations;

    bool ok() const { return violation_count == 0; }
};

struct ValidateOptions {
    RecordType type = RecordType::auto_detect;
    bool benchmark_stage = false;  // enforce the >= 3 present-objects rule
    std::size_t max_reported = 20;
};

/// Checks every line of a JSONL artifact against the record invariants.
/// Malformed lines and invariant breaches are counted, never thrown.
ValidationReport validate_dataset(const std::string& path, const ValidateOptions& opts = {});

/// Invariant checks for a single raw JSON record; used by validate_dataset
/// and by tests. Returns rule/message pairs.
std::vector<Violation> check_record(const json& record, RecordType type,
                                    const ValidateOptions& opts);

/// Guesses the record type from characteristic fields; auto_detect when
/// nothing matches.
RecordType detect_record_type(const json& record);

std::string to_string(RecordType v);

}  // namespace halluforge
