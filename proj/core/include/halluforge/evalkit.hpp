#pragma once

#include <map>

#include "halluforge/backends.hpp"
#include "halluforge/datamodel.hpp"

namespace halluforge {

struct ResponseRecord {
    std::string question_id;
    std::string model_name;
    std::string text;

    bool operator==(const ResponseRecord&) const = default;
};

void to_json(json& j, const ResponseRecord& v);
void from_json(const json& j, ResponseRecord& v);

struct ItemVerdict {
    std::string id;
    bool correct = false;
    std::string note;
};

struct MetricReport {
    std::string metric;
    double value = 0.0;  // percent for accuracy metrics, [0,1] for CHAIR
    std::size_t n = 0;
    std::vector<ItemVerdict> verdicts;
    std::string config_digest;
    bool partial = false;  // set when scoring aborted mid-way (backend loss)
};

void to_json(json& j, const ItemVerdict& v);
void to_json(json& j, const MetricReport& v);

// ---------------------------------------------------------------------------
// Recognition accuracies

struct RecognitionScores {
    MetricReport rec_pos;
    MetricReport rec_rnd;
    MetricReport rec_adv;
};

/// Yes/no accuracy per recognition kind. Responses parse by their first
/// alphabetic token; anything that is not "yes" reads as a no-answer, and a
/// missing response counts incorrect with a flag in its verdict note.
RecognitionScores score_recognition(const std::vector<ResponseRecord>& responses,
                                    const std::vector<BenchmarkItem>& gold);

// ---------------------------------------------------------------------------
// Adversary presupposition

/// Percent of presupposition responses the judge marks as rejecting the
/// planted object. Judge parse failures credit nothing (the response is
/// scored as maintaining the presupposition). An unreachable judge aborts
/// scoring and returns the partial report.
MetricReport score_adp(const std::vector<ResponseRecord>& responses,
                       const std::vector<BenchmarkItem>& gold, JudgeBackend& judge);

// ---------------------------------------------------------------------------
// Caption hallucination rates

/// word/phrase -> canonical object name; longest phrase wins at each
/// position and matches are whole-word on normalized text.
using SynonymMap = std::map<std::string, std::string>;

struct ChairScores {
    MetricReport chair_s;  // fraction of sentences with a hallucinated mention
    MetricReport chair_i;  // fraction of mentions that are hallucinated
};

struct CaptionGold {
    std::string image_id;
    std::string caption;
    ObjectSet present;
};

ChairScores score_chair(const std::vector<CaptionGold>& captions, const SynonymMap& synonyms);

// ---------------------------------------------------------------------------
// External benchmark aggregates

struct GroupedVerdict {
    std::string item_id;
    std::string question_id;  // group of instances forming one question
    std::string figure_id;    // group of instances sharing one figure
    bool correct = false;
};

/// aAcc + qAcc + fAcc, each in percent. A question or figure counts only when
/// every instance inside it is correct. Items with an empty group id are a
/// config error.
double aggregate_hallusion(const std::vector<GroupedVerdict>& items);

struct PairedVerdict {
    std::string image_id;
    bool correct = false;
};

/// accuracy + accuracy_plus, each in percent; accuracy_plus requires both
/// questions of an image to be correct. Any image without exactly two
/// questions is a config error.
double aggregate_mme(const std::vector<PairedVerdict>& questions);

// ---------------------------------------------------------------------------
// Contextual-presence scoring

struct PresenceQuery {
    std::string id;
    TaskType task = TaskType::cpq;  // cpq (absent object) or tpq (present)
    std::string question;
    std::string answer;  // model response under evaluation
};

struct PresenceScores {
    MetricReport accuracy;  // percent of queries credited
    double f1 = 0.0;        // over presence predictions (tpq = positive class)
};

/// judge(cpbench_presence) per query; CPQ is credited when the answer is
/// judged not to claim the object, TPQ when it is. Parse failures after
/// repair count as present = true.
PresenceScores score_presence(const std::vector<PresenceQuery>& queries, JudgeBackend& judge);

}  // namespace halluforge
