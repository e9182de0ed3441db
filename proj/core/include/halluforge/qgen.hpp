#pragma once

#include <map>

#include "halluforge/backends.hpp"

namespace halluforge {

inline constexpr const char* kQuestionSlot = "{object}";
inline constexpr const char* kRecognitionSuffix = "Please just answer yes or no.";

/// Ordered recognition-question templates, each with exactly one {object}
/// slot. The default set is the seven shipped phrasings.
class TemplateSet {
public:
    static TemplateSet defaults();

    /// One template per line; blank lines ignored. A template without
    /// exactly one slot is a config error.
    static TemplateSet from_lines(const std::vector<std::string>& lines);

    const std::vector<std::string>& templates() const { return templates_; }

private:
    std::vector<std::string> templates_;
};

/// Builds one templated yes/no question for the object. The template is a
/// uniform seeded draw; the gold answer follows the kind (yes for rec_pos,
/// no for rec_rnd/rec_adv). kind=adp is a precondition error here.
QuestionRecord make_recognition_question(const ObjectLabel& object, QuestionKind kind,
                                         const TemplateSet& templates, std::uint64_t seed);

/// Previously emitted presupposition questions per adversarial object,
/// normalized; the judge receives them as a skip-list and we reject exact
/// repeats ourselves.
class PresupDedupLog {
public:
    const std::vector<std::string>& entries(const ObjectLabel& object) const;
    bool contains(const ObjectLabel& object, const std::string& question) const;
    void append(const ObjectLabel& object, const std::string& question);

private:
    std::map<ObjectLabel, std::vector<std::string>> log_;
};

struct PresupResult {
    std::optional<QuestionRecord> question;  // unset ⇒ image excluded from the subset
    std::string failure_reason;              // set when question is unset
    int attempts = 0;
};

/// Asks the judge for an adversarial presupposition question and validates
/// it: the object name must appear verbatim (after normalization), the
/// question must not open with "Where", "How many" or "Is there", and must
/// not repeat a dedup entry. One regeneration with the failure reason fed
/// back; after that the image is excluded rather than given a bad question.
PresupResult make_presup_question(JudgeBackend& judge, const std::string& caption,
                                  const ObjectLabel& adversarial, const ObjectSet& present,
                                  PresupDedupLog& dedup);

}  // namespace halluforge
