#include "halluforge/qgen.hpp"

#include "halluforge/rng.hpp"
#include "halluforge/text.hpp"

namespace halluforge {

TemplateSet TemplateSet::defaults() {
    return from_lines({
        "Is there a {object} in the image?",
        "Can you find a {object} in this image?",
        "Is a {object} present in the image?",
        "Could this image include a {object}?",
        "Do you see a {object} in the picture?",
        "Does the image contain a {object}?",
        "Would you say there's a {object} visible?",
    });
}

TemplateSet TemplateSet::from_lines(const std::vector<std::string>& lines) {
    TemplateSet set;
    for (const auto& raw : lines) {
        std::string line = text::trim(raw);
        if (line.empty()) continue;
        std::size_t slots = text::count_occurrences(line, kQuestionSlot);
        require(slots == 1, ErrorCode::config,
                "template must contain the " + std::string(kQuestionSlot) +
                    " slot exactly once: '" + line + "'");
        set.templates_.push_back(std::move(line));
    }
    require(!set.templates_.empty(), ErrorCode::config, "template set is empty");
    return set;
}

QuestionRecord make_recognition_question(const ObjectLabel& object, QuestionKind kind,
                                         const TemplateSet& templates, std::uint64_t seed) {
    require(kind != QuestionKind::adp, ErrorCode::precondition,
            "presupposition questions are judge-generated, not templated");
    require(!object.empty(), ErrorCode::precondition, "question object is empty");

    Rng rng(seed);
    const auto& pool = templates.templates();
    const std::string& tmpl = pool[static_cast<std::size_t>(uniform_below(rng, pool.size()))];

    QuestionRecord q;
    q.text = text::substitute(tmpl, kQuestionSlot, object.name()) + " " + kRecognitionSuffix;
    q.kind = kind;
    q.target_object = object;
    q.gold = kind == QuestionKind::rec_pos ? GoldAnswer::yes : GoldAnswer::no;
    return q;
}

const std::vector<std::string>& PresupDedupLog::entries(const ObjectLabel& object) const {
    static const std::vector<std::string> kEmpty;
    auto it = log_.find(object);
    return it == log_.end() ? kEmpty : it->second;
}

bool PresupDedupLog::contains(const ObjectLabel& object, const std::string& question) const {
    std::string norm = text::normalize_label(question);
    for (const auto& entry : entries(object))
        if (entry == norm) return true;
    return false;
}

void PresupDedupLog::append(const ObjectLabel& object, const std::string& question) {
    log_[object].push_back(text::normalize_label(question));
}

namespace {

/// Empty string means valid; otherwise the reason fed back to the judge.
std::string validate_presup(const std::string& question, const ObjectLabel& adversarial,
                            const PresupDedupLog& dedup) {
    std::string q = text::trim(question);
    if (q.empty()) return "question is empty";
    if (!text::contains_normalized(q, adversarial.name()))
        return "question must contain '" + adversarial.name() + "' verbatim";
    for (const char* banned : {"Where", "How many", "Is there"})
        if (text::starts_with_ci(q, banned))
            return std::string("question must not start with '") + banned + "'";
    if (dedup.contains(adversarial, q)) return "question repeats an earlier one";
    return "";
}

}  // namespace

PresupResult make_presup_question(JudgeBackend& judge, const std::string& caption,
                                  const ObjectLabel& adversarial, const ObjectSet& present,
                                  PresupDedupLog& dedup) {
    require(!adversarial.empty(), ErrorCode::precondition, "adversarial object is empty");

    json payload;
    payload["caption"] = caption;
    payload["adversarial"] = adversarial.name();
    json present_names = json::array();
    for (const auto& p : present) present_names.push_back(p.name());
    payload["present"] = std::move(present_names);
    json skip = json::array();
    for (const auto& prior : dedup.entries(adversarial)) skip.push_back(prior);
    payload["skip"] = std::move(skip);

    PresupResult result;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ++result.attempts;
        JudgeVerdict verdict;
        try {
            verdict = judge_with_repair(judge, JudgeKind::question_gen, payload);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::judge_parse) throw;
            result.failure_reason = e.what();
            payload["feedback"] = "previous reply was unparseable";
            continue;
        }
        if (verdict.skip) {
            // The judge found no natural question; that is a final answer,
            // not a defect to retry.
            result.failure_reason = "judge declined to generate a question";
            return result;
        }
        std::string reason = validate_presup(*verdict.text, adversarial, dedup);
        if (reason.empty()) {
            std::string q = text::trim(*verdict.text);
            dedup.append(adversarial, q);
            QuestionRecord record;
            record.text = std::move(q);
            record.kind = QuestionKind::adp;
            record.target_object = adversarial;
            record.gold = GoldAnswer::absent_object;
            result.question = std::move(record);
            result.failure_reason.clear();
            return result;
        }
        result.failure_reason = reason;
        payload["feedback"] = reason;
    }
    return result;
}

}  // namespace halluforge
