#include "halluforge/annotator.hpp"

#include <atomic>
#include <thread>

#include "halluforge/text.hpp"

namespace halluforge {

std::string to_string(CandidateOrigin v) {
    switch (v) {
        case CandidateOrigin::coco: return "coco";
        case CandidateOrigin::detector: return "detector";
        case CandidateOrigin::adversarial_probe: return "adversarial-probe";
    }
    fail(ErrorCode::serialization, "bad CandidateOrigin value");
}

CandidateOrigin candidate_origin_from(std::string_view s) {
    if (s == "coco") return CandidateOrigin::coco;
    if (s == "detector") return CandidateOrigin::detector;
    if (s == "adversarial-probe") return CandidateOrigin::adversarial_probe;
    fail(ErrorCode::serialization, "unknown candidate origin '" + std::string(s) + "'");
}

void to_json(json& j, const CandidateObject& v) {
    j = json{{"object", v.object.name()}, {"origin", to_string(v.origin)}};
}

void from_json(const json& j, CandidateObject& v) {
    v.object = ObjectLabel(j.at("object").get<std::string>());
    v.origin = candidate_origin_from(j.at("origin").get<std::string>());
}

std::string to_string(VerifyPath v) {
    switch (v) {
        case VerifyPath::no_score: return "no-score";
        case VerifyPath::above_threshold: return "above-threshold";
        case VerifyPath::vqa_yes: return "vqa-yes";
        case VerifyPath::vqa_no: return "vqa-no";
    }
    fail(ErrorCode::serialization, "bad VerifyPath value");
}

void VerifyConfig::check() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    require(in_unit(text_threshold) && in_unit(box_threshold) && in_unit(decision_threshold),
            ErrorCode::precondition, "verification thresholds must be in (0,1)");
    require(crop_pad >= 0.0, ErrorCode::precondition, "crop_pad must be non-negative");
}

VerificationOutcome verify_object(GroundingBackend& grounding, VqaBackend& vqa,
                                  const std::string& image_ref, const std::string& caption,
                                  const ObjectLabel& object, const VerifyConfig& cfg) {
    cfg.check();
    require(!object.empty(), ErrorCode::precondition, "cannot verify an empty label");

    VerificationOutcome out;
    out.object = object;

    GroundingResult g = grounding.ground(image_ref, object);
    if (!g.score) {
        out.decision = PresenceDecision::absent;
        out.path = VerifyPath::no_score;
        return out;
    }
    out.score = *g.score;
    if (*g.score >= cfg.decision_threshold) {
        out.decision = PresenceDecision::present;
        out.path = VerifyPath::above_threshold;
        return out;
    }

    VqaQuery query;
    query.image_ref = image_ref;
    query.question = kPresenceQuestionPrefix + object.name() + kPresenceQuestionSuffix;
    if (g.box) query.region = pad_box(*g.box, cfg.crop_pad);
    if (!caption.empty()) query.caption = caption;
    std::string answer = vqa.ask(query);
    if (text::parses_as_yes(answer)) {
        out.decision = PresenceDecision::present;
        out.path = VerifyPath::vqa_yes;
    } else {
        out.decision = PresenceDecision::absent;
        out.path = VerifyPath::vqa_no;
    }
    return out;
}

namespace {

std::vector<CandidateObject> dedup_candidates(const std::vector<CandidateObject>& in) {
    std::vector<CandidateObject> out;
    std::set<ObjectLabel> seen;
    for (const auto& c : in) {
        if (c.object.empty()) continue;
        if (seen.insert(c.object).second) out.push_back(c);
    }
    return out;
}

}  // namespace

AnnotateResult annotate_image(const BackendSet& backends, const ImageRecord& base,
                              const std::vector<CandidateObject>& candidates,
                              const VerifyConfig& cfg, int jobs) {
    cfg.check();
    require(jobs >= 1, ErrorCode::precondition, "jobs must be >= 1");

    AnnotateResult result;
    result.record = base;
    result.record.present_objects.clear();
    result.record.absent_verified.clear();

    const auto work = dedup_candidates(candidates);
    std::vector<std::optional<VerificationOutcome>> slots(work.size());
    std::vector<std::optional<ObjectLabel>> failures(work.size());

    auto verify_one = [&](std::size_t idx) {
        const auto& cand = work[idx];
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                slots[idx] = verify_object(*backends.grounding, *backends.vqa, base.id,
                                           base.caption, cand.object, cfg);
                return;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::backend_unavailable) throw;
            }
        }
        failures[idx] = cand.object;
    };

    if (jobs == 1 || work.size() <= 1) {
        for (std::size_t i = 0; i < work.size(); ++i) verify_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::size_t n_threads = std::min<std::size_t>(jobs, work.size());
        std::vector<std::exception_ptr> errors(n_threads);
        auto worker = [&](std::size_t slot) {
            try {
                for (std::size_t i = next.fetch_add(1); i < work.size(); i = next.fetch_add(1))
                    verify_one(i);
            } catch (...) {
                errors[slot] = std::current_exception();
            }
        };
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker, t);
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (std::size_t i = 0; i < work.size(); ++i) {
        if (failures[i]) {
            result.unverified.push_back(*failures[i]);
            continue;
        }
        const auto& outcome = *slots[i];
        result.outcomes.push_back(outcome);
        if (outcome.decision == PresenceDecision::present)
            result.record.present_objects.insert(outcome.object);
        else
            result.record.absent_verified.insert(outcome.object);
    }
    result.failed = !work.empty() && result.unverified.size() * 2 > work.size();
    return result;
}

}  // namespace halluforge
