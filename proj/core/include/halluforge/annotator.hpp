#pragma once

#include "halluforge/backends.hpp"

namespace halluforge {

enum class CandidateOrigin { coco, detector, adversarial_probe };

std::string to_string(CandidateOrigin v);
CandidateOrigin candidate_origin_from(std::string_view s);

struct CandidateObject {
    ObjectLabel object;
    CandidateOrigin origin = CandidateOrigin::coco;
};

void to_json(json& j, const CandidateObject& v);
void from_json(const json& j, CandidateObject& v);

enum class PresenceDecision { present, absent };
enum class VerifyPath { no_score, above_threshold, vqa_yes, vqa_no };

std::string to_string(VerifyPath v);

struct VerificationOutcome {
    ObjectLabel object;
    PresenceDecision decision = PresenceDecision::absent;
    VerifyPath path = VerifyPath::no_score;
    std::optional<double> score;
};

struct VerifyConfig {
    // The grounding service's own operating points; recorded so a manifest
    // pins the whole decision procedure, though only decision_threshold is
    // applied on this side of the wire.
    double text_threshold = 0.4;
    double box_threshold = 0.35;
    double decision_threshold = 0.6;
    double crop_pad = 0.1;  // box expansion per side before the VQA crop

    void check() const;
};

inline constexpr const char* kPresenceQuestionPrefix = "Is ";
inline constexpr const char* kPresenceQuestionSuffix = " present in the image?";

/// Two-stage presence check for one object:
///   no grounding score            -> absent  (no-score)
///   score >= decision_threshold   -> present (above-threshold), no VQA call
///   otherwise                     -> ask the VQA model about the padded
///                                    crop with the full-image caption;
///                                    "yes" -> present, anything else absent
VerificationOutcome verify_object(GroundingBackend& grounding, VqaBackend& vqa,
                                  const std::string& image_ref, const std::string& caption,
                                  const ObjectLabel& object, const VerifyConfig& cfg = {});

struct AnnotateResult {
    ImageRecord record;
    std::vector<VerificationOutcome> outcomes;  // candidate order
    std::vector<ObjectLabel> unverified;        // backend failures after one retry
    bool failed = false;                        // more than half unverified
};

/// Verifies every (deduplicated) candidate and splits them into the
/// record's present/absent sets. Unverifiable objects land in neither set,
/// since both sets feed gold answers. `jobs` bounds worker threads; results
/// are assembled in candidate order regardless.
AnnotateResult annotate_image(const BackendSet& backends, const ImageRecord& base,
                              const std::vector<CandidateObject>& candidates,
                              const VerifyConfig& cfg = {}, int jobs = 1);

}  // namespace halluforge
