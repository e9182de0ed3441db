#pragma once

#include <functional>
#include <map>

#include "halluforge/datamodel.hpp"

namespace halluforge {

/// Object co-occurrence statistics over verified present-object sets.
/// Counts are image-level set membership, so repeats inside one image do
/// not inflate anything.
class CooccurrenceModel {
public:
    static CooccurrenceModel build(const std::vector<ImageRecord>& records);

    const std::vector<ObjectLabel>& vocab() const { return vocab_; }
    std::size_t image_count() const { return image_count_; }
    bool contains(const ObjectLabel& o) const { return marginal_.count(o) != 0; }

    std::size_t marginal(const ObjectLabel& o) const;
    std::size_t pair_count(const ObjectLabel& a, const ObjectLabel& b) const;

    /// Pointwise mutual information, natural log:
    /// ln(P(a,b) / (P(a) P(b))) when the pair ever co-occurs, exactly 0
    /// otherwise. Symmetric. Unknown objects are a lookup error.
    double pmi(const ObjectLabel& a, const ObjectLabel& b) const;

    /// Counts as JSONL lines: one image_count line, one line per marginal,
    /// one per nonzero pair. load() inverts dump().
    std::vector<json> dump() const;
    static CooccurrenceModel load(const std::vector<json>& lines);

private:
    std::vector<ObjectLabel> vocab_;  // lexicographic
    std::size_t image_count_ = 0;
    std::map<ObjectLabel, std::size_t> marginal_;
    std::map<std::pair<ObjectLabel, ObjectLabel>, std::size_t> pairs_;  // key sorted
};

/// Scene-relatedness of a candidate: sum over scene objects of the clamped
/// PMI max(pmi, 0). `clamp=false` keeps negative terms (alternate reading
/// of the scoring rule; changes totals, can change ranks).
double score_candidate(const CooccurrenceModel& model, const ObjectSet& scene,
                       const ObjectLabel& candidate, bool clamp = true);

struct RankedCandidate {
    ObjectLabel object;
    double score = 0.0;
};

struct AdversarialRanking {
    std::string image_id;
    std::vector<RankedCandidate> ranked;       // score desc, name asc
    std::optional<ObjectLabel> chosen_adversarial;
    std::vector<ObjectLabel> verified_rejections;  // candidates that turned out present
};

struct TripleAssignment {
    ObjectTriple triple;
    AdversarialRanking ranking;
};

/// Presence verifier hook: returns true when the object is verified present
/// in the image. The pipeline binds this to the two-stage verifier; tests
/// pass closures.
using PresenceCheck = std::function<bool(const ObjectLabel&)>;

/// Assigns the (present, random, adversarial) triple for one image: ranks
/// the top_k highest-scoring candidates outside the scene, walks them in
/// rank order until one verifies absent (that one is adversarial), pairs it
/// with the present object of highest PMI, and draws the random object
/// uniformly from the remaining vocabulary.
///
/// Throws ErrorCode::triple_failure when every ranked candidate verifies
/// present or no random object remains; callers drop the image with reason.
TripleAssignment assign_triple(const CooccurrenceModel& model, const ImageRecord& record,
                               const PresenceCheck& verify_present, std::size_t top_k,
                               std::uint64_t seed, bool clamp = true);

void to_json(json& j, const AdversarialRanking& v);

}  // namespace halluforge
