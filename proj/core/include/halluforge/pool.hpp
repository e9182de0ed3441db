#pragma once

#include <functional>

#include "halluforge/datamodel.hpp"

namespace halluforge {

/// Farthest-point greedy K-center selection over caption embeddings.
/// The first center is drawn uniformly from the seed; every following pick
/// maximizes the minimum Euclidean distance to the chosen set, ties broken
/// by lowest id. Returns ids in selection order.
///
/// Runs in O(N*K) by keeping one min-distance per point and relaxing it
/// against each new center; for pools in the tens of thousands that beats
/// any heap bookkeeping.
std::vector<std::string> kcenter_select(const std::vector<EmbeddedCaption>& pool,
                                        std::size_t k, std::uint64_t seed);

/// Raw caption before embedding; the preference-data side filters these.
struct Caption {
    std::string id;
    std::string text;

    bool operator==(const Caption&) const = default;
};

void to_json(json& j, const Caption& v);
void from_json(const json& j, Caption& v);

struct CaptionQuality {
    double perplexity = 0.0;
    bool syntax_ok = false;
    int concrete_object_count = 0;
};

/// Scores one caption; real implementations call out to models, tests and
/// the CLI use precomputed fields. A throwing scorer drops the caption.
using QualityScorer = std::function<CaptionQuality(const Caption&)>;

struct CaptionAudit {
    std::string id;
    std::optional<CaptionQuality> quality;  // unset when the scorer failed
    bool retained = false;
    std::string drop_reason;                // empty when retained
};

struct FilterResult {
    std::vector<Caption> retained;  // input order preserved
    std::vector<CaptionAudit> audit;
};

/// Keeps captions with syntax_ok, perplexity <= max_perplexity and at least
/// min_concrete concrete objects. Scorer failures drop the caption with the
/// reason recorded; they never abort the batch.
FilterResult filter_captions(const std::vector<Caption>& captions,
                             const QualityScorer& scorer, double max_perplexity,
                             int min_concrete);

void to_json(json& j, const CaptionAudit& v);

}  // namespace halluforge
