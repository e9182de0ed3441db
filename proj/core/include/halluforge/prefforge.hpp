#pragma once

#include <map>
#include <optional>

#include "halluforge/backends.hpp"
#include "halluforge/datamodel.hpp"
#include "halluforge/rng.hpp"

namespace halluforge {

// ---------------------------------------------------------------------------
// Hint augmentation

enum class HintPolarity { correct, incorrect };

struct HintedInstruction {
    std::string base;
    std::string hint;
    HintPolarity polarity = HintPolarity::correct;
    std::string composed;  // base + " " + hint
};

HintedInstruction compose_hint(std::string base, std::string hint, HintPolarity polarity);

/// Stock hint phrasings. The slot is the normalized object name.
std::string absence_hint(const ObjectLabel& object);
std::string presence_hint(const ObjectLabel& object);

struct PairTexts {
    std::string chosen;
    std::string rejected;
};

/// Single-sided hint augmentation: exactly one response is generated under a
/// hint, the other is the model's unhinted answer to the plain query. A
/// correct hint steers the model toward the grounded answer, so its output is
/// the chosen text and the plain answer the rejected one; an incorrect hint
/// swaps the roles. Only `query` is ever stored as the instruction.
PairTexts build_pair_unilateral(VqaBackend& vqa, const std::string& image_ref,
                                const std::string& query, const HintedInstruction& hint);

/// Both responses hint-conditioned (correct hint -> chosen, incorrect ->
/// rejected), which keeps the two texts comparable in length.
PairTexts build_pair_contrastive(VqaBackend& vqa, const std::string& image_ref,
                                 const std::string& query,
                                 const HintedInstruction& hint_correct,
                                 const HintedInstruction& hint_incorrect);

// ---------------------------------------------------------------------------
// Post-hoc hallucination injection

inline constexpr char kPrefixSlot[] = "{adversary object}";

/// The ten hallucination-inducing prefix templates, each with one
/// `{adversary object}` slot.
const std::vector<std::string>& default_prefix_bank();

std::string instantiate_prefix(const std::string& entry, const ObjectLabel& adversary);

struct InjectionPlan {
    std::vector<std::string> sentences;
    std::size_t chosen_index = 0;  // sentence replaced by the prefix
    std::string prefix;            // instantiated bank entry
};

/// Picks the injection point: sentence i is chosen with probability
/// (i+1) / sum(j+1), so later sentences are proportionally more likely,
/// then a bank entry is drawn uniformly. Empty description is a
/// precondition error; callers skip those pairs before planning.
InjectionPlan plan_injection(const std::string& description,
                             const std::vector<std::string>& bank,
                             const ObjectLabel& absent_object, Rng& rng);

struct PairOutcome {
    std::optional<PairTexts> texts;
    std::string skip_reason;  // set iff texts is empty
};

/// chosen = the model's own description; rejected = the description re-rolled
/// from a truncated copy whose tail sentence was swapped for a hallucinated
/// prefix, letting the model complete the lie in its own words.
PairOutcome build_pair_posthoc(VqaBackend& vqa, const std::string& image_ref,
                               const std::string& query, const ObjectLabel& absent_object,
                               const std::vector<std::string>& bank, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Model-assisted answer inversion

/// Substrings whose presence marks a response as denying the object outright
/// rather than mis-attributing it.
const std::vector<std::string>& default_denial_phrases();

/// chosen = the grounded answer; rejected = a judge-written variant that keeps
/// the object but flips its attributes. Echoes of the correct answer and
/// outright denials are skipped, as are judge replies that stay unparseable
/// after one repair.
PairOutcome build_pair_inversion(
    JudgeBackend& judge, const std::string& query, const std::string& correct_answer,
    const std::vector<std::string>& denial_phrases = default_denial_phrases());

// ---------------------------------------------------------------------------
// Embedding-distance filter

inline constexpr double kDefaultFilterThreshold = 0.9;
inline constexpr double kPosthocDescriptionFilterThreshold = 0.95;

struct FilterDecision {
    bool keep = false;
    double distance = 0.0;  // 1 - cosine similarity
};

/// keep iff 1 - cos(embed(chosen), embed(rejected)) exceeds the threshold
/// strictly. threshold must lie in [0, 2].
FilterDecision filter_pair(EmbedBackend& embed, const std::string& chosen,
                           const std::string& rejected, double threshold);

// ---------------------------------------------------------------------------
// Semantic-gap weighting

inline constexpr int kWeightFallback = 2;

/// Asks the judge for a 1..3 semantic-gap score per sample; unparseable or
/// unreachable judges yield the fallback score with weight_fallback set.
void judge_weights(std::vector<PreferenceSample>& samples, JudgeBackend& judge,
                   int fallback = kWeightFallback);

/// norm_weight = weight / mean(weight over the sample's task subset).
void normalize_weights(std::vector<PreferenceSample>& samples);

/// judge_weights followed by normalize_weights.
void assign_weights(std::vector<PreferenceSample>& samples, JudgeBackend& judge,
                    int fallback = kWeightFallback);

// ---------------------------------------------------------------------------
// Composition

/// Scales `ratio` to `total` with largest-remainder rounding; remainder ties
/// resolve in index order.
std::vector<std::size_t> largest_remainder_quotas(std::size_t total,
                                                  const std::vector<std::size_t>& ratio);

inline constexpr std::array<std::size_t, 5> kDefaultCompositionRatio = {5, 5, 6, 9, 5};

struct CompositionPlan {
    // Task order: cpq, tpq, pope, description, attribute.
    std::array<std::size_t, 5> task_quota{};
    // Description strategies: unilateral, contrastive, posthoc.
    std::array<std::size_t, 3> description_split{};
};

CompositionPlan plan_composition(std::size_t total, const std::array<std::size_t, 5>& ratio);

/// Draws each task's quota from its pool without replacement (the description
/// quota is drawn per strategy third) and returns the union sorted by
/// (task, id). A pool smaller than its quota is an error naming the pool.
std::vector<PreferenceSample> compose_dataset(const std::vector<PreferenceSample>& pool,
                                              std::size_t total,
                                              const std::array<std::size_t, 5>& ratio,
                                              std::uint64_t seed);

}  // namespace halluforge
