#include "halluforge/prefforge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "halluforge/errors.hpp"
#include "halluforge/text.hpp"
#include "halluforge/vecmath.hpp"

namespace halluforge {

HintedInstruction compose_hint(std::string base, std::string hint, HintPolarity polarity) {
    require(!base.empty(), ErrorCode::precondition, "hint base query must not be empty");
    require(!hint.empty(), ErrorCode::precondition, "hint text must not be empty");
    HintedInstruction out;
    out.composed = base + " " + hint;
    out.base = std::move(base);
    out.hint = std::move(hint);
    out.polarity = polarity;
    return out;
}

std::string absence_hint(const ObjectLabel& object) {
    return "Note: there is no " + object.name() + " in the image.";
}

std::string presence_hint(const ObjectLabel& object) {
    return "Note: a " + object.name() + " is visible in the image.";
}

PairTexts build_pair_unilateral(VqaBackend& vqa, const std::string& image_ref,
                                const std::string& query, const HintedInstruction& hint) {
    require(!query.empty(), ErrorCode::precondition, "query must not be empty");
    require(hint.base == query, ErrorCode::precondition,
            "hint was composed for a different query");

    std::string plain = vqa.ask({image_ref, query, std::nullopt, std::nullopt});
    std::string hinted = vqa.ask({image_ref, hint.composed, std::nullopt, std::nullopt});

    if (hint.polarity == HintPolarity::correct) {
        return {hinted, plain};
    }
    return {plain, hinted};
}

PairTexts build_pair_contrastive(VqaBackend& vqa, const std::string& image_ref,
                                 const std::string& query,
                                 const HintedInstruction& hint_correct,
                                 const HintedInstruction& hint_incorrect) {
    require(!query.empty(), ErrorCode::precondition, "query must not be empty");
    require(hint_correct.polarity == HintPolarity::correct, ErrorCode::precondition,
            "first hint must be the correct-polarity one");
    require(hint_incorrect.polarity == HintPolarity::incorrect, ErrorCode::precondition,
            "second hint must be the incorrect-polarity one");
    require(hint_correct.base == query && hint_incorrect.base == query, ErrorCode::precondition,
            "hints were composed for a different query");

    PairTexts out;
    out.chosen = vqa.ask({image_ref, hint_correct.composed, std::nullopt, std::nullopt});
    out.rejected = vqa.ask({image_ref, hint_incorrect.composed, std::nullopt, std::nullopt});
    return out;
}

const std::vector<std::string>& default_prefix_bank() {
    static const std::vector<std::string> bank = {
        "The image shows {adversary object}.",
        "The scene includes {adversary object}.",
        "There is {adversary object} visible in the image.",
        "The picture features {adversary object}.",
        "In the image, {adversary object} can be seen.",
        "The photograph depicts {adversary object}.",
        "The view contains {adversary object}.",
        "The setting reveals {adversary object}.",
        "Visible in the image is {adversary object}.",
        "The composition highlights {adversary object}.",
    };
    return bank;
}

std::string instantiate_prefix(const std::string& entry, const ObjectLabel& adversary) {
    return text::substitute(entry, kPrefixSlot, adversary.name());
}

InjectionPlan plan_injection(const std::string& description,
                             const std::vector<std::string>& bank,
                             const ObjectLabel& absent_object, Rng& rng) {
    require(!bank.empty(), ErrorCode::precondition, "prefix bank must not be empty");

    InjectionPlan plan;
    plan.sentences = text::split_sentences(description);
    require(!plan.sentences.empty(), ErrorCode::precondition,
            "description splits into zero sentences");

    // Linear ramp: weight i+1 for sentence i.
    std::vector<std::uint64_t> weights(plan.sentences.size());
    std::iota(weights.begin(), weights.end(), std::uint64_t{1});
    plan.chosen_index = weighted_index(rng, weights);
    plan.prefix = instantiate_prefix(bank[uniform_below(rng, bank.size())], absent_object);
    return plan;
}

PairOutcome build_pair_posthoc(VqaBackend& vqa, const std::string& image_ref,
                               const std::string& query, const ObjectLabel& absent_object,
                               const std::vector<std::string>& bank, std::uint64_t seed) {
    require(!query.empty(), ErrorCode::precondition, "query must not be empty");

    std::string description = vqa.ask({image_ref, query, std::nullopt, std::nullopt});
    if (text::split_sentences(description).empty()) {
        return {std::nullopt, "empty description"};
    }

    Rng rng(seed);
    InjectionPlan plan = plan_injection(description, bank, absent_object, rng);

    // Keep everything before the injection point, swap in the prefix, and let
    // the model continue from there.
    std::string stub;
    for (std::size_t i = 0; i < plan.chosen_index; ++i) {
        stub += plan.sentences[i];
        stub += ' ';
    }
    stub += plan.prefix;

    std::string completion = vqa.ask({image_ref, stub, std::nullopt, std::nullopt});

    PairTexts texts;
    texts.chosen = description;
    texts.rejected = completion.empty() ? stub : stub + " " + completion;
    return {texts, ""};
}

const std::vector<std::string>& default_denial_phrases() {
    static const std::vector<std::string> phrases = {
        "is not visible",  "are not visible",  "not present",  "there is no",
        "there are no",    "cannot see",       "can't see",    "does not contain",
        "doesn't contain", "no such object",
    };
    return phrases;
}

PairOutcome build_pair_inversion(JudgeBackend& judge, const std::string& query,
                                 const std::string& correct_answer,
                                 const std::vector<std::string>& denial_phrases) {
    require(!query.empty(), ErrorCode::precondition, "query must not be empty");
    require(!correct_answer.empty(), ErrorCode::precondition,
            "correct answer must not be empty");

    json payload;
    payload["question"] = query;
    payload["answer"] = correct_answer;

    JudgeVerdict verdict;
    try {
        verdict = judge_with_repair(judge, JudgeKind::answer_inversion, payload);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::judge_parse) {
            return {std::nullopt, "judge reply unparseable after repair"};
        }
        throw;
    }

    const std::string& inverted = verdict.text.value_or("");
    if (text::normalize_label(inverted) == text::normalize_label(correct_answer)) {
        return {std::nullopt, "judge echoed the correct answer"};
    }
    for (const auto& phrase : denial_phrases) {
        if (text::contains_normalized(inverted, phrase)) {
            return {std::nullopt, "inverted answer denies the object ('" + phrase + "')"};
        }
    }

    return {PairTexts{correct_answer, inverted}, ""};
}

FilterDecision filter_pair(EmbedBackend& embed, const std::string& chosen,
                           const std::string& rejected, double threshold) {
    require(threshold >= 0.0 && threshold <= 2.0, ErrorCode::precondition,
            "distance threshold must lie in [0, 2]");

    std::vector<double> a = embed.embed(chosen);
    std::vector<double> b = embed.embed(rejected);

    FilterDecision out;
    out.distance = cosine_distance(a, b);
    out.keep = out.distance > threshold;
    return out;
}

void judge_weights(std::vector<PreferenceSample>& samples, JudgeBackend& judge, int fallback) {
    require(fallback >= 1 && fallback <= 3, ErrorCode::precondition,
            "fallback weight must be 1, 2 or 3");

    for (auto& s : samples) {
        require(!s.chosen.empty() && !s.rejected.empty(), ErrorCode::precondition,
                "sample '" + s.id + "' is missing chosen or rejected text");

        json payload;
        payload["chosen"] = s.chosen;
        payload["rejected"] = s.rejected;

        try {
            JudgeVerdict verdict = judge_with_repair(judge, JudgeKind::semantic_gap, payload);
            s.weight = verdict.score.value();
            s.weight_fallback = false;
            s.weight_judge_raw = verdict.raw;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::judge_parse) throw;
            s.weight = fallback;
            s.weight_fallback = true;
            s.weight_judge_raw = std::string(e.what());
        }
    }
}

void normalize_weights(std::vector<PreferenceSample>& samples) {
    std::map<TaskType, std::pair<double, std::size_t>> sums;
    for (const auto& s : samples) {
        if (!s.weight.has_value()) {
            fail(ErrorCode::precondition,
                 "sample '" + s.id + "' has no raw weight; judge weights first");
        }
        auto& [sum, n] = sums[s.task];
        sum += static_cast<double>(*s.weight);
        ++n;
    }
    for (auto& s : samples) {
        const auto& [sum, n] = sums[s.task];
        double mean = sum / static_cast<double>(n);
        s.norm_weight = static_cast<double>(*s.weight) / mean;
    }
}

void assign_weights(std::vector<PreferenceSample>& samples, JudgeBackend& judge, int fallback) {
    judge_weights(samples, judge, fallback);
    normalize_weights(samples);
}

std::vector<std::size_t> largest_remainder_quotas(std::size_t total,
                                                  const std::vector<std::size_t>& ratio) {
    require(!ratio.empty(), ErrorCode::precondition, "ratio must not be empty");
    std::size_t denom = std::accumulate(ratio.begin(), ratio.end(), std::size_t{0});
    require(denom > 0, ErrorCode::precondition, "ratio must not be all zeros");

    std::vector<std::size_t> quota(ratio.size());
    std::vector<std::pair<std::size_t, std::size_t>> rem;  // (remainder, index)
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratio.size(); ++i) {
        std::size_t num = total * ratio[i];
        quota[i] = num / denom;
        assigned += quota[i];
        rem.emplace_back(num % denom, i);
    }
    // Hand the leftover units to the largest remainders; ties go to the
    // earliest index so the result is order-stable.
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; k < total - assigned; ++k) {
        ++quota[rem[k].second];
    }
    return quota;
}

CompositionPlan plan_composition(std::size_t total, const std::array<std::size_t, 5>& ratio) {
    CompositionPlan plan;
    auto quota = largest_remainder_quotas(total, {ratio.begin(), ratio.end()});
    std::copy(quota.begin(), quota.end(), plan.task_quota.begin());

    // The description quota splits into three strategy thirds; any remainder
    // goes to the unilateral third.
    std::size_t desc = plan.task_quota[3];
    std::size_t third = desc / 3;
    plan.description_split = {third + desc % 3, third, third};
    return plan;
}

namespace {

std::vector<PreferenceSample> draw_from(const std::vector<const PreferenceSample*>& pool,
                                        std::size_t quota, const std::string& pool_name,
                                        Rng& rng) {
    if (pool.size() < quota) {
        fail(ErrorCode::pool_shortfall, "pool '" + pool_name + "' has " +
                                            std::to_string(pool.size()) + " samples but needs " +
                                            std::to_string(quota) + " (short by " +
                                            std::to_string(quota - pool.size()) + ")");
    }
    std::vector<std::size_t> picked = sample_without_replacement(rng, pool.size(), quota);
    std::vector<PreferenceSample> out;
    out.reserve(quota);
    for (std::size_t idx : picked) out.push_back(*pool[idx]);
    return out;
}

}  // namespace

std::vector<PreferenceSample> compose_dataset(const std::vector<PreferenceSample>& pool,
                                              std::size_t total,
                                              const std::array<std::size_t, 5>& ratio,
                                              std::uint64_t seed) {
    CompositionPlan plan = plan_composition(total, ratio);

    // Index the pool by task, and the description task further by strategy.
    std::map<std::string, std::vector<const PreferenceSample*>> buckets;
    for (const auto& s : pool) {
        if (s.task == TaskType::description) {
            buckets[to_string(s.task) + "/" + to_string(s.gen_strategy)].push_back(&s);
        } else {
            buckets[to_string(s.task)].push_back(&s);
        }
    }
    // Deterministic draw order within each bucket regardless of input order.
    for (auto& [name, bucket] : buckets) {
        std::sort(bucket.begin(), bucket.end(),
                  [](const PreferenceSample* a, const PreferenceSample* b) {
                      return a->id < b->id;
                  });
    }

    constexpr std::array<TaskType, 5> kTaskOrder = {TaskType::cpq, TaskType::tpq, TaskType::pope,
                                                    TaskType::description, TaskType::attribute};
    constexpr std::array<GenStrategy, 3> kDescStrategies = {
        GenStrategy::unilateral, GenStrategy::contrastive, GenStrategy::posthoc};

    std::vector<PreferenceSample> out;
    out.reserve(total);
    for (std::size_t t = 0; t < kTaskOrder.size(); ++t) {
        TaskType task = kTaskOrder[t];
        if (task == TaskType::description) {
            for (std::size_t k = 0; k < kDescStrategies.size(); ++k) {
                std::string name = to_string(task) + "/" + to_string(kDescStrategies[k]);
                Rng rng(derive_seed(seed, name));
                auto drawn = draw_from(buckets[name], plan.description_split[k], name, rng);
                out.insert(out.end(), drawn.begin(), drawn.end());
            }
        } else {
            std::string name = to_string(task);
            Rng rng(derive_seed(seed, name));
            auto drawn = draw_from(buckets[name], plan.task_quota[t], name, rng);
            out.insert(out.end(), drawn.begin(), drawn.end());
        }
    }

    std::sort(out.begin(), out.end(), [](const PreferenceSample& a, const PreferenceSample& b) {
        if (a.task != b.task) return a.task < b.task;
        return a.id < b.id;
    });

    std::vector<std::string> ids;
    ids.reserve(out.size());
    for (const auto& s : out) ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end()) {
        fail(ErrorCode::precondition, "duplicate sample id '" + *dup + "' in composition");
    }
    return out;
}

}  // namespace halluforge
