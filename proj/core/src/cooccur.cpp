#include "halluforge/cooccur.hpp"

#include <algorithm>
#include <cmath>

#include "halluforge/rng.hpp"

namespace halluforge {

namespace {

std::pair<ObjectLabel, ObjectLabel> pair_key(const ObjectLabel& a, const ObjectLabel& b) {
    return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

CooccurrenceModel CooccurrenceModel::build(const std::vector<ImageRecord>& records) {
    require(!records.empty(), ErrorCode::precondition, "no records to build model from");
    CooccurrenceModel m;
    m.image_count_ = records.size();
    for (const auto& rec : records) {
        for (auto it = rec.present_objects.begin(); it != rec.present_objects.end(); ++it) {
            ++m.marginal_[*it];
            for (auto jt = std::next(it); jt != rec.present_objects.end(); ++jt)
                ++m.pairs_[pair_key(*it, *jt)];
        }
    }
    m.vocab_.reserve(m.marginal_.size());
    for (const auto& [label, count] : m.marginal_) m.vocab_.push_back(label);
    return m;  // std::map iteration already gives lexicographic vocab order
}

std::size_t CooccurrenceModel::marginal(const ObjectLabel& o) const {
    auto it = marginal_.find(o);
    if (it == marginal_.end())
        fail(ErrorCode::lookup, "object '" + o.name() + "' not in co-occurrence vocabulary");
    return it->second;
}

std::size_t CooccurrenceModel::pair_count(const ObjectLabel& a, const ObjectLabel& b) const {
    marginal(a);  // membership checks
    marginal(b);
    auto it = pairs_.find(pair_key(a, b));
    return it == pairs_.end() ? 0 : it->second;
}

double CooccurrenceModel::pmi(const ObjectLabel& a, const ObjectLabel& b) const {
    std::size_t c_a = marginal(a);
    std::size_t c_b = marginal(b);
    std::size_t c_ab = pair_count(a, b);
    if (c_ab == 0) return 0.0;
    // ln((c_ab/N) / ((c_a/N)(c_b/N))) folded to one log for accuracy.
    return std::log(static_cast<double>(c_ab) * static_cast<double>(image_count_) /
                    (static_cast<double>(c_a) * static_cast<double>(c_b)));
}

std::vector<json> CooccurrenceModel::dump() const {
    std::vector<json> lines;
    lines.push_back(json{{"image_count", image_count_}});
    for (const auto& [label, count] : marginal_)
        lines.push_back(json{{"object", label.name()}, {"count", count}});
    for (const auto& [key, count] : pairs_)
        lines.push_back(json{{"a", key.first.name()}, {"b", key.second.name()}, {"count", count}});
    return lines;
}

CooccurrenceModel CooccurrenceModel::load(const std::vector<json>& lines) {
    CooccurrenceModel m;
    bool have_total = false;
    for (const auto& line : lines) {
        if (line.contains("image_count")) {
            m.image_count_ = line["image_count"].get<std::size_t>();
            have_total = true;
        } else if (line.contains("object")) {
            m.marginal_[ObjectLabel(line["object"].get<std::string>())] =
                line["count"].get<std::size_t>();
        } else if (line.contains("a")) {
            m.pairs_[pair_key(ObjectLabel(line["a"].get<std::string>()),
                              ObjectLabel(line["b"].get<std::string>()))] =
                line["count"].get<std::size_t>();
        } else {
            fail(ErrorCode::serialization, "unrecognized model line: " + serialize_line(line));
        }
    }
    require(have_total && m.image_count_ > 0, ErrorCode::serialization,
            "model dump lacks image_count");
    for (const auto& [label, count] : m.marginal_) m.vocab_.push_back(label);
    return m;
}

double score_candidate(const CooccurrenceModel& model, const ObjectSet& scene,
                       const ObjectLabel& candidate, bool clamp) {
    require(scene.count(candidate) == 0, ErrorCode::precondition,
            "candidate '" + candidate.name() + "' is already in the scene");
    double score = 0.0;
    for (const auto& obj : scene) {
        double p = model.pmi(candidate, obj);
        score += clamp ? std::max(p, 0.0) : p;
    }
    return score;
}

TripleAssignment assign_triple(const CooccurrenceModel& model, const ImageRecord& record,
                               const PresenceCheck& verify_present, std::size_t top_k,
                               std::uint64_t seed, bool clamp) {
    require(record.present_objects.size() >= 3, ErrorCode::precondition,
            "image '" + record.id + "' has fewer than 3 present objects");
    require(top_k >= 1, ErrorCode::precondition, "top_k must be >= 1");

    AdversarialRanking ranking;
    ranking.image_id = record.id;

    std::vector<RankedCandidate> all;
    for (const auto& label : model.vocab()) {
        if (record.present_objects.count(label)) continue;
        all.push_back({label, score_candidate(model, record.present_objects, label, clamp)});
    }
    std::stable_sort(all.begin(), all.end(), [](const RankedCandidate& x, const RankedCandidate& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.object < y.object;
    });
    if (all.size() > top_k) all.resize(top_k);
    ranking.ranked = all;

    for (const auto& cand : ranking.ranked) {
        if (verify_present(cand.object)) {
            ranking.verified_rejections.push_back(cand.object);
            continue;
        }
        ranking.chosen_adversarial = cand.object;
        break;
    }
    if (!ranking.chosen_adversarial)
        fail(ErrorCode::triple_failure,
             "image '" + record.id + "': all top-" + std::to_string(ranking.ranked.size()) +
                 " candidates verified present");
    const ObjectLabel& adversarial = *ranking.chosen_adversarial;

    // Scene partner: the present object the adversary most co-occurs with.
    const ObjectLabel* partner = nullptr;
    double best = 0.0;
    for (const auto& p : record.present_objects) {
        double v = model.pmi(p, adversarial);
        if (!partner || v > best || (v == best && p < *partner)) {
            partner = &p;
            best = v;
        }
    }

    std::vector<ObjectLabel> random_pool;
    for (const auto& label : model.vocab()) {
        if (record.present_objects.count(label) || label == adversarial) continue;
        random_pool.push_back(label);
    }
    if (random_pool.empty())
        fail(ErrorCode::triple_failure,
             "image '" + record.id + "': vocabulary exhausted for random object");
    Rng rng(seed);
    const ObjectLabel& random_obj =
        random_pool[static_cast<std::size_t>(uniform_below(rng, random_pool.size()))];

    TripleAssignment out;
    out.triple = ObjectTriple{*partner, random_obj, adversarial};
    out.ranking = std::move(ranking);
    return out;
}

void to_json(json& j, const AdversarialRanking& v) {
    json ranked = json::array();
    for (const auto& rc : v.ranked)
        ranked.push_back(json{{"object", rc.object.name()}, {"score", rc.score}});
    json rejections = json::array();
    for (const auto& r : v.verified_rejections) rejections.push_back(r.name());
    j = json{{"image_id", v.image_id},
             {"ranked", std::move(ranked)},
             {"verified_rejections", std::move(rejections)}};
    if (v.chosen_adversarial) j["chosen_adversarial"] = v.chosen_adversarial->name();
}

}  // namespace halluforge
