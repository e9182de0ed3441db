#include "halluforge/pool.hpp"

#include <limits>

#include "halluforge/rng.hpp"
#include "halluforge/vecmath.hpp"

namespace halluforge {

std::vector<std::string> kcenter_select(const std::vector<EmbeddedCaption>& pool,
                                        std::size_t k, std::uint64_t seed) {
    const std::size_t n = pool.size();
    require(n > 0, ErrorCode::precondition, "caption pool is empty");
    require(k >= 1 && k <= n, ErrorCode::precondition,
            "K must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
    const std::size_t dim = pool.front().vector.size();
    require(dim > 0, ErrorCode::precondition, "embedding vectors are empty");
    for (const auto& c : pool)
        require(c.vector.size() == dim, ErrorCode::precondition,
                "embedding dimension mismatch at id '" + c.id + "'");

    Rng rng(seed);
    std::size_t start = static_cast<std::size_t>(uniform_below(rng, n));

    std::vector<std::string> order;
    order.reserve(k);
    order.push_back(pool[start].id);

    // min_d2[i] = squared distance from point i to the closest chosen center.
    // Squared distances preserve the argmax and skip N*K square roots.
    std::vector<double> min_d2(n);
    std::vector<char> taken(n, 0);
    taken[start] = 1;
    for (std::size_t i = 0; i < n; ++i)
        min_d2[i] = euclidean_sq(pool[i].vector, pool[start].vector);

    for (std::size_t round = 1; round < k; ++round) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            if (best == n || min_d2[i] > min_d2[best] ||
                (min_d2[i] == min_d2[best] && pool[i].id < pool[best].id))
                best = i;
        }
        taken[best] = 1;
        order.push_back(pool[best].id);
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            double d2 = euclidean_sq(pool[i].vector, pool[best].vector);
            if (d2 < min_d2[i]) min_d2[i] = d2;
        }
    }
    return order;
}

void to_json(json& j, const Caption& v) { j = json{{"id", v.id}, {"text", v.text}}; }

void from_json(const json& j, Caption& v) {
    v.id = j.at("id").get<std::string>();
    v.text = j.at("text").get<std::string>();
}

FilterResult filter_captions(const std::vector<Caption>& captions,
                             const QualityScorer& scorer, double max_perplexity,
                             int min_concrete) {
    require(static_cast<bool>(scorer), ErrorCode::precondition, "no quality scorer configured");
    FilterResult out;
    for (const auto& caption : captions) {
        CaptionAudit audit;
        audit.id = caption.id;
        CaptionQuality q;
        try {
            q = scorer(caption);
        } catch (const std::exception& e) {
            audit.drop_reason = std::string("scorer failure: ") + e.what();
            out.audit.push_back(std::move(audit));
            continue;
        }
        audit.quality = q;
        if (!std::isfinite(q.perplexity)) {
            audit.drop_reason = "perplexity not finite";
        } else if (!q.syntax_ok) {
            audit.drop_reason = "syntax check failed";
        } else if (q.perplexity > max_perplexity) {
            audit.drop_reason = "perplexity above threshold";
        } else if (q.concrete_object_count < min_concrete) {
            audit.drop_reason = "too few concrete objects";
        } else {
            audit.retained = true;
            out.retained.push_back(caption);
        }
        out.audit.push_back(std::move(audit));
    }
    return out;
}

void to_json(json& j, const CaptionAudit& v) {
    j = json{{"id", v.id}, {"retained", v.retained}};
    if (v.quality) {
        j["perplexity"] = v.quality->perplexity;
        j["syntax_ok"] = v.quality->syntax_ok;
        j["concrete_object_count"] = v.quality->concrete_object_count;
    }
    if (!v.drop_reason.empty()) j["drop_reason"] = v.drop_reason;
}

}  // namespace halluforge
