#include "halluforge/dpo.hpp"

#include <cmath>

#include "halluforge/errors.hpp"
#include "halluforge/jsonl.hpp"

namespace halluforge {

namespace {

/// softplus(x) = ln(1 + e^x) without overflow for large |x|.
double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

/// Logistic sigmoid, evaluated through exp of a non-positive argument only.
double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double require_finite(double v, const char* what, const std::string& id) {
    if (!std::isfinite(v)) {
        fail(ErrorCode::numeric, std::string(what) + " is not finite for sample '" + id + "'");
    }
    return v;
}

/// Pairwise (tree) sum: split in half recursively so the accumulated
/// rounding error grows like O(log n) instead of O(n), and the total is
/// independent of how callers chunked the input.
double tree_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    std::size_t n = hi - lo;
    if (n == 0) return 0.0;
    if (n == 1) return v[lo];
    if (n == 2) return v[lo] + v[lo + 1];
    std::size_t mid = lo + n / 2;
    return tree_sum(v, lo, mid) + tree_sum(v, mid, hi);
}

}  // namespace

DpoEval per_sample_loss(const LogProbPair& lp, double weight, const DpoConfig& cfg) {
    require(weight > 0.0, ErrorCode::precondition, "sample weight must be positive");
    require(cfg.beta > 0.0, ErrorCode::precondition, "beta must be positive");

    const std::string& id = lp.sample_id;
    require_finite(lp.logp_policy_chosen, "logp_policy_chosen", id);
    require_finite(lp.logp_policy_rejected, "logp_policy_rejected", id);
    require_finite(lp.logp_ref_chosen, "logp_ref_chosen", id);
    require_finite(lp.logp_ref_rejected, "logp_ref_rejected", id);

    DpoEval out;
    out.sample_id = id;
    out.r_w = lp.logp_policy_chosen - lp.logp_ref_chosen;
    out.r_l = lp.logp_policy_rejected - lp.logp_ref_rejected;
    out.margin = cfg.beta * (out.r_w - out.r_l);
    out.loss = weight * softplus(-out.margin);

    // d/dz [softplus(-z)] = -sigmoid(-z); z depends on the policy log-probs
    // with coefficients +beta (chosen) and -beta (rejected).
    double s = sigmoid(-out.margin);
    out.grad_logp_policy_chosen = -weight * cfg.beta * s;
    out.grad_logp_policy_rejected = weight * cfg.beta * s;

    require_finite(out.loss, "loss", id);
    return out;
}

void from_json(const json& j, WeightedPair& v) {
    v.lp = j.get<LogProbPair>();
    v.weight = j.value("weight", 1.0);
}

void to_json(json& j, const WeightedPair& v) {
    to_json(j, v.lp);
    j["weight"] = v.weight;
}

double batch_loss(const std::vector<WeightedPair>& pairs, const DpoConfig& cfg) {
    require(!pairs.empty(), ErrorCode::precondition, "batch_loss needs at least one pair");
    std::vector<double> losses;
    losses.reserve(pairs.size());
    for (const auto& p : pairs) {
        losses.push_back(per_sample_loss(p.lp, p.weight, cfg).loss);
    }
    double total = tree_sum(losses, 0, losses.size());
    if (cfg.reduction == Reduction::mean) {
        return total / static_cast<double>(losses.size());
    }
    return total;
}

double grad_check(const std::vector<WeightedPair>& pairs, const DpoConfig& cfg, double h) {
    require(!pairs.empty(), ErrorCode::precondition, "grad_check needs at least one pair");
    require(h > 0.0, ErrorCode::precondition, "step size must be positive");

    double worst = 0.0;
    auto consider = [&](double analytic, double numeric) {
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-300});
        double rel = std::abs(analytic - numeric) / denom;
        worst = std::max(worst, rel);
    };

    for (const auto& p : pairs) {
        DpoEval eval = per_sample_loss(p.lp, p.weight, cfg);

        {
            LogProbPair plus = p.lp;
            LogProbPair minus = p.lp;
            plus.logp_policy_chosen += h;
            minus.logp_policy_chosen -= h;
            double num = (per_sample_loss(plus, p.weight, cfg).loss -
                          per_sample_loss(minus, p.weight, cfg).loss) /
                         (2.0 * h);
            consider(eval.grad_logp_policy_chosen, num);
        }
        {
            LogProbPair plus = p.lp;
            LogProbPair minus = p.lp;
            plus.logp_policy_rejected += h;
            minus.logp_policy_rejected -= h;
            double num = (per_sample_loss(plus, p.weight, cfg).loss -
                          per_sample_loss(minus, p.weight, cfg).loss) /
                         (2.0 * h);
            consider(eval.grad_logp_policy_rejected, num);
        }
    }
    return worst;
}

std::size_t export_training_file(const std::vector<PreferenceSample>& samples,
                                 const std::filesystem::path& out) {
    AtomicJsonlWriter writer(out);
    std::size_t count = 0;
    for (const auto& s : samples) {
        if (!s.norm_weight.has_value()) {
            fail(ErrorCode::export_error,
                 "sample '" + s.id + "' has no normalized weight; run the weighing stage first");
        }
        json line;
        line["prompt"] = s.instruction;
        line["image_ref"] = s.image_id;
        line["chosen"] = s.chosen;
        line["rejected"] = s.rejected;
        line["weight"] = *s.norm_weight;
        writer.write(line);
        ++count;
    }
    writer.commit();
    return count;
}

}  // namespace halluforge
