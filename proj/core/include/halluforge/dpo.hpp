#pragma once

#include <filesystem>

#include "halluforge/datamodel.hpp"

namespace halluforge {

enum class Reduction { mean, sum };

struct DpoConfig {
    double beta = 0.1;
    Reduction reduction = Reduction::mean;
};

struct DpoEval {
    std::string sample_id;
    double r_w = 0.0;     // logp_policy_chosen - logp_ref_chosen
    double r_l = 0.0;     // logp_policy_rejected - logp_ref_rejected
    double margin = 0.0;  // beta * (r_w - r_l)
    double loss = 0.0;    // -w * ln sigmoid(margin), always >= 0
    double grad_logp_policy_chosen = 0.0;
    double grad_logp_policy_rejected = 0.0;
};

/// Weighted logistic preference loss for one sample.
///
/// loss = -w * ln σ(β(r_w - r_l)), evaluated through the softplus identity
/// -ln σ(z) = ln(1 + e^{-z}) with a branch on the sign of z, so margins of
/// either sign up to 1e4 neither overflow nor lose the small-loss tail.
/// Gradients w.r.t. the two policy log-probs are the analytic ∓w·β·σ(-z).
DpoEval per_sample_loss(const LogProbPair& lp, double weight, const DpoConfig& cfg);

struct WeightedPair {
    LogProbPair lp;
    double weight = 1.0;
};

void from_json(const json& j, WeightedPair& v);
void to_json(json& j, const WeightedPair& v);

/// Batch reduction (mean or sum) of per-sample losses using pairwise tree
/// summation, which keeps the result stable under reorderings to ~1e-12.
double batch_loss(const std::vector<WeightedPair>& pairs, const DpoConfig& cfg);

/// Central-difference check of the analytic gradients over every policy
/// log-prob in the batch; returns the maximum relative error. Diagnostic
/// only, never throws on large errors.
double grad_check(const std::vector<WeightedPair>& pairs, const DpoConfig& cfg,
                  double h = 1e-5);

/// Writes the trainer hand-off file: one {prompt, image_ref, chosen,
/// rejected, weight} line per sample, weight being the normalized one.
/// A sample without norm_weight is an export error naming the sample.
std::size_t export_training_file(const std::vector<PreferenceSample>& samples,
                                 const std::filesystem::path& out);

}  // namespace halluforge
