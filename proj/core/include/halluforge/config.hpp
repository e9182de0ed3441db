#pragma once

#include <array>
#include <filesystem>

#include "halluforge/annotator.hpp"
#include "halluforge/backends.hpp"

namespace halluforge {

/// Parses a TOML subset (tables, dotted-free keys, strings, integers,
/// floats, booleans, flat arrays, # comments) into the same JSON document
/// shape a JSON config file yields, so one loader serves both formats.
json parse_toml(const std::string& text);

struct PipelineConfig {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::filesystem::path out_dir = "out";

    BackendConfig backend;
    VerifyConfig verify;

    // Benchmark chain inputs.
    std::filesystem::path embeddings;   // pool stage: embedded captions
    std::size_t pool_k = 0;             // images to select
    std::filesystem::path candidates;   // annotate stage: per-image candidates
    std::string caption_prompt = "Describe the image.";
    std::size_t top_k = 10;             // adversary candidates to verify
    bool emit_ranking = false;          // write the float-scored ranking sidecar
    std::filesystem::path templates_file;  // recognition templates, empty = builtin

    // Preference chain inputs.
    std::filesystem::path captions;     // filter stage: raw captions
    std::filesystem::path quality;      // filter stage: precomputed quality scores
    double max_perplexity = 100.0;
    int min_concrete = 2;
    std::filesystem::path tasks;        // prefs build stage: task queries
    double distance_threshold = 0.9;
    double posthoc_distance_threshold = 0.95;
    int weight_fallback = 2;
    std::size_t total = 0;              // composition size
    std::array<std::size_t, 5> ratio = {5, 5, 6, 9, 5};

    // Evaluate stage input: model responses to the generated benchmark.
    std::filesystem::path responses;

    double beta = 0.1;
};

/// Reads and validates a config file; `.toml` extension selects the TOML
/// reader, everything else parses as JSON. Unknown keys and out-of-range
/// values are config errors.
PipelineConfig load_config(const std::filesystem::path& path);

PipelineConfig config_from_json(const json& doc);
json config_to_json(const PipelineConfig& cfg);

/// Content address of the fully-defaulted canonical config document.
std::string config_digest(const PipelineConfig& cfg);

/// Range and consistency checks; throws ErrorCode::config on the first
/// violation.
void check_config(const PipelineConfig& cfg);

}  // namespace halluforge
