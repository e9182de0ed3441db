#pragma once

#include "halluforge/config.hpp"
#include "halluforge/evalkit.hpp"

namespace halluforge {

// ---------------------------------------------------------------------------
// Preference task queries (prefs-build stage input)

struct PrefTask {
    std::string id;
    std::string image_id;
    TaskType task = TaskType::cpq;
    GenStrategy strategy = GenStrategy::unilateral;
    std::string query;
    std::string object;           // hint / injection target, normalized label
    bool object_present = false;  // ground truth behind the hint polarity
    std::string correct_answer;   // inversion strategy only

    bool operator==(const PrefTask&) const = default;
};

void to_json(json& j, const PrefTask& v);
void from_json(const json& j, PrefTask& v);

// ---------------------------------------------------------------------------
// Stage runner

struct StageResult {
    std::string name;
    bool ran = false;      // false: resume found outputs current, nothing to do
    bool partial = false;  // evaluate only: judge lost mid-way, report flagged
    std::vector<std::filesystem::path> outputs;
};

/// Stage names in execution order, derived from which inputs the config
/// sets. Benchmark chain: pool, annotate, adversary, questions, evaluate.
/// Preference chain: filter, prefs-build, prefs-weigh, compose, export.
/// An empty plan is a config error.
std::vector<std::string> plan_stages(const PipelineConfig& cfg);

/// Overrides backend construction for a run; the fixture recorder uses this
/// to interpose itself between the stages and scripted services. Empty
/// means make_backends(cfg.backend).
using BackendFactory = std::function<BackendSet(const BackendConfig&)>;

/// Runs one named stage. Re-running with an unchanged config digest and
/// unchanged input digests is a no-op; outputs and manifests are written
/// atomically, so a failed stage leaves no partial artifact behind.
StageResult run_stage(const PipelineConfig& cfg, const std::string& name,
                      const BackendFactory& factory = {});

/// Runs the planned stages, optionally clamped to the [from, to] window.
std::vector<StageResult> run_pipeline(const PipelineConfig& cfg, const std::string& from = "",
                                      const std::string& to = "",
                                      const BackendFactory& factory = {});

// ---------------------------------------------------------------------------
// Benchmark evaluation

struct EvalReport {
    RecognitionScores recognition;
    MetricReport adp;
    std::string config_digest;
    bool partial = false;  // adp judging aborted on a lost backend
};

json eval_report_to_json(const EvalReport& report);

EvalReport evaluate_benchmark(const std::vector<BenchmarkItem>& items,
                              const std::vector<ResponseRecord>& responses,
                              JudgeBackend& judge);

// ---------------------------------------------------------------------------
// Artifact statistics

struct StatsSummary {
    RecordType type = RecordType::auto_detect;
    std::size_t records = 0;
    std::map<std::string, std::size_t> task_counts;      // preference samples
    std::map<std::string, std::size_t> strategy_counts;  // preference samples
    std::map<std::string, std::size_t> kind_counts;      // benchmark questions
    std::array<std::size_t, 3> weight_hist{};            // raw gap scores 1..3
    std::size_t weight_missing = 0;
    std::array<std::size_t, 10> distance_hist{};         // [0,2) in 0.2 steps
    std::size_t distance_missing = 0;
};

/// One pass over an artifact file. All lines must be the same record type;
/// an empty file yields a zero summary.
StatsSummary collect_stats(const std::filesystem::path& artifact);

json stats_to_json(const StatsSummary& stats);
std::string render_stats(const StatsSummary& stats);

}  // namespace halluforge
