// Command-line front end for the halluforge pipeline. Every stage command
// reads one config file (TOML or JSON); --seed and --jobs override the
// config so sweeps don't need one file per variation.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad config or usage.

#include <cstdlib>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "halluforge/dpo.hpp"
#include "halluforge/jsonl.hpp"
#include "halluforge/pipeline.hpp"

namespace hf = halluforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
};

hf::PipelineConfig load_with_overrides(const GlobalArgs& args) {
    if (args.config_path.empty()) {
        hf::fail(hf::ErrorCode::config, "--config is required for this command");
    }
    hf::PipelineConfig cfg = hf::load_config(args.config_path);
    if (args.seed.has_value()) cfg.seed = *args.seed;
    if (args.jobs.has_value()) cfg.jobs = *args.jobs;
    hf::check_config(cfg);
    std::cout << "config digest: " << hf::config_digest(cfg) << "\n";
    return cfg;
}

void report_stages(const std::vector<hf::StageResult>& results) {
    for (const auto& r : results) {
        std::cout << "stage " << r.name << ": "
                  << (r.ran ? (r.partial ? "partial" : "done") : "up to date");
        for (const auto& out : r.outputs) std::cout << " " << out.string();
        std::cout << "\n";
    }
}

/// Runs one pipeline stage by name under the shared config.
int run_single_stage(const GlobalArgs& args, const std::string& stage) {
    hf::PipelineConfig cfg = load_with_overrides(args);
    std::vector<hf::StageResult> results{hf::run_stage(cfg, stage)};
    report_stages(results);
    return results.front().partial ? kExitRuntime : kExitOk;
}

int cmd_run(const GlobalArgs& args, const std::string& from, const std::string& to) {
    hf::PipelineConfig cfg = load_with_overrides(args);
    std::vector<hf::StageResult> results = hf::run_pipeline(cfg, from, to);
    report_stages(results);
    for (const auto& r : results) {
        if (r.partial) return kExitRuntime;
    }
    return kExitOk;
}

int cmd_stats(const std::string& artifact, bool as_json) {
    hf::StatsSummary stats = hf::collect_stats(artifact);
    if (as_json) {
        std::cout << hf::stats_to_json(stats).dump(2) << "\n";
    } else {
        std::cout << hf::render_stats(stats);
    }
    return kExitOk;
}

int cmd_validate(const std::string& artifact, const std::string& type_name,
                 bool benchmark_stage, std::size_t max_reported) {
    hf::ValidateOptions opts;
    opts.benchmark_stage = benchmark_stage;
    opts.max_reported = max_reported;
    if (!type_name.empty() && type_name != "auto") {
        // Accept the same spellings validate_dataset reports.
        static const std::map<std::string, hf::RecordType> kNames = {
            {"image-record", hf::RecordType::image_record},
            {"benchmark-item", hf::RecordType::benchmark_item},
            {"preference-sample", hf::RecordType::preference_sample},
            {"logprob-pair", hf::RecordType::logprob_pair},
            {"embedded-caption", hf::RecordType::embedded_caption},
            {"object-label", hf::RecordType::object_label},
        };
        auto it = kNames.find(type_name);
        if (it == kNames.end()) {
            hf::fail(hf::ErrorCode::config, "unknown record type '" + type_name + "'");
        }
        opts.type = it->second;
    }

    hf::ValidationReport report = hf::validate_dataset(artifact, opts);
    std::cout << "type: " << hf::to_string(report.detected) << "\n"
              << "records: " << report.records << "\n"
              << "valid: " << report.valid << "\n"
              << "violations: " << report.violation_count << "\n";
    for (const auto& v : report.first_violations) {
        std::cout << "  line " << v.line << " [" << v.rule << "] " << v.message << "\n";
    }
    return report.ok() ? kExitOk : kExitRuntime;
}

int cmd_dpo_loss(const std::string& pairs_path, double beta, bool sum) {
    auto pairs = hf::read_jsonl<hf::WeightedPair>(pairs_path);
    hf::DpoConfig cfg;
    cfg.beta = beta;
    cfg.reduction = sum ? hf::Reduction::sum : hf::Reduction::mean;
    std::cout.precision(17);
    std::cout << "pairs: " << pairs.size() << "\n"
              << "loss: " << hf::batch_loss(pairs, cfg) << "\n";
    return kExitOk;
}

int cmd_dpo_grad_check(const std::string& pairs_path, double beta, double h) {
    auto pairs = hf::read_jsonl<hf::WeightedPair>(pairs_path);
    hf::DpoConfig cfg;
    cfg.beta = beta;
    double err = hf::grad_check(pairs, cfg, h);
    std::cout.precision(17);
    std::cout << "pairs: " << pairs.size() << "\n"
              << "max relative error: " << err << "\n";
    // Central differences at h=1e-5 should agree to ~1e-7 for well-scaled
    // margins; 1e-4 here flags a genuinely wrong analytic gradient, not
    // truncation noise.
    return err < 1e-4 ? kExitOk : kExitRuntime;
}

int cmd_dpo_export(const std::string& samples_path, const std::string& out) {
    auto samples = hf::read_jsonl<hf::PreferenceSample>(samples_path);
    std::size_t n = hf::export_training_file(samples, out);
    std::cout << "exported " << n << " samples to " << out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"halluforge: hallucination benchmark and preference data pipeline"};
    app.require_subcommand(1);

    GlobalArgs globals;
    std::uint64_t seed_arg = 0;
    int jobs_arg = 0;
    app.add_option("--config", globals.config_path, "pipeline config file (.toml or .json)");
    auto* seed_opt = app.add_option("--seed", seed_arg, "override the config seed");
    auto* jobs_opt = app.add_option("--jobs", jobs_arg, "override the config worker cap");

    // Stage commands; each runs exactly one pipeline stage under --config.
    auto* pool = app.add_subcommand("pool", "caption pool operations");
    pool->require_subcommand(1);
    pool->add_subcommand("select", "k-center selection over embedded captions");
    pool->add_subcommand("filter", "quality-filter raw captions");

    app.add_subcommand("annotate", "verify candidate objects per image");
    app.add_subcommand("adversary", "assign (present, random, adversarial) triples");
    app.add_subcommand("questions", "emit the four-question benchmark items");

    auto* prefs = app.add_subcommand("prefs", "preference-pair operations");
    prefs->require_subcommand(1);
    prefs->add_subcommand("build", "generate chosen/rejected pairs");
    prefs->add_subcommand("weigh", "judge and normalize sample weights");
    prefs->add_subcommand("compose", "draw the task-ratio dataset");
    prefs->add_subcommand("export", "write the trainer hand-off file");

    app.add_subcommand("evaluate", "score model responses against a benchmark");

    auto* run = app.add_subcommand("run", "run every configured stage in order");
    std::string from_stage, to_stage;
    run->add_option("--from", from_stage, "first stage to run");
    run->add_option("--to", to_stage, "last stage to run");

    auto* stats = app.add_subcommand("stats", "summarize a JSONL artifact");
    std::string stats_path;
    bool stats_json = false;
    stats->add_option("artifact", stats_path, "artifact file")->required();
    stats->add_flag("--json", stats_json, "emit JSON instead of text");

    auto* validate = app.add_subcommand("validate", "check record invariants line by line");
    std::string validate_path, validate_type = "auto";
    bool validate_benchmark = false;
    std::size_t validate_max = 20;
    validate->add_option("artifact", validate_path, "artifact file")->required();
    validate->add_option("--type", validate_type, "record type (default: auto-detect)");
    validate->add_flag("--benchmark", validate_benchmark,
                       "enforce benchmark-stage rules (eligibility, triples)");
    validate->add_option("--max-reported", validate_max, "violations to list");

    auto* dpo = app.add_subcommand("dpo", "weighted preference-loss utilities");
    dpo->require_subcommand(1);
    double dpo_beta = 0.1;
    dpo->add_option("--beta", dpo_beta, "KL-penalty scale")->capture_default_str();

    auto* dpo_loss = dpo->add_subcommand("loss", "batch loss over a log-prob file");
    std::string dpo_pairs;
    bool dpo_sum = false;
    dpo_loss->add_option("pairs", dpo_pairs, "JSONL of log-prob pairs")->required();
    dpo_loss->add_flag("--sum", dpo_sum, "sum reduction instead of mean");

    auto* dpo_gc = dpo->add_subcommand("grad-check", "compare analytic vs numeric gradients");
    std::string gc_pairs;
    double gc_h = 1e-5;
    dpo_gc->add_option("pairs", gc_pairs, "JSONL of log-prob pairs")->required();
    dpo_gc->add_option("--step", gc_h, "central-difference step")->capture_default_str();

    auto* dpo_export = dpo->add_subcommand("export", "write the trainer hand-off file");
    std::string export_samples, export_out;
    dpo_export->add_option("samples", export_samples, "weighted preference samples")->required();
    dpo_export->add_option("out", export_out, "output path")->required();

    // Let globals like --config sit after the subcommand name too.
    std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
        for (CLI::App* sub : cmd->get_subcommands({})) {
            sub->fallthrough();
            enable_fallthrough(sub);
        }
    };
    enable_fallthrough(&app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // CLI11 prints its own message; fold usage errors into the config
        // exit code and let --help keep its zero.
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*seed_opt) globals.seed = seed_arg;
    if (*jobs_opt) globals.jobs = jobs_arg;

    try {
        if (pool->parsed()) {
            return run_single_stage(globals,
                                    pool->get_subcommand("select")->parsed() ? "pool" : "filter");
        }
        if (app.get_subcommand("annotate")->parsed()) return run_single_stage(globals, "annotate");
        if (app.get_subcommand("adversary")->parsed()) return run_single_stage(globals, "adversary");
        if (app.get_subcommand("questions")->parsed()) return run_single_stage(globals, "questions");
        if (prefs->parsed()) {
            if (prefs->get_subcommand("build")->parsed()) return run_single_stage(globals, "prefs-build");
            if (prefs->get_subcommand("weigh")->parsed()) return run_single_stage(globals, "prefs-weigh");
            if (prefs->get_subcommand("compose")->parsed()) return run_single_stage(globals, "compose");
            return run_single_stage(globals, "export");
        }
        if (app.get_subcommand("evaluate")->parsed()) return run_single_stage(globals, "evaluate");
        if (run->parsed()) return cmd_run(globals, from_stage, to_stage);
        if (stats->parsed()) return cmd_stats(stats_path, stats_json);
        if (validate->parsed()) {
            return cmd_validate(validate_path, validate_type, validate_benchmark, validate_max);
        }
        if (dpo->parsed()) {
            if (dpo_loss->parsed()) return cmd_dpo_loss(dpo_pairs, dpo_beta, dpo_sum);
            if (dpo_gc->parsed()) return cmd_dpo_grad_check(gc_pairs, dpo_beta, gc_h);
            return cmd_dpo_export(export_samples, export_out);
        }
    } catch (const hf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == hf::ErrorCode::config ? kExitConfig : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
