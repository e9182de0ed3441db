#include "halluforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include "halluforge/cooccur.hpp"
#include "halluforge/digest.hpp"
#include "halluforge/dpo.hpp"
#include "halluforge/jsonl.hpp"
#include "halluforge/pool.hpp"
#include "halluforge/prefforge.hpp"
#include "halluforge/qgen.hpp"
#include "halluforge/text.hpp"

namespace halluforge {

void to_json(json& j, const PrefTask& v) {
    j = json{{"id", v.id},
             {"image_id", v.image_id},
             {"task", to_string(v.task)},
             {"strategy", to_string(v.strategy)},
             {"query", v.query},
             {"object", v.object},
             {"object_present", v.object_present},
             {"correct_answer", v.correct_answer}};
}

void from_json(const json& j, PrefTask& v) {
    v.id = j.at("id").get<std::string>();
    v.image_id = j.at("image_id").get<std::string>();
    v.task = task_type_from(j.at("task").get<std::string>());
    v.strategy = gen_strategy_from(j.at("strategy").get<std::string>());
    v.query = j.at("query").get<std::string>();
    v.object = j.value("object", std::string());
    v.object_present = j.value("object_present", false);
    v.correct_answer = j.value("correct_answer", std::string());
}

// ---------------------------------------------------------------------------
// Stage plumbing

namespace {

using Counters = std::map<std::string, std::uint64_t>;

std::string now_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct StageIo {
    std::map<std::string, std::filesystem::path> inputs;
    std::filesystem::path output;              // manifest lives next to this one
    std::vector<std::filesystem::path> extra;  // sidecar outputs
};

StageIo stage_io(const PipelineConfig& cfg, const std::string& name) {
    const auto& out = cfg.out_dir;
    StageIo io;
    if (name == "pool") {
        io.inputs["embeddings"] = cfg.embeddings;
        io.output = out / "selected.jsonl";
    } else if (name == "annotate") {
        io.inputs["selected"] = out / "selected.jsonl";
        io.inputs["candidates"] = cfg.candidates;
        io.output = out / "records.jsonl";
    } else if (name == "adversary") {
        io.inputs["records"] = out / "records.jsonl";
        io.output = out / "triples.jsonl";
        if (cfg.emit_ranking) io.extra.push_back(out / "ranking.jsonl");
    } else if (name == "questions") {
        io.inputs["triples"] = out / "triples.jsonl";
        if (!cfg.templates_file.empty()) io.inputs["templates"] = cfg.templates_file;
        io.output = out / "benchmark.jsonl";
    } else if (name == "evaluate") {
        io.inputs["benchmark"] = out / "benchmark.jsonl";
        io.inputs["responses"] = cfg.responses;
        io.output = out / "report.json";
    } else if (name == "filter") {
        io.inputs["captions"] = cfg.captions;
        io.inputs["quality"] = cfg.quality;
        io.output = out / "captions_filtered.jsonl";
        io.extra.push_back(out / "captions_audit.jsonl");
    } else if (name == "prefs-build") {
        io.inputs["tasks"] = cfg.tasks;
        io.output = out / "pairs.jsonl";
    } else if (name == "prefs-weigh") {
        io.inputs["pairs"] = out / "pairs.jsonl";
        io.output = out / "weighted.jsonl";
    } else if (name == "compose") {
        io.inputs["weighted"] = out / "weighted.jsonl";
        io.output = out / "composed.jsonl";
    } else if (name == "export") {
        io.inputs["composed"] = out / "composed.jsonl";
        io.output = out / "train.jsonl";
    } else {
        fail(ErrorCode::config, "unknown stage '" + name + "'");
    }
    return io;
}

std::map<std::string, std::string> input_digests(const StageIo& io) {
    std::map<std::string, std::string> digests;
    for (const auto& [name, path] : io.inputs) digests[name] = digest_file(path);
    return digests;
}

/// A stage is current when its outputs exist and the manifest pins the same
/// config digest and the same input bytes.
bool stage_current(const StageIo& io, const std::string& cfg_digest) {
    if (!std::filesystem::exists(io.output)) return false;
    for (const auto& p : io.extra) {
        if (!std::filesystem::exists(p)) return false;
    }
    std::optional<RunManifest> manifest = read_manifest(io.output);
    if (!manifest) return false;
    if (manifest->config_digest != cfg_digest) return false;
    return manifest->input_digests == input_digests(io);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// ---------------------------------------------------------------------------
// Benchmark chain stages

Counters stage_pool(const PipelineConfig& cfg, const StageIo& io) {
    auto pool = read_jsonl<EmbeddedCaption>(io.inputs.at("embeddings"));
    std::vector<std::string> ids =
        kcenter_select(pool, cfg.pool_k, derive_seed(cfg.seed, "pool"));

    std::map<std::string, const EmbeddedCaption*> by_id;
    for (const auto& c : pool) by_id[c.id] = &c;

    AtomicJsonlWriter writer(io.output);
    for (const auto& id : ids) writer.write_record(*by_id.at(id));
    writer.commit();

    return {{"pool", pool.size()}, {"selected", ids.size()}};
}

Counters stage_annotate(const PipelineConfig& cfg, const StageIo& io,
                        const BackendSet& backends) {
    auto selected = read_jsonl<EmbeddedCaption>(io.inputs.at("selected"));

    std::map<std::string, std::vector<CandidateObject>> candidates;
    {
        JsonlReader reader(io.inputs.at("candidates"));
        json j;
        while (reader.next(j)) {
            candidates[j.at("image_id").get<std::string>()] =
                j.at("candidates").get<std::vector<CandidateObject>>();
        }
    }

    Counters counters{{"annotated", 0}, {"failed", 0}, {"no_candidates", 0},
                      {"unverified_objects", 0}};

    AtomicJsonlWriter writer(io.output);
    for (const auto& cap : selected) {
        auto found = candidates.find(cap.id);
        if (found == candidates.end()) {
            ++counters["no_candidates"];
            continue;
        }

        ImageRecord base;
        base.id = cap.id;
        base.caption = cap.text;
        if (base.caption.empty()) {
            base.caption = backends.vqa->ask({cap.id, cfg.caption_prompt, std::nullopt,
                                              std::nullopt});
        }

        AnnotateResult result =
            annotate_image(backends, base, found->second, cfg.verify, cfg.jobs);
        counters["unverified_objects"] += result.unverified.size();
        if (result.failed) {
            ++counters["failed"];
            continue;
        }
        writer.write_record(result.record);
        ++counters["annotated"];
    }
    writer.commit();
    return counters;
}

Counters stage_adversary(const PipelineConfig& cfg, const StageIo& io,
                         const BackendSet& backends) {
    auto records = read_jsonl<ImageRecord>(io.inputs.at("records"));
    CooccurrenceModel model = CooccurrenceModel::build(records);

    Counters counters{{"assigned", 0}, {"ineligible", 0}, {"triple_failures", 0}};

    std::optional<AtomicJsonlWriter> ranking_writer;
    if (!io.extra.empty()) ranking_writer.emplace(io.extra.front());
    AtomicJsonlWriter writer(io.output);
    for (auto& record : records) {
        if (!record.benchmark_eligible()) {
            ++counters["ineligible"];
            continue;
        }

        PresenceCheck verify = [&](const ObjectLabel& object) {
            VerificationOutcome outcome =
                verify_object(*backends.grounding, *backends.vqa, record.id, record.caption,
                              object, cfg.verify);
            return outcome.decision == PresenceDecision::present;
        };

        try {
            TripleAssignment assignment =
                assign_triple(model, record, verify, cfg.top_k,
                              derive_seed(cfg.seed, "adversary/" + record.id));
            record.triple = assignment.triple;
            writer.write_record(record);
            if (ranking_writer.has_value()) {
                json line;
                to_json(line, assignment.ranking);
                ranking_writer->write(line);
            }
            ++counters["assigned"];
        } catch (const Error& e) {
            if (e.code() != ErrorCode::triple_failure) throw;
            ++counters["triple_failures"];
        }
    }
    if (ranking_writer.has_value()) ranking_writer->commit();
    writer.commit();
    return counters;
}

Counters stage_questions(const PipelineConfig& cfg, const StageIo& io,
                         const BackendSet& backends) {
    auto records = read_jsonl<ImageRecord>(io.inputs.at("triples"));

    TemplateSet templates = cfg.templates_file.empty()
                                ? TemplateSet::defaults()
                                : TemplateSet::from_lines(read_lines(cfg.templates_file));

    PresupDedupLog dedup;
    Counters counters{{"items", 0}, {"excluded", 0}};

    AtomicJsonlWriter writer(io.output);
    for (const auto& record : records) {
        require(record.triple.has_value(), ErrorCode::precondition,
                "record '" + record.id + "' has no triple; run the adversary stage first");
        const ObjectTriple& triple = *record.triple;

        PresupResult presup = make_presup_question(*backends.judge, record.caption,
                                                   triple.adversarial, record.present_objects,
                                                   dedup);
        if (!presup.question.has_value()) {
            ++counters["excluded"];
            continue;
        }

        auto seed_for = [&](QuestionKind kind) {
            return derive_seed(cfg.seed, "questions/" + record.id + "/" + to_string(kind));
        };

        BenchmarkItem item;
        item.image_id = record.id;
        item.subset = record.source == ImageSource::coco_instances
                          ? BenchmarkSubset::instances
                          : BenchmarkSubset::florence_like;
        item.questions = {
            make_recognition_question(triple.present, QuestionKind::rec_pos, templates,
                                      seed_for(QuestionKind::rec_pos)),
            make_recognition_question(triple.random, QuestionKind::rec_rnd, templates,
                                      seed_for(QuestionKind::rec_rnd)),
            make_recognition_question(triple.adversarial, QuestionKind::rec_adv, templates,
                                      seed_for(QuestionKind::rec_adv)),
            *presup.question,
        };
        writer.write_record(item);
        ++counters["items"];
    }
    writer.commit();
    return counters;
}

Counters stage_evaluate(const StageIo& io, const BackendSet& backends,
                        const std::string& cfg_digest, bool& partial) {
    auto items = read_jsonl<BenchmarkItem>(io.inputs.at("benchmark"));
    auto responses = read_jsonl<ResponseRecord>(io.inputs.at("responses"));

    EvalReport report = evaluate_benchmark(items, responses, *backends.judge);
    report.config_digest = cfg_digest;
    partial = report.partial;

    write_text_atomic(io.output, eval_report_to_json(report).dump() + "\n");
    return {{"items", items.size()},
            {"responses", responses.size()},
            {"partial", report.partial ? 1u : 0u}};
}

// ---------------------------------------------------------------------------
// Preference chain stages

Counters stage_filter(const PipelineConfig& cfg, const StageIo& io) {
    auto captions = read_jsonl<Caption>(io.inputs.at("captions"));

    std::map<std::string, CaptionQuality> quality;
    {
        JsonlReader reader(io.inputs.at("quality"));
        json j;
        while (reader.next(j)) {
            CaptionQuality q;
            q.perplexity = j.at("perplexity").get<double>();
            q.syntax_ok = j.at("syntax_ok").get<bool>();
            q.concrete_object_count = j.at("concrete_object_count").get<int>();
            quality[j.at("id").get<std::string>()] = q;
        }
    }

    QualityScorer scorer = [&](const Caption& c) {
        auto found = quality.find(c.id);
        if (found == quality.end()) {
            throw std::runtime_error("no quality record for caption '" + c.id + "'");
        }
        return found->second;
    };

    FilterResult result =
        filter_captions(captions, scorer, cfg.max_perplexity, cfg.min_concrete);

    AtomicJsonlWriter audit_writer(io.extra.front());
    for (const auto& a : result.audit) {
        json line;
        to_json(line, a);
        audit_writer.write(line);
    }
    AtomicJsonlWriter writer(io.output);
    for (const auto& c : result.retained) writer.write_record(c);
    audit_writer.commit();
    writer.commit();

    return {{"in", captions.size()}, {"retained", result.retained.size()}};
}

/// The truthful hint for the task's object, and the lying one.
std::pair<std::string, std::string> hints_for(const PrefTask& task) {
    ObjectLabel object(task.object);
    std::string truth = task.object_present ? presence_hint(object) : absence_hint(object);
    std::string lie = task.object_present ? absence_hint(object) : presence_hint(object);
    return {truth, lie};
}

std::optional<PairTexts> build_pair(const PipelineConfig& cfg, const BackendSet& backends,
                                    const PrefTask& task, std::string& skip_reason) {
    switch (task.strategy) {
        case GenStrategy::unilateral: {
            require(!task.object.empty(), ErrorCode::precondition,
                    "task '" + task.id + "' needs an object for hint augmentation");
            auto [truth, lie] = hints_for(task);
            // CPQ hints toward the truth (the grounded denial is the hard
            // side to elicit); TPQ/POPE hint the lie at a present object;
            // descriptions flip a seeded coin.
            HintPolarity polarity = HintPolarity::correct;
            std::string hint = truth;
            if (task.task == TaskType::tpq || task.task == TaskType::pope) {
                polarity = HintPolarity::incorrect;
                hint = lie;
            } else if (task.task == TaskType::description) {
                Rng rng(derive_seed(cfg.seed, "prefs/" + task.id));
                if (uniform_below(rng, 2) == 1) {
                    polarity = HintPolarity::incorrect;
                    hint = lie;
                }
            }
            return build_pair_unilateral(*backends.vqa, task.image_id, task.query,
                                         compose_hint(task.query, hint, polarity));
        }
        case GenStrategy::contrastive: {
            require(!task.object.empty(), ErrorCode::precondition,
                    "task '" + task.id + "' needs an object for hint augmentation");
            auto [truth, lie] = hints_for(task);
            return build_pair_contrastive(
                *backends.vqa, task.image_id, task.query,
                compose_hint(task.query, truth, HintPolarity::correct),
                compose_hint(task.query, lie, HintPolarity::incorrect));
        }
        case GenStrategy::posthoc: {
            require(!task.object.empty() && !task.object_present, ErrorCode::precondition,
                    "task '" + task.id + "' needs an absent object to inject");
            PairOutcome outcome = build_pair_posthoc(
                *backends.vqa, task.image_id, task.query, ObjectLabel(task.object),
                default_prefix_bank(), derive_seed(cfg.seed, "posthoc/" + task.id));
            skip_reason = outcome.skip_reason;
            return outcome.texts;
        }
        case GenStrategy::inversion: {
            require(!task.correct_answer.empty(), ErrorCode::precondition,
                    "task '" + task.id + "' needs a correct answer to invert");
            PairOutcome outcome =
                build_pair_inversion(*backends.judge, task.query, task.correct_answer);
            skip_reason = outcome.skip_reason;
            return outcome.texts;
        }
    }
    fail(ErrorCode::precondition, "unreachable strategy");
}

Counters stage_prefs_build(const PipelineConfig& cfg, const StageIo& io,
                           const BackendSet& backends) {
    auto tasks = read_jsonl<PrefTask>(io.inputs.at("tasks"));

    Counters counters{{"built", 0}, {"skipped", 0}, {"filtered", 0}};

    AtomicJsonlWriter writer(io.output);
    for (const auto& task : tasks) {
        std::string skip_reason;
        std::optional<PairTexts> texts;
        try {
            texts = build_pair(cfg, backends, task, skip_reason);
            if (texts.has_value()) {
                double threshold =
                    task.strategy == GenStrategy::posthoc && task.task == TaskType::description
                        ? cfg.posthoc_distance_threshold
                        : cfg.distance_threshold;
                FilterDecision decision =
                    filter_pair(*backends.embed, texts->chosen, texts->rejected, threshold);
                if (!decision.keep) {
                    ++counters["filtered"];
                    continue;
                }

                PreferenceSample sample;
                sample.id = task.id;
                sample.image_id = task.image_id;
                sample.instruction = task.query;
                sample.chosen = texts->chosen;
                sample.rejected = texts->rejected;
                sample.task = task.task;
                sample.gen_strategy = task.strategy;
                sample.distance = decision.distance;
                writer.write_record(sample);
                ++counters["built"];
                continue;
            }
        } catch (const Error& e) {
            // A lost backend or an unusable judge reply drops the pair, not
            // the run; anything else is a bug or misconfiguration.
            if (e.code() != ErrorCode::backend_unavailable &&
                e.code() != ErrorCode::judge_parse && e.code() != ErrorCode::numeric) {
                throw;
            }
        }
        ++counters["skipped"];
    }
    writer.commit();
    return counters;
}

Counters stage_prefs_weigh(const PipelineConfig& cfg, const StageIo& io,
                           const BackendSet& backends) {
    auto samples = read_jsonl<PreferenceSample>(io.inputs.at("pairs"));

    assign_weights(samples, *backends.judge, cfg.weight_fallback);

    std::uint64_t fallbacks = 0;
    for (const auto& s : samples) fallbacks += s.weight_fallback.value_or(false) ? 1 : 0;

    write_jsonl(io.output, samples);
    return {{"weighed", samples.size()}, {"fallbacks", fallbacks}};
}

Counters stage_compose(const PipelineConfig& cfg, const StageIo& io) {
    auto samples = read_jsonl<PreferenceSample>(io.inputs.at("weighted"));
    auto composed =
        compose_dataset(samples, cfg.total, cfg.ratio, derive_seed(cfg.seed, "compose"));
    write_jsonl(io.output, composed);
    return {{"composed", composed.size()}};
}

Counters stage_export(const PipelineConfig& cfg, const StageIo& io) {
    (void)cfg;
    auto samples = read_jsonl<PreferenceSample>(io.inputs.at("composed"));
    std::size_t count = export_training_file(samples, io.output);
    return {{"exported", count}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Runner

std::vector<std::string> plan_stages(const PipelineConfig& cfg) {
    std::vector<std::string> plan;
    if (!cfg.embeddings.empty()) {
        if (cfg.pool_k == 0) {
            fail(ErrorCode::config, "pool.k must be set when pool.embeddings is configured");
        }
        if (cfg.candidates.empty()) {
            fail(ErrorCode::config,
                 "annotate.candidates must be set for the benchmark chain");
        }
        plan.insert(plan.end(), {"pool", "annotate", "adversary", "questions"});
    }
    if (!cfg.responses.empty()) plan.push_back("evaluate");
    if (!cfg.captions.empty()) {
        if (cfg.quality.empty()) {
            fail(ErrorCode::config, "pool.quality must be set when pool.captions is configured");
        }
        plan.push_back("filter");
    }
    if (!cfg.tasks.empty()) plan.insert(plan.end(), {"prefs-build", "prefs-weigh"});
    if (cfg.total > 0) plan.insert(plan.end(), {"compose", "export"});

    if (plan.empty()) {
        fail(ErrorCode::config, "config drives no stages: set pool.embeddings, prefs.tasks, "
                                "pool.captions, prefs.total or evaluate.responses");
    }
    return plan;
}

StageResult run_stage(const PipelineConfig& cfg, const std::string& name,
                      const BackendFactory& factory) {
    StageIo io = stage_io(cfg, name);
    for (const auto& [input_name, path] : io.inputs) {
        if (path.empty() || !std::filesystem::exists(path)) {
            fail(ErrorCode::io, "stage '" + name + "' input '" + input_name +
                                    "' missing: " + path.string());
        }
    }

    std::string digest = config_digest(cfg);
    StageResult result;
    result.name = name;
    result.outputs.push_back(io.output);
    result.outputs.insert(result.outputs.end(), io.extra.begin(), io.extra.end());

    if (stage_current(io, digest)) return result;

    std::filesystem::create_directories(cfg.out_dir);

    BackendSet backends =
        factory ? factory(cfg.backend) : make_backends(cfg.backend);

    Counters counters;
    bool partial = false;
    if (name == "pool") counters = stage_pool(cfg, io);
    else if (name == "annotate") counters = stage_annotate(cfg, io, backends);
    else if (name == "adversary") counters = stage_adversary(cfg, io, backends);
    else if (name == "questions") counters = stage_questions(cfg, io, backends);
    else if (name == "evaluate") counters = stage_evaluate(io, backends, digest, partial);
    else if (name == "filter") counters = stage_filter(cfg, io);
    else if (name == "prefs-build") counters = stage_prefs_build(cfg, io, backends);
    else if (name == "prefs-weigh") counters = stage_prefs_weigh(cfg, io, backends);
    else if (name == "compose") counters = stage_compose(cfg, io);
    else if (name == "export") counters = stage_export(cfg, io);

    result.ran = true;
    result.partial = partial;

    // A partial evaluate keeps its flagged report but gets no manifest, so
    // the next run retries instead of treating it as done.
    if (!partial) {
        RunManifest manifest;
        manifest.pipeline_stage = name;
        manifest.config_digest = digest;
        manifest.global_seed = cfg.seed;
        manifest.input_digests = input_digests(io);
        manifest.stats = counters;
        manifest.timestamp = now_timestamp();
        write_manifest(io.output, manifest);
    }
    return result;
}

std::vector<StageResult> run_pipeline(const PipelineConfig& cfg, const std::string& from,
                                      const std::string& to, const BackendFactory& factory) {
    std::vector<std::string> plan = plan_stages(cfg);

    auto index_of = [&](const std::string& name, std::size_t fallback) {
        if (name.empty()) return fallback;
        auto it = std::find(plan.begin(), plan.end(), name);
        if (it == plan.end()) {
            fail(ErrorCode::config, "stage '" + name + "' is not in the planned chain");
        }
        return static_cast<std::size_t>(it - plan.begin());
    };
    std::size_t first = index_of(from, 0);
    std::size_t last = index_of(to, plan.size() - 1);
    require(first <= last, ErrorCode::config, "stage window is inverted");

    std::vector<StageResult> results;
    for (std::size_t i = first; i <= last; ++i) {
        results.push_back(run_stage(cfg, plan[i], factory));
    }
    return results;
}

// ---------------------------------------------------------------------------
// Evaluation

json eval_report_to_json(const EvalReport& report) {
    json metrics;
    to_json(metrics["rec_pos"], report.recognition.rec_pos);
    to_json(metrics["rec_rnd"], report.recognition.rec_rnd);
    to_json(metrics["rec_adv"], report.recognition.rec_adv);
    to_json(metrics["adp"], report.adp);
    return json{{"config_digest", report.config_digest},
                {"partial", report.partial},
                {"metrics", metrics}};
}

EvalReport evaluate_benchmark(const std::vector<BenchmarkItem>& items,
                              const std::vector<ResponseRecord>& responses,
                              JudgeBackend& judge) {
    EvalReport report;
    report.recognition = score_recognition(responses, items);
    report.adp = score_adp(responses, items, judge);
    report.partial = report.adp.partial;
    return report;
}

// ---------------------------------------------------------------------------
// Statistics

StatsSummary collect_stats(const std::filesystem::path& artifact) {
    StatsSummary stats;
    JsonlReader reader(artifact);
    json j;
    while (reader.next(j)) {
        RecordType type = detect_record_type(j);
        if (type == RecordType::auto_detect) {
            fail(ErrorCode::serialization, artifact.string() + ":" +
                                               std::to_string(reader.line()) +
                                               ": unrecognized record shape");
        }
        if (stats.records == 0) {
            stats.type = type;
        } else if (type != stats.type) {
            fail(ErrorCode::precondition,
                 artifact.string() + ": mixed record types (" + to_string(stats.type) +
                     " then " + to_string(type) + " at line " + std::to_string(reader.line()) +
                     ")");
        }
        ++stats.records;

        if (type == RecordType::preference_sample) {
            PreferenceSample s = j.get<PreferenceSample>();
            ++stats.task_counts[to_string(s.task)];
            ++stats.strategy_counts[to_string(s.gen_strategy)];
            if (s.weight.has_value() && *s.weight >= 1 && *s.weight <= 3) {
                ++stats.weight_hist[static_cast<std::size_t>(*s.weight - 1)];
            } else {
                ++stats.weight_missing;
            }
            if (s.distance.has_value() && *s.distance >= 0.0 && *s.distance <= 2.0) {
                auto bucket = static_cast<std::size_t>(*s.distance / 0.2);
                ++stats.distance_hist[std::min<std::size_t>(bucket, 9)];
            } else {
                ++stats.distance_missing;
            }
        } else if (type == RecordType::benchmark_item) {
            BenchmarkItem item = j.get<BenchmarkItem>();
            for (const auto& q : item.questions) ++stats.kind_counts[to_string(q.kind)];
        }
    }
    return stats;
}

json stats_to_json(const StatsSummary& stats) {
    json j;
    j["type"] = to_string(stats.type);
    j["records"] = stats.records;
    j["task_counts"] = stats.task_counts;
    j["strategy_counts"] = stats.strategy_counts;
    j["kind_counts"] = stats.kind_counts;
    j["weight_hist"] = {{"1", stats.weight_hist[0]},
                        {"2", stats.weight_hist[1]},
                        {"3", stats.weight_hist[2]},
                        {"missing", stats.weight_missing}};
    json dist;
    for (std::size_t i = 0; i < stats.distance_hist.size(); ++i) {
        char label[16];
        std::snprintf(label, sizeof label, "[%.1f,%.1f)", 0.2 * static_cast<double>(i),
                      0.2 * static_cast<double>(i + 1));
        dist[label] = stats.distance_hist[i];
    }
    dist["missing"] = stats.distance_missing;
    j["distance_hist"] = dist;
    return j;
}

std::string render_stats(const StatsSummary& stats) {
    std::string out;
    out += "type: " + to_string(stats.type) + "\n";
    out += "records: " + std::to_string(stats.records) + "\n";
    for (const auto& [task, n] : stats.task_counts) {
        out += "task " + task + ": " + std::to_string(n) + "\n";
    }
    for (const auto& [strategy, n] : stats.strategy_counts) {
        out += "strategy " + strategy + ": " + std::to_string(n) + "\n";
    }
    for (const auto& [kind, n] : stats.kind_counts) {
        out += "kind " + kind + ": " + std::to_string(n) + "\n";
    }
    if (stats.type == RecordType::preference_sample) {
        for (std::size_t i = 0; i < stats.weight_hist.size(); ++i) {
            out += "weight " + std::to_string(i + 1) + ": " +
                   std::to_string(stats.weight_hist[i]) + "\n";
        }
        if (stats.weight_missing > 0) {
            out += "weight missing: " + std::to_string(stats.weight_missing) + "\n";
        }
        for (std::size_t i = 0; i < stats.distance_hist.size(); ++i) {
            if (stats.distance_hist[i] == 0) continue;
            char label[16];
            std::snprintf(label, sizeof label, "[%.1f,%.1f)", 0.2 * static_cast<double>(i),
                          0.2 * static_cast<double>(i + 1));
            out += "distance " + std::string(label) + ": " +
                   std::to_string(stats.distance_hist[i]) + "\n";
        }
        if (stats.distance_missing > 0) {
            out += "distance missing: " + std::to_string(stats.distance_missing) + "\n";
        }
    }
    return out;
}

}  // namespace halluforge
