#include <doctest.h>

#include "halluforge/digest.hpp"
#include "halluforge/jsonl.hpp"
#include "halluforge/pipeline.hpp"
#include "support.hpp"

using namespace halluforge;
namespace fs = std::filesystem;

namespace {

/// The fixture configs use relative paths, so pipeline runs happen inside a
/// scratch copy with the working directory moved there for the duration.
struct CwdGuard {
    fs::path previous = fs::current_path();
    explicit CwdGuard(const fs::path& to) { fs::current_path(to); }
    ~CwdGuard() {
        std::error_code ec;
        fs::current_path(previous, ec);
    }
};

void copy_world(const std::string& name, const fs::path& dst) {
    fs::path src = hft::fixture_root() / name;
    fs::create_directories(dst);
    fs::copy_file(src / "config.toml", dst / "config.toml");
    for (const char* dir : {"inputs", "fixtures"})
        fs::copy(src / dir, dst / dir, fs::copy_options::recursive);
}

std::vector<StageResult> run_world(const fs::path& dir, std::uint64_t* seed = nullptr) {
    CwdGuard guard(dir);
    PipelineConfig cfg = load_config("config.toml");
    if (seed) cfg.seed = *seed;
    return run_pipeline(cfg);
}

}  // namespace

TEST_CASE("the benchmark chain is byte-identical across independent runs") {
    hft::TempDir tmp;
    copy_world("golden50", tmp / "a");
    copy_world("golden50", tmp / "b");

    auto first = run_world(tmp / "a");
    auto second = run_world(tmp / "b");

    REQUIRE(first.size() == 5);
    std::vector<std::string> order;
    for (const auto& r : first) {
        order.push_back(r.name);
        CHECK(r.ran);
        CHECK_FALSE(r.partial);
    }
    CHECK(order == std::vector<std::string>{"pool", "annotate", "adversary", "questions",
                                            "evaluate"});
    REQUIRE(second.size() == 5);

    // Frozen content addresses pin the whole run, and the two directories
    // must agree byte for byte.
    const std::map<std::string, std::string> expected = {
        {"selected.jsonl", "df928493d01f96c0"},  {"records.jsonl", "b95ec31e692dedd0"},
        {"triples.jsonl", "8179664bda686ab6"},   {"benchmark.jsonl", "3e52bbb1a43e3a38"},
        {"report.json", "9535821a3f6ad256"},
    };
    for (const auto& [file, digest] : expected) {
        fs::path a = tmp / "a" / "out" / file;
        fs::path b = tmp / "b" / "out" / file;
        CHECK_MESSAGE(digest_file(a) == digest, file << " drifted from its pinned digest");
        CHECK_MESSAGE(hft::read_file(a) == hft::read_file(b), file << " differs between runs");
    }

    // Manifests agree too, apart from the wall-clock stamp.
    for (const auto& [file, digest] : expected) {
        auto ma = read_manifest(tmp / "a" / "out" / file);
        auto mb = read_manifest(tmp / "b" / "out" / file);
        REQUIRE(ma.has_value());
        REQUIRE(mb.has_value());
        ma->timestamp.clear();
        mb->timestamp.clear();
        CHECK(*ma == *mb);
    }
}

TEST_CASE("a finished run is a no-op until an input or the config changes") {
    hft::TempDir tmp;
    copy_world("golden50", tmp.path());

    auto first = run_world(tmp.path());
    for (const auto& r : first) CHECK(r.ran);

    auto second = run_world(tmp.path());
    for (const auto& r : second) CHECK_FALSE(r.ran);

    // Touching one input only wakes the stage that reads it. The appended
    // blank line changes the bytes but not the parsed records.
    {
        std::ofstream app(tmp / "inputs" / "responses.jsonl", std::ios::app);
        app << "\n";
    }
    auto third = run_world(tmp.path());
    for (const auto& r : third) {
        CHECK(r.ran == (r.name == "evaluate"));
    }

    std::uint64_t reseed = 999;
    auto fourth = run_world(tmp.path(), &reseed);
    for (const auto& r : fourth) CHECK(r.ran);
}

TEST_CASE("the preference chain reproduces its pinned artifacts and quotas") {
    hft::TempDir tmp;
    copy_world("prefs20", tmp.path());

    auto results = run_world(tmp.path());
    REQUIRE(results.size() == 4);
    CHECK(results[0].name == "prefs-build");
    CHECK(results[1].name == "prefs-weigh");
    CHECK(results[2].name == "compose");
    CHECK(results[3].name == "export");

    CHECK(digest_file(tmp / "out" / "pairs.jsonl") == "b158585afbc161f1");
    CHECK(digest_file(tmp / "out" / "weighted.jsonl") == "62c48534cf45a097");
    CHECK(digest_file(tmp / "out" / "composed.jsonl") == "9e286ed77b9adac9");
    CHECK(digest_file(tmp / "out" / "train.jsonl") == "94d8a5ffb799b6e1");

    // 20 samples at a 5:5:6:9:5 ratio round to these per-task quotas.
    StatsSummary stats = collect_stats(tmp / "out" / "composed.jsonl");
    CHECK(stats.records == 20);
    CHECK(stats.task_counts.at("cpq") == 4);
    CHECK(stats.task_counts.at("tpq") == 3);
    CHECK(stats.task_counts.at("pope") == 4);
    CHECK(stats.task_counts.at("description") == 6);
    CHECK(stats.task_counts.at("attribute") == 3);

    // The trainer hand-off is flat: one weighted text pair per line.
    auto lines = read_jsonl<json>(tmp / "out" / "train.jsonl");
    REQUIRE(lines.size() == 20);
    for (const char* key : {"prompt", "image_ref", "chosen", "rejected", "weight"})
        CHECK(lines.front().contains(key));
}

TEST_CASE("stage planning follows the configured inputs") {
    PipelineConfig cfg;
    cfg.tasks = "tasks.jsonl";
    CHECK(plan_stages(cfg) == std::vector<std::string>{"prefs-build", "prefs-weigh"});
    cfg.total = 10;
    CHECK(plan_stages(cfg) ==
          std::vector<std::string>{"prefs-build", "prefs-weigh", "compose", "export"});

    PipelineConfig bench;
    bench.embeddings = "embeddings.jsonl";
    bench.pool_k = 5;
    bench.candidates = "candidates.jsonl";
    CHECK(plan_stages(bench) ==
          std::vector<std::string>{"pool", "annotate", "adversary", "questions"});
    bench.responses = "responses.jsonl";
    CHECK(plan_stages(bench).back() == "evaluate");

    PipelineConfig filter;
    filter.captions = "captions.jsonl";
    filter.quality = "quality.jsonl";
    CHECK(plan_stages(filter) == std::vector<std::string>{"filter"});

    PipelineConfig empty;
    CHECK_THROWS_WITH_AS(plan_stages(empty), doctest::Contains("config drives no stages"),
                         Error);

    PipelineConfig no_k;
    no_k.embeddings = "embeddings.jsonl";
    CHECK_THROWS_WITH_AS(plan_stages(no_k), doctest::Contains("pool.k must be set"), Error);

    PipelineConfig no_cand;
    no_cand.embeddings = "embeddings.jsonl";
    no_cand.pool_k = 5;
    CHECK_THROWS_WITH_AS(plan_stages(no_cand),
                         doctest::Contains("annotate.candidates must be set"), Error);

    PipelineConfig no_quality;
    no_quality.captions = "captions.jsonl";
    CHECK_THROWS_WITH_AS(plan_stages(no_quality),
                         doctest::Contains("pool.quality must be set"), Error);
}

TEST_CASE("stage runs guard their names, inputs and windows") {
    PipelineConfig cfg;
    cfg.tasks = "absent.jsonl";

    CHECK_THROWS_WITH_AS(run_stage(cfg, "bogus"), doctest::Contains("unknown stage 'bogus'"),
                         Error);
    CHECK_THROWS_WITH_AS(run_stage(cfg, "prefs-build"),
                         doctest::Contains("input 'tasks' missing"), Error);

    cfg.total = 10;
    CHECK_THROWS_WITH_AS(run_pipeline(cfg, "nowhere", ""),
                         doctest::Contains("not in the planned chain"), Error);
    CHECK_THROWS_WITH_AS(run_pipeline(cfg, "export", "prefs-build"),
                         doctest::Contains("stage window is inverted"), Error);
}

TEST_CASE("the filter stage writes retained captions and an audit trail") {
    hft::TempDir tmp;
    PipelineConfig cfg;
    cfg.out_dir = tmp / "out";
    cfg.captions = tmp / "captions.jsonl";
    cfg.quality = tmp / "quality.jsonl";
    cfg.max_perplexity = 50.0;
    cfg.min_concrete = 2;

    auto caption_line = [](const std::string& id) {
        return serialize_line(json{{"id", id}, {"text", "A dog near a tree."}});
    };
    hft::write_file(cfg.captions, caption_line("c1") + "\n" + caption_line("c2") + "\n" +
                                      caption_line("c3") + "\n" + caption_line("c4") + "\n" +
                                      caption_line("c5") + "\n");

    auto quality_line = [](const std::string& id, double ppl, bool syntax, int concrete) {
        return serialize_line(json{{"id", id},
                                   {"perplexity", ppl},
                                   {"syntax_ok", syntax},
                                   {"concrete_object_count", concrete}});
    };
    hft::write_file(cfg.quality, quality_line("c1", 20.0, true, 3) + "\n" +
                                     quality_line("c2", 20.0, false, 3) + "\n" +
                                     quality_line("c3", 80.0, true, 3) + "\n" +
                                     quality_line("c4", 20.0, true, 1) + "\n");
    // c5 has no quality record at all.

    StageResult result = run_stage(cfg, "filter");
    CHECK(result.ran);

    auto retained = read_jsonl<Caption>(cfg.out_dir / "captions_filtered.jsonl");
    REQUIRE(retained.size() == 1);
    CHECK(retained.front().id == "c1");

    auto audit = read_jsonl<json>(cfg.out_dir / "captions_audit.jsonl");
    REQUIRE(audit.size() == 5);
    CHECK(audit[0].at("retained") == true);
    CHECK_FALSE(audit[0].contains("drop_reason"));
    CHECK(audit[1].at("drop_reason") == "syntax check failed");
    CHECK(audit[2].at("drop_reason") == "perplexity above threshold");
    CHECK(audit[3].at("drop_reason") == "too few concrete objects");
    CHECK(audit[4].at("drop_reason") ==
          "scorer failure: no quality record for caption 'c5'");
    CHECK_FALSE(audit[4].contains("perplexity"));

    auto manifest = read_manifest(cfg.out_dir / "captions_filtered.jsonl");
    REQUIRE(manifest.has_value());
    CHECK(manifest->stats.at("in") == 5);
    CHECK(manifest->stats.at("retained") == 1);

    CHECK_FALSE(run_stage(cfg, "filter").ran);
}

TEST_CASE("artifact statistics bucket weights and distances") {
    hft::TempDir tmp;

    auto sample = [](const std::string& id, TaskType task, GenStrategy strategy,
                     std::optional<int> weight, std::optional<double> distance) {
        PreferenceSample s;
        s.id = id;
        s.image_id = "img";
        s.instruction = "q";
        s.chosen = "a";
        s.rejected = "b";
        s.task = task;
        s.gen_strategy = strategy;
        s.weight = weight;
        s.distance = distance;
        return serialize_record(s);
    };
    hft::write_file(
        tmp / "prefs.jsonl",
        sample("p1", TaskType::cpq, GenStrategy::unilateral, 1, 0.05) + "\n" +
            sample("p2", TaskType::cpq, GenStrategy::posthoc, 2, 0.19) + "\n" +
            sample("p3", TaskType::description, GenStrategy::posthoc, 3, 1.99) + "\n" +
            sample("p4", TaskType::description, GenStrategy::unilateral, std::nullopt, 2.0) +
            "\n" + sample("p5", TaskType::description, GenStrategy::unilateral, 5,
                          std::nullopt) +
            "\n");

    StatsSummary stats = collect_stats(tmp / "prefs.jsonl");
    CHECK(stats.type == RecordType::preference_sample);
    CHECK(stats.records == 5);
    CHECK(stats.task_counts.at("cpq") == 2);
    CHECK(stats.task_counts.at("description") == 3);
    CHECK(stats.strategy_counts.at("unilateral") == 3);
    CHECK(stats.strategy_counts.at("posthoc") == 2);
    CHECK(stats.weight_hist == std::array<std::size_t, 3>{1, 1, 1});
    CHECK(stats.weight_missing == 2);  // absent and out-of-range both count
    CHECK(stats.distance_hist[0] == 2);
    CHECK(stats.distance_hist[9] == 2);  // 2.0 lands in the last bucket
    CHECK(stats.distance_missing == 1);

    json j = stats_to_json(stats);
    CHECK(j.at("weight_hist").at("missing") == 2);
    CHECK(j.at("distance_hist").at("[1.8,2.0)") == 2);
    CHECK(j.at("type") == "preference-sample");

    std::string text = render_stats(stats);
    CHECK(text.find("records: 5\n") != std::string::npos);
    CHECK(text.find("task description: 3\n") != std::string::npos);
    CHECK(text.find("weight 2: 1\n") != std::string::npos);
    CHECK(text.find("weight missing: 2\n") != std::string::npos);
    CHECK(text.find("distance [0.0,0.2): 2\n") != std::string::npos);
    CHECK(text.find("distance [0.2,0.4)") == std::string::npos);  // empty buckets skipped
}

TEST_CASE("statistics recognize question kinds, refuse mixed files and zero out on empty") {
    hft::TempDir tmp;

    BenchmarkItem item;
    item.image_id = "img1";
    item.questions = {
        {"Is there a cat?", QuestionKind::rec_pos, ObjectLabel("cat"), GoldAnswer::yes},
        {"Is there a harp?", QuestionKind::rec_rnd, ObjectLabel("harp"), GoldAnswer::no},
        {"Is there a fork?", QuestionKind::rec_adv, ObjectLabel("fork"), GoldAnswer::no},
        {"Describe the scene.", QuestionKind::adp, ObjectLabel("fork"),
         GoldAnswer::absent_object},
    };
    hft::write_file(tmp / "bench.jsonl", serialize_record(item) + "\n");
    StatsSummary bench = collect_stats(tmp / "bench.jsonl");
    CHECK(bench.type == RecordType::benchmark_item);
    for (const char* kind : {"rec_pos", "rec_rnd", "rec_adv", "adp"})
        CHECK(bench.kind_counts.at(kind) == 1);
    CHECK(render_stats(bench).find("kind adp: 1\n") != std::string::npos);

    hft::write_file(tmp / "empty.jsonl", "");
    StatsSummary empty = collect_stats(tmp / "empty.jsonl");
    CHECK(empty.type == RecordType::auto_detect);
    CHECK(empty.records == 0);
    CHECK(render_stats(empty) == "type: auto\nrecords: 0\n");

    EmbeddedCaption cap;
    cap.id = "c1";
    cap.text = "A cat.";
    cap.vector = {1.0};
    hft::write_file(tmp / "mixed.jsonl",
                    serialize_record(cap) + "\n" + serialize_record(item) + "\n");
    CHECK_THROWS_WITH_AS(collect_stats(tmp / "mixed.jsonl"),
                         doctest::Contains("mixed record types"), Error);

    hft::write_file(tmp / "odd.jsonl", "{\"zork\":1}\n");
    CHECK_THROWS_WITH_AS(collect_stats(tmp / "odd.jsonl"),
                         doctest::Contains("unrecognized record shape"), Error);
}

TEST_CASE("preference task records round-trip through JSON") {
    PrefTask task;
    task.id = "t1";
    task.image_id = "img1";
    task.task = TaskType::pope;
    task.strategy = GenStrategy::inversion;
    task.query = "Is there a bench?";
    task.object = "bench";
    task.object_present = true;
    task.correct_answer = "Yes, by the path.";

    json j;
    to_json(j, task);
    PrefTask back = j.get<PrefTask>();
    CHECK(back == task);

    // Older task files omit the optional hint fields.
    json lean{{"id", "t2"},
              {"image_id", "img2"},
              {"task", "description"},
              {"strategy", "posthoc"},
              {"query", "Describe the image."}};
    PrefTask sparse = lean.get<PrefTask>();
    CHECK(sparse.object.empty());
    CHECK_FALSE(sparse.object_present);
    CHECK(sparse.correct_answer.empty());
}

TEST_CASE("evaluation reports serialize their four metric blocks") {
    EvalReport report;
    report.config_digest = "cafe";
    report.partial = true;
    report.adp.metric = "adp";
    report.adp.value = 75.0;

    json j = eval_report_to_json(report);
    CHECK(j.at("config_digest") == "cafe");
    CHECK(j.at("partial") == true);
    for (const char* key : {"rec_pos", "rec_rnd", "rec_adv", "adp"}) {
        CHECK(j.at("metrics").contains(key));
        CHECK(j.at("metrics").at(key).contains("value"));
        CHECK(j.at("metrics").at(key).contains("verdicts"));
    }
    CHECK(j.at("metrics").at("adp").at("value") == 75.0);
}
