#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "halluforge/config.hpp"
#include "halluforge/datamodel.hpp"
#include "support.hpp"

using namespace halluforge;
namespace fs = std::filesystem;

TEST_CASE("the TOML reader covers tables, scalars, arrays and comments") {
    std::string text =
        "# benchmark settings\n"
        "seed = 413            # trailing comment survives strings\n"
        "name = \"fixture \\\"A\\\"\\n\"\n"
        "factor = -2.5\n"
        "big = 1e3\n"
        "flag = true\n"
        "off = false\n"
        "nums = [1, 2, 3]\n"
        "words = [\"a\", \"b#c\"]\n"
        "\n"
        "[backend]\n"
        "kind = \"mock\"\n"
        "retries = -1\n";

    json doc = parse_toml(text);
    CHECK(doc["seed"] == 413);
    CHECK(doc["name"] == "fixture \"A\"\n");
    CHECK(doc["factor"] == -2.5);
    CHECK(doc["big"] == 1000.0);
    CHECK(doc["flag"] == true);
    CHECK(doc["off"] == false);
    CHECK(doc["nums"] == json::array({1, 2, 3}));
    CHECK(doc["words"] == json::array({"a", "b#c"}));
    CHECK(doc["backend"]["kind"] == "mock");
    CHECK(doc["backend"]["retries"] == -1);
}

TEST_CASE("TOML errors carry the offending line number") {
    auto fails_with = [](const std::string& text, const std::string& needle) {
        try {
            parse_toml(text);
            FAIL_CHECK("expected a throw for: " << text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::config);
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                          e.what() << " should mention " << needle);
        }
    };

    fails_with("seed = 1\nseed 413\n", "toml line 2");
    fails_with("seed = 1\nseed 413\n", "expected key = value");
    fails_with("se ed = 1\n", "bad key");
    fails_with("seed = 1\nseed = 2\n", "duplicate key 'seed'");
    fails_with("name = \"abc\n", "unterminated string");
    fails_with("xs = [1, 2\n", "unterminated array");
    fails_with("[backend\n", "unterminated table header");
    fails_with("x = yes\n", "unrecognized value 'yes'");
    fails_with("x = 1.2.3\n", "malformed number");
    fails_with("s = \"a\\qb\"\n", "unknown escape");
    fails_with("backend = 1\n[backend]\n", "clashes with a key");
    fails_with("a.b = 1\n", "bad key");
    fails_with("xs = [[1]]\n", "unrecognized value");
}

TEST_CASE("the shipped TOML and JSON configs are digest-identical") {
    auto root = hft::fixture_root();
    for (const std::string fixture : {"golden50", "prefs20"}) {
        auto from_toml = load_config(root / fixture / "config.toml");
        auto from_json = load_config(root / fixture / "config.json");
        CHECK(config_digest(from_toml) == config_digest(from_json));
    }
    CHECK(config_digest(load_config(root / "golden50" / "config.toml")) == "37fc927cf4aae032");
    CHECK(config_digest(load_config(root / "prefs20" / "config.toml")) == "fff4fac302691e72");
}

TEST_CASE("unknown or ill-typed config keys are named in the error") {
    auto fails_with = [](const json& doc, const std::string& needle) {
        try {
            config_from_json(doc);
            FAIL_CHECK("expected a throw for: " << doc.dump());
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::config);
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                          e.what() << " should mention " << needle);
        }
    };

    fails_with(json{{"sneed", 1}}, "unknown config key 'sneed'");
    fails_with(json{{"backend", {{"kindd", "mock"}}}}, "unknown config key 'backend.kindd'");
    fails_with(json{{"backend", 3}}, "config section 'backend' must be a table");
    fails_with(json{{"backend", {{"kind", "pigeon"}}}}, "must be 'http' or 'mock'");
    fails_with(json{{"jobs", "many"}}, "config key 'jobs'");
    fails_with(json{{"prefs", {{"ratio", json::array({1, 2, 3})}}}}, "exactly 5 entries");
    fails_with(json(7), "must be a JSON object");
}

TEST_CASE("an empty document yields the defaults, which round-trip") {
    PipelineConfig from_empty = config_from_json(json::object());
    PipelineConfig defaults;
    CHECK(config_digest(from_empty) == config_digest(defaults));
    CHECK(config_digest(config_from_json(config_to_json(defaults))) ==
          config_digest(defaults));

    CHECK(from_empty.caption_prompt == "Describe the image.");
    CHECK(from_empty.ratio == std::array<std::size_t, 5>{5, 5, 6, 9, 5});
    CHECK(from_empty.verify.text_threshold == 0.4);
    CHECK(from_empty.verify.box_threshold == 0.35);
    CHECK(from_empty.verify.decision_threshold == 0.6);
}

TEST_CASE("range checks reject each out-of-band knob") {
    auto broken = [](auto mutate) {
        PipelineConfig cfg;
        mutate(cfg);
        CHECK_THROWS_AS(check_config(cfg), Error);
    };
    broken([](PipelineConfig& c) { c.verify.text_threshold = 0.0; });
    broken([](PipelineConfig& c) { c.verify.box_threshold = 1.0; });
    broken([](PipelineConfig& c) { c.verify.decision_threshold = -0.2; });
    broken([](PipelineConfig& c) { c.verify.crop_pad = 1.5; });
    broken([](PipelineConfig& c) { c.distance_threshold = 2.5; });
    broken([](PipelineConfig& c) { c.posthoc_distance_threshold = -0.1; });
    broken([](PipelineConfig& c) { c.beta = 0.0; });
    broken([](PipelineConfig& c) { c.jobs = 0; });
    broken([](PipelineConfig& c) { c.weight_fallback = 4; });
    broken([](PipelineConfig& c) { c.min_concrete = -1; });
    broken([](PipelineConfig& c) { c.max_perplexity = 0.0; });
    broken([](PipelineConfig& c) { c.top_k = 0; });
    broken([](PipelineConfig& c) { c.backend.max_retries = -1; });
    broken([](PipelineConfig& c) { c.backend.max_in_flight = 0; });
    broken([](PipelineConfig& c) { c.backend.backoff_factor = 0.9; });
    CHECK_NOTHROW(check_config(PipelineConfig{}));
}

TEST_CASE("the config loader dispatches on the file extension") {
    hft::TempDir tmp;
    hft::write_file(tmp / "a.toml", "seed = 7\n");
    hft::write_file(tmp / "a.json", R"({"seed": 7})");
    CHECK(config_digest(load_config(tmp / "a.toml")) ==
          config_digest(load_config(tmp / "a.json")));

    hft::write_file(tmp / "b.json", "seed = 7\n");
    CHECK_THROWS_WITH_AS(load_config(tmp / "b.json"), doctest::Contains("not valid JSON"),
                         Error);
    CHECK_THROWS_WITH_AS(load_config(tmp / "absent.toml"),
                         doctest::Contains("cannot open config file"), Error);
}

// ---------------------------------------------------------------------------
// CLI binary

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the installed CLI in `cwd` and captures both streams.
CliResult run_cli(const fs::path& cwd, const std::string& args) {
    fs::path out_file = cwd / "_stdout.txt";
    fs::path err_file = cwd / "_stderr.txt";
    std::string cmd = "cd '" + cwd.string() + "' && '" + HALLUFORGE_CLI_PATH + "' " + args +
                      " > '" + out_file.string() + "' 2> '" + err_file.string() + "'";
    int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    CliResult r;
    r.code = WEXITSTATUS(raw);
    r.out = hft::read_file(out_file);
    r.err = hft::read_file(err_file);
    fs::remove(out_file);
    fs::remove(err_file);
    return r;
}

/// Copies a shipped fixture's inputs (but never its scratch out/) so CLI
/// runs cannot dirty the source tree.
void copy_fixture(const std::string& name, const fs::path& dst) {
    fs::path src = hft::fixture_root() / name;
    fs::create_directories(dst);
    for (const char* entry : {"config.toml", "config.json"})
        fs::copy_file(src / entry, dst / entry);
    for (const char* dir : {"inputs", "fixtures"})
        fs::copy(src / dir, dst / dir, fs::copy_options::recursive);
}

}  // namespace

TEST_CASE("stage commands print the config digest and honor resume") {
    hft::TempDir tmp;
    copy_fixture("golden50", tmp.path());

    auto first = run_cli(tmp.path(), "pool select --config config.toml");
    CHECK(first.code == 0);
    CHECK(first.out.find("config digest: 37fc927cf4aae032") != std::string::npos);
    CHECK(first.out.find("stage pool: done") != std::string::npos);
    CHECK(fs::exists(tmp / "out" / "selected.jsonl"));

    auto again = run_cli(tmp.path(), "pool select --config config.toml");
    CHECK(again.code == 0);
    CHECK(again.out.find("stage pool: up to date") != std::string::npos);

    // A seed override changes the digest, so the stage reruns.
    auto reseeded = run_cli(tmp.path(), "pool select --config config.toml --seed 999");
    CHECK(reseeded.code == 0);
    CHECK(reseeded.out.find("37fc927cf4aae032") == std::string::npos);
    CHECK(reseeded.out.find("stage pool: done") != std::string::npos);
}

TEST_CASE("usage and config mistakes exit 2, runtime failures exit 1") {
    hft::TempDir tmp;

    CHECK(run_cli(tmp.path(), "--help").code == 0);
    CHECK(run_cli(tmp.path(), "frobnicate").code == 2);
    CHECK(run_cli(tmp.path(), "annotate").code == 2);  // --config missing

    hft::write_file(tmp / "bad.toml", "sneed = 1\n");
    auto bad = run_cli(tmp.path(), "annotate --config bad.toml");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown config key") != std::string::npos);

    hft::write_file(tmp / "empty.toml", "");
    auto no_plan = run_cli(tmp.path(), "run --config empty.toml");
    CHECK(no_plan.code == 2);

    copy_fixture("golden50", tmp / "g");
    auto bad_stage = run_cli(tmp / "g", "run --config config.toml --from nowhere");
    CHECK(bad_stage.code == 2);

    // Asking for a stage whose input file is absent is a runtime failure.
    hft::write_file(tmp / "half.toml", "[pool]\nembeddings = \"missing.jsonl\"\nk = 3\n");
    auto no_input = run_cli(tmp.path(), "pool select --config half.toml");
    CHECK(no_input.code == 1);
}

TEST_CASE("the stats command summarizes artifacts and tolerates empty files") {
    hft::TempDir tmp;
    hft::write_file(tmp / "empty.jsonl", "");
    auto empty = run_cli(tmp.path(), "stats empty.jsonl");
    CHECK(empty.code == 0);
    CHECK(empty.out.find("records: 0") != std::string::npos);

    PreferenceSample s;
    s.id = "p1";
    s.image_id = "img1";
    s.instruction = "Describe.";
    s.chosen = "A";
    s.rejected = "B";
    s.task = TaskType::cpq;
    s.gen_strategy = GenStrategy::unilateral;
    s.weight = 3;
    std::string line1 = serialize_record(s);
    s.id = "p2";
    s.weight = 1;
    hft::write_file(tmp / "prefs.jsonl", line1 + "\n" + serialize_record(s) + "\n");

    auto stats = run_cli(tmp.path(), "stats prefs.jsonl");
    CHECK(stats.code == 0);
    CHECK(stats.out.find("records: 2") != std::string::npos);
    CHECK(stats.out.find("task cpq: 2") != std::string::npos);
    CHECK(stats.out.find("weight 1: 1") != std::string::npos);
    CHECK(stats.out.find("weight 3: 1") != std::string::npos);

    auto as_json = run_cli(tmp.path(), "stats prefs.jsonl --json");
    CHECK(as_json.code == 0);
    json parsed = json::parse(as_json.out);
    CHECK(parsed.at("records") == 2);
    CHECK(parsed.at("weight_hist").at("3") == 1);
}

TEST_CASE("the validate command exits nonzero when invariants break") {
    hft::TempDir tmp;
    EmbeddedCaption good;
    good.id = "c1";
    good.text = "A cat.";
    good.vector = {1.0, 0.0};
    hft::write_file(tmp / "good.jsonl", serialize_record(good) + "\n");
    auto ok = run_cli(tmp.path(), "validate good.jsonl");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("violations: 0") != std::string::npos);

    auto typed = run_cli(tmp.path(), "validate good.jsonl --type embedded-caption");
    CHECK(typed.code == 0);

    hft::write_file(tmp / "bad.jsonl", serialize_record(good) + "\n:2\n");
    auto broken = run_cli(tmp.path(), "validate bad.jsonl");
    CHECK(broken.code == 1);
    CHECK(broken.out.find("line 2") != std::string::npos);

    CHECK(run_cli(tmp.path(), "validate bad.jsonl --type unicorn").code == 2);
}

TEST_CASE("the dpo commands evaluate files from disk") {
    hft::TempDir tmp;

    LogProbPair zero;
    zero.sample_id = "s1";  // all log-probs equal: margin 0, loss ln 2
    hft::write_file(tmp / "pairs.jsonl", serialize_record(zero) + "\n");

    auto loss = run_cli(tmp.path(), "dpo loss pairs.jsonl");
    CHECK(loss.code == 0);
    CHECK(loss.out.find("pairs: 1") != std::string::npos);
    CHECK(loss.out.find("0.6931471805599") != std::string::npos);

    auto gc = run_cli(tmp.path(), "dpo grad-check pairs.jsonl --beta 0.2");
    CHECK(gc.code == 0);
    CHECK(gc.out.find("max relative error") != std::string::npos);

    PreferenceSample s;
    s.id = "p1";
    s.image_id = "img1";
    s.instruction = "Describe.";
    s.chosen = "A";
    s.rejected = "B";
    s.norm_weight = 1.25;
    hft::write_file(tmp / "weighted.jsonl", serialize_record(s) + "\n");
    auto exported = run_cli(tmp.path(), "dpo export weighted.jsonl train.jsonl");
    CHECK(exported.code == 0);
    CHECK(fs::exists(tmp / "train.jsonl"));

    s.norm_weight.reset();
    hft::write_file(tmp / "unweighted.jsonl", serialize_record(s) + "\n");
    auto refused = run_cli(tmp.path(), "dpo export unweighted.jsonl t2.jsonl");
    CHECK(refused.code == 1);
    CHECK(refused.err.find("p1") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp / "t2.jsonl"));
}
