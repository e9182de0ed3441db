#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "halluforge/datamodel.hpp"
#include "halluforge/digest.hpp"
#include "halluforge/jsonl.hpp"
#include "halluforge/rng.hpp"
#include "halluforge/text.hpp"
#include "support.hpp"

using namespace halluforge;

TEST_CASE("label normalization is lowercase, trimmed, single-spaced and idempotent") {
    CHECK(text::normalize_label("Baseball  Cap ") == "baseball cap");
    CHECK(text::normalize_label("\t Stop\nSign") == "stop sign");
    CHECK(text::normalize_label("dog") == "dog");
    CHECK(text::normalize_label("") == "");

    // Idempotence over a batch of messy inputs.
    for (const char* raw : {"A  B", " a ", "MiXeD CaSe", "x\t\ty", "  "}) {
        std::string once = text::normalize_label(raw);
        CHECK(text::normalize_label(once) == once);
    }
}

TEST_CASE("yes/no parsing keys off the first alphabetic token") {
    CHECK(text::parses_as_yes("Yes, it is."));
    CHECK(text::parses_as_yes("  yes"));
    CHECK(text::parses_as_yes("YES!"));
    CHECK_FALSE(text::parses_as_yes("No."));
    CHECK_FALSE(text::parses_as_yes("There might be one."));
    CHECK_FALSE(text::parses_as_yes("Maybe yes"));
    CHECK_FALSE(text::parses_as_yes("yesterday was fine"));  // token is "yesterday"
    CHECK_FALSE(text::parses_as_yes(""));
    CHECK_FALSE(text::parses_as_yes("123"));
}

TEST_CASE("sentence splitting respects abbreviations and keeps punctuation") {
    auto s = text::split_sentences("A cat sits. A dog runs! Really? Yes.");
    REQUIRE(s.size() == 4);
    CHECK(s[0] == "A cat sits.");
    CHECK(s[1] == "A dog runs!");
    CHECK(s[2] == "Really?");
    CHECK(s[3] == "Yes.");

    auto abbr = text::split_sentences("Dr. Smith waved, e.g. twice. Then he left.");
    REQUIRE(abbr.size() == 2);
    CHECK(abbr[0] == "Dr. Smith waved, e.g. twice.");

    CHECK(text::split_sentences("").empty());
    CHECK(text::split_sentences("no terminator at all").size() == 1);
}

TEST_CASE("substitute and occurrence counting") {
    CHECK(text::substitute("Is a {object} here?", "{object}", "vase") == "Is a vase here?");
    CHECK(text::count_occurrences("{x} and {x}", "{x}") == 2);
    CHECK(text::count_occurrences("none", "{x}") == 0);
    CHECK(text::contains_normalized("The Baseball  Cap is red", "baseball cap"));
    CHECK_FALSE(text::contains_normalized("capless", "baseball cap"));
}

TEST_CASE("uniform_below is unbiased enough and in range") {
    Rng rng(42);
    std::vector<std::size_t> counts(7, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
        auto v = uniform_below(rng, 7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (auto c : counts) {
        double freq = double(c) / draws;
        CHECK(freq == doctest::Approx(1.0 / 7).epsilon(0.1));
    }
    CHECK_THROWS_AS(uniform_below(rng, 0), Error);
}

TEST_CASE("weighted_index follows integer weights exactly in expectation") {
    Rng rng(7);
    std::vector<std::uint64_t> weights = {1, 2, 3};
    std::vector<std::size_t> counts(3, 0);
    const int draws = 60000;
    for (int i = 0; i < draws; ++i) ++counts[weighted_index(rng, weights)];
    CHECK(double(counts[0]) / draws == doctest::Approx(1.0 / 6).epsilon(0.1));
    CHECK(double(counts[1]) / draws == doctest::Approx(2.0 / 6).epsilon(0.1));
    CHECK(double(counts[2]) / draws == doctest::Approx(3.0 / 6).epsilon(0.05));
}

TEST_CASE("sample_without_replacement yields distinct indices in draw order") {
    Rng rng(99);
    auto picks = sample_without_replacement(rng, 10, 10);
    std::set<std::size_t> unique(picks.begin(), picks.end());
    CHECK(unique.size() == 10);
    CHECK(*unique.rbegin() == 9);

    Rng a(5), b(5);
    CHECK(sample_without_replacement(a, 100, 7) == sample_without_replacement(b, 100, 7));
}

TEST_CASE("derive_seed is stable and key-sensitive") {
    auto s1 = derive_seed(413, "pool");
    CHECK(s1 == derive_seed(413, "pool"));
    CHECK(s1 != derive_seed(413, "pool2"));
    CHECK(s1 != derive_seed(414, "pool"));
}

TEST_CASE("fnv1a64 matches the reference offset basis and digests hex-encode") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(to_hex(0) == "0000000000000000");
    CHECK(to_hex(0xcbf29ce484222325ull) == "cbf29ce484222325");
    CHECK(digest_json(json{{"b", 1}, {"a", 2}}) == digest_json(json{{"a", 2}, {"b", 1}}));
}

TEST_CASE("serialize_line emits sorted keys without whitespace and rejects non-finite") {
    json j = {{"zeta", 1}, {"alpha", true}, {"mid", "x"}};
    CHECK(serialize_line(j) == R"({"alpha":true,"mid":"x","zeta":1})");

    json bad = {{"w", std::nan("")}};
    CHECK_THROWS_WITH_AS(serialize_line(bad), doctest::Contains("non-finite"), Error);
}

TEST_CASE("serialization round-trips every domain type") {
    ImageRecord rec;
    rec.id = "img9";
    rec.source = ImageSource::detector;
    rec.caption = "A street.";
    rec.extra_captions = {"Another view."};
    rec.present_objects = {ObjectLabel("car"), ObjectLabel("bus"), ObjectLabel("dog")};
    rec.absent_verified = {ObjectLabel("boat")};
    rec.triple = ObjectTriple{ObjectLabel("car"), ObjectLabel("kite"), ObjectLabel("boat")};
    CHECK(deserialize_record<ImageRecord>(serialize_record(rec)) == rec);

    BenchmarkItem item;
    item.image_id = "img9";
    item.subset = BenchmarkSubset::florence_like;
    item.questions = {
        {"Is a car present in the image? Please just answer yes or no.", QuestionKind::rec_pos,
         ObjectLabel("car"), GoldAnswer::yes},
        {"Is a kite present in the image? Please just answer yes or no.", QuestionKind::rec_rnd,
         ObjectLabel("kite"), GoldAnswer::no},
        {"Is a boat present in the image? Please just answer yes or no.", QuestionKind::rec_adv,
         ObjectLabel("boat"), GoldAnswer::no},
        {"What color is the boat?", QuestionKind::adp, ObjectLabel("boat"),
         GoldAnswer::absent_object},
    };
    CHECK(deserialize_record<BenchmarkItem>(serialize_record(item)) == item);

    PreferenceSample sample;
    sample.id = "p1";
    sample.image_id = "img9";
    sample.instruction = "Describe the image.";
    sample.chosen = "A car.";
    sample.rejected = "A boat.";
    sample.task = TaskType::description;
    sample.gen_strategy = GenStrategy::posthoc;
    sample.weight = 3;
    sample.norm_weight = 1.5;
    sample.distance = 1.0;
    CHECK(deserialize_record<PreferenceSample>(serialize_record(sample)) == sample);

    LogProbPair lp{"s1", -10.5, -12.25, -11.0, -11.75};
    CHECK(deserialize_record<LogProbPair>(serialize_record(lp)) == lp);

    EmbeddedCaption ec{"c1", "hello", {0.25, -0.5}};
    CHECK(deserialize_record<EmbeddedCaption>(serialize_record(ec)) == ec);

    RunManifest m;
    m.pipeline_stage = "pool";
    m.config_digest = "abc";
    m.global_seed = 413;
    m.input_digests = {{"in.jsonl", "0011223344556677"}};
    m.stats = {{"selected", 40}};
    m.timestamp = "2026-01-01T00:00:00Z";
    CHECK(deserialize_record<RunManifest>(serialize_record(m)) == m);

    // Equal records serialize to identical bytes.
    PreferenceSample again = sample;
    CHECK(serialize_record(again) == serialize_record(sample));
}

TEST_CASE("optional preference fields stay absent through a round trip") {
    PreferenceSample sample;
    sample.id = "p2";
    sample.image_id = "img1";
    sample.instruction = "q";
    sample.chosen = "a";
    sample.rejected = "b";
    std::string line = serialize_record(sample);
    CHECK(line.find("weight") == std::string::npos);
    auto back = deserialize_record<PreferenceSample>(line);
    CHECK_FALSE(back.weight.has_value());
    CHECK_FALSE(back.norm_weight.has_value());
    CHECK_FALSE(back.distance.has_value());
}

TEST_CASE("JsonlReader skips blank lines and reports malformed ones by number") {
    hft::TempDir dir;
    auto p = dir / "rows.jsonl";
    hft::write_file(p, "{\"a\":1}\n\n{\"b\":2}\n");
    JsonlReader reader(p);
    json j;
    REQUIRE(reader.next(j));
    CHECK(j["a"] == 1);
    REQUIRE(reader.next(j));
    CHECK(j["b"] == 2);
    CHECK_FALSE(reader.next(j));

    auto bad = dir / "bad.jsonl";
    hft::write_file(bad, "{\"a\":1}\nnot json\n");
    JsonlReader broken(bad);
    REQUIRE(broken.next(j));
    CHECK_THROWS_WITH_AS(broken.next(j), doctest::Contains(":2"), Error);

    CHECK_THROWS_AS(JsonlReader(dir / "missing.jsonl"), Error);
}

TEST_CASE("AtomicJsonlWriter only publishes on commit") {
    hft::TempDir dir;
    auto target = dir / "out.jsonl";

    {
        AtomicJsonlWriter writer(target);
        writer.write(json{{"k", 1}});
        // Nothing visible at the target path mid-write.
        CHECK_FALSE(std::filesystem::exists(target));
    }
    // Abandoned writer: neither target nor stray temp files remain.
    CHECK_FALSE(std::filesystem::exists(target));
    CHECK(std::filesystem::is_empty(dir.path()));

    {
        AtomicJsonlWriter writer(target);
        writer.write(json{{"k", 1}});
        writer.write(json{{"k", 2}});
        CHECK(writer.written() == 2);
        writer.commit();
    }
    CHECK(hft::read_file(target) == "{\"k\":1}\n{\"k\":2}\n");

    // Re-commit overwrites atomically with fresh content.
    {
        AtomicJsonlWriter writer(target);
        writer.write(json{{"k", 9}});
        writer.commit();
    }
    CHECK(hft::read_file(target) == "{\"k\":9}\n");
}

TEST_CASE("manifest write/read round-trips next to the artifact") {
    hft::TempDir dir;
    auto artifact = dir / "records.jsonl";
    hft::write_file(artifact, "{}\n");

    CHECK(manifest_path_for(artifact).filename() == "records.jsonl.manifest.json");
    CHECK_FALSE(read_manifest(artifact).has_value());

    RunManifest m;
    m.pipeline_stage = "annotate";
    m.config_digest = "deadbeefdeadbeef";
    m.global_seed = 7;
    m.input_digests["candidates.jsonl"] = "0123456789abcdef";
    m.stats["failed"] = 1;
    m.timestamp = "2026-02-03T04:05:06Z";
    write_manifest(artifact, m);

    auto back = read_manifest(artifact);
    REQUIRE(back.has_value());
    CHECK(*back == m);
    CHECK(back->tool_version == kToolVersion);
}

TEST_CASE("validate_dataset counts violations without aborting") {
    hft::TempDir dir;

    SUBCASE("clean image records") {
        std::vector<ImageRecord> recs;
        for (int i = 0; i < 10; ++i) {
            ImageRecord r;
            r.id = "img" + std::to_string(i);
            r.caption = "scene";
            r.present_objects = {ObjectLabel("a"), ObjectLabel("b"), ObjectLabel("c")};
            recs.push_back(r);
        }
        auto p = dir / "ok.jsonl";
        write_jsonl(p, recs);
        auto report = validate_dataset(p.string());
        CHECK(report.records == 10);
        CHECK(report.valid == 10);
        CHECK(report.ok());
        CHECK(report.detected == RecordType::image_record);
    }

    SUBCASE("overlapping present/absent sets flagged") {
        ImageRecord r;
        r.id = "imgX";
        r.present_objects = {ObjectLabel("cat"), ObjectLabel("rug"), ObjectLabel("tv")};
        r.absent_verified = {ObjectLabel("cat")};
        json j = r;
        auto p = dir / "overlap.jsonl";
        hft::write_file(p, serialize_line(j) + "\n");
        auto report = validate_dataset(p.string());
        CHECK(report.violation_count == 1);
        REQUIRE_FALSE(report.first_violations.empty());
        CHECK(report.first_violations[0].rule == "present-absent-disjoint");
    }

    SUBCASE("benchmark-stage minimum present objects") {
        ImageRecord r;
        r.id = "imgY";
        r.present_objects = {ObjectLabel("a"), ObjectLabel("b")};
        auto p = dir / "thin.jsonl";
        write_jsonl(p, std::vector<ImageRecord>{r});

        ValidateOptions lax;
        CHECK(validate_dataset(p.string(), lax).ok());

        ValidateOptions strict;
        strict.benchmark_stage = true;
        auto report = validate_dataset(p.string(), strict);
        CHECK(report.violation_count == 1);
        CHECK(report.first_violations[0].rule == "min-present-objects");
    }

    SUBCASE("malformed line is a violation, not a crash") {
        auto p = dir / "mixed.jsonl";
        hft::write_file(p, "{\"name\":\"dog\"}\n{oops\n{\"name\":\"cat\"}\n");
        ValidateOptions opts;
        opts.type = RecordType::object_label;
        auto report = validate_dataset(p.string(), opts);
        CHECK(report.records == 3);
        CHECK(report.valid == 2);
        CHECK(report.violation_count == 1);
        CHECK(report.first_violations[0].line == 2);
    }

    SUBCASE("triple consistency enforced") {
        ImageRecord r;
        r.id = "imgZ";
        r.present_objects = {ObjectLabel("a"), ObjectLabel("b"), ObjectLabel("c")};
        r.triple = ObjectTriple{ObjectLabel("a"), ObjectLabel("b"), ObjectLabel("zzz")};
        // triple.random "b" is present: violation.
        auto p = dir / "triple.jsonl";
        write_jsonl(p, std::vector<ImageRecord>{r});
        auto report = validate_dataset(p.string());
        CHECK_FALSE(report.ok());
    }

    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(validate_dataset((dir / "nope.jsonl").string()), Error);
    }
}

TEST_CASE("record type detection distinguishes the artifact shapes") {
    CHECK(detect_record_type(json{{"name", "dog"}}) == RecordType::object_label);
    CHECK(detect_record_type(json{{"id", "i"}, {"caption", "c"}, {"present_objects", json::array()}}) ==
          RecordType::image_record);
    CHECK(detect_record_type(json{{"image_id", "i"}, {"questions", json::array()}}) ==
          RecordType::benchmark_item);
    CHECK(detect_record_type(json{{"id", "p"}, {"chosen", "a"}, {"rejected", "b"}}) ==
          RecordType::preference_sample);
    CHECK(detect_record_type(json{{"sample_id", "s"}, {"logp_policy_chosen", -1.0}}) ==
          RecordType::logprob_pair);
    CHECK(detect_record_type(json{{"id", "c"}, {"text", "t"}, {"vector", json::array()}}) ==
          RecordType::embedded_caption);
    CHECK(detect_record_type(json{{"stray", 1}}) == RecordType::auto_detect);
}
