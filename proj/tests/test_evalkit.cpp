#include <doctest.h>

#include <algorithm>

#include "halluforge/evalkit.hpp"
#include "support.hpp"

using namespace halluforge;

namespace {

BenchmarkItem gold_item(const std::string& image_id, const std::string& present_obj,
                        const std::string& random_obj, const std::string& adv_obj) {
    BenchmarkItem item;
    item.image_id = image_id;
    item.questions = {
        {"Is there a " + present_obj + " in the image? Please just answer yes or no.",
         QuestionKind::rec_pos, ObjectLabel(present_obj), GoldAnswer::yes},
        {"Is there a " + random_obj + " in the image? Please just answer yes or no.",
         QuestionKind::rec_rnd, ObjectLabel(random_obj), GoldAnswer::no},
        {"Is there a " + adv_obj + " in the image? Please just answer yes or no.",
         QuestionKind::rec_adv, ObjectLabel(adv_obj), GoldAnswer::no},
        {"What color is the " + adv_obj + "?", QuestionKind::adp, ObjectLabel(adv_obj),
         GoldAnswer::absent_object},
    };
    return item;
}

ResponseRecord reply(const std::string& image_id, QuestionKind kind, const std::string& text) {
    return {BenchmarkItem::question_id(image_id, kind), "model-under-test", text};
}

const ItemVerdict& verdict_for(const MetricReport& report, const std::string& id) {
    auto it = std::find_if(report.verdicts.begin(), report.verdicts.end(),
                           [&](const ItemVerdict& v) { return v.id == id; });
    REQUIRE_MESSAGE(it != report.verdicts.end(), "no verdict for " << id);
    return *it;
}

}  // namespace

TEST_CASE("recognition accuracy applies the first-token parse rule") {
    std::vector<BenchmarkItem> gold = {
        gold_item("i1", "cat", "kite", "sofa"),
        gold_item("i2", "dog", "bus", "lamp"),
        gold_item("i3", "cow", "vase", "sink"),
        gold_item("i4", "hen", "tv", "rug"),
    };
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::rec_pos, "Yes, it is."),          // correct
        reply("i2", QuestionKind::rec_pos, "yes"),                  // correct
        reply("i3", QuestionKind::rec_pos, "There is a cow."),      // reads as no: incorrect
        reply("i4", QuestionKind::rec_pos, "Yes it could be"),      // correct
        reply("i1", QuestionKind::rec_rnd, "No."),                  // correct
        reply("i2", QuestionKind::rec_rnd, "There might be one."),  // reads as no: correct
        reply("i3", QuestionKind::rec_rnd, "Yes."),                 // incorrect
        reply("i4", QuestionKind::rec_rnd, "no, nothing"),          // correct
        reply("i1", QuestionKind::rec_adv, "No."),                  // correct
        reply("i2", QuestionKind::rec_adv, "Yes, clearly."),        // incorrect
        reply("i3", QuestionKind::rec_adv, "Absolutely not."),      // reads as no: correct
        // i4 rec_adv left unanswered: incorrect, flagged in its verdict
    };

    auto scores = score_recognition(responses, gold);
    CHECK(scores.rec_pos.value == 75.0);
    CHECK(scores.rec_pos.n == 4);
    CHECK(scores.rec_rnd.value == 75.0);
    CHECK(scores.rec_adv.value == 50.0);

    const auto& missing = verdict_for(scores.rec_adv, "i4#rec_adv");
    CHECK_FALSE(missing.correct);
    CHECK(missing.note == "missing response");
}

TEST_CASE("recognition scoring rejects duplicate responses and empty gold") {
    std::vector<BenchmarkItem> gold = {gold_item("i1", "cat", "kite", "sofa")};
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::rec_pos, "Yes."),
        reply("i1", QuestionKind::rec_pos, "No."),
    };
    CHECK_THROWS_WITH_AS(score_recognition(responses, gold),
                         doctest::Contains("duplicate response"), Error);
    CHECK_THROWS_AS(score_recognition({}, {}), Error);
}

TEST_CASE("recognition metrics ignore response ordering") {
    std::vector<BenchmarkItem> gold = {
        gold_item("i1", "cat", "kite", "sofa"),
        gold_item("i2", "dog", "bus", "lamp"),
    };
    std::vector<ResponseRecord> responses;
    for (const auto& item : gold) {
        responses.push_back(reply(item.image_id, QuestionKind::rec_pos, "Yes."));
        responses.push_back(reply(item.image_id, QuestionKind::rec_rnd, "No."));
        responses.push_back(reply(item.image_id, QuestionKind::rec_adv, "Yes."));
    }
    auto forward = score_recognition(responses, gold);
    std::reverse(responses.begin(), responses.end());
    auto backward = score_recognition(responses, gold);
    CHECK(forward.rec_pos.value == backward.rec_pos.value);
    CHECK(forward.rec_rnd.value == backward.rec_rnd.value);
    CHECK(forward.rec_adv.value == backward.rec_adv.value);
}

// ---------------------------------------------------------------------------
// Adversary presupposition

namespace {

/// Marks a response as maintaining the presupposition unless it carries an
/// explicit denial.
hft::FnJudge::Fn denial_judge() {
    return [](JudgeKind kind, const json& payload) -> std::string {
        REQUIRE(kind == JudgeKind::adp_presence);
        std::string caption = payload.at("caption").get<std::string>();
        bool denies = caption.find("There is no") != std::string::npos ||
                      caption.find("don't see") != std::string::npos;
        return json{{"present", !denies}}.dump();
    };
}

}  // namespace

TEST_CASE("AdP credits judged rejections: three of four is 75 percent") {
    std::vector<BenchmarkItem> gold = {
        gold_item("i1", "a", "b", "chair"),
        gold_item("i2", "a", "b", "vase"),
        gold_item("i3", "a", "b", "sofa"),
        gold_item("i4", "a", "b", "lamp"),
    };
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::adp, "There is no chair in the image."),
        reply("i2", QuestionKind::adp, "There is no vase here at all."),
        reply("i3", QuestionKind::adp, "The sofa is a deep crimson color."),  // maintained
        reply("i4", QuestionKind::adp, "I don't see a lamp anywhere."),
    };

    hft::FnJudge judge(denial_judge());
    auto report = score_adp(responses, gold, judge);
    CHECK(report.value == 75.0);
    CHECK(report.n == 4);
    CHECK_FALSE(report.partial);
    CHECK_FALSE(verdict_for(report, "i3#adp").correct);
    CHECK(verdict_for(report, "i1#adp").correct);
}

TEST_CASE("AdP judge sees the response text and the planted object") {
    std::vector<BenchmarkItem> gold = {gold_item("i1", "a", "b", "traffic cone")};
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::adp, "An orange cone."),
    };
    json seen;
    hft::FnJudge judge([&](JudgeKind, const json& payload) -> std::string {
        seen = payload;
        return R"({"present":true})";
    });
    score_adp(responses, gold, judge);
    CHECK(seen.at("caption") == "An orange cone.");
    CHECK(seen.at("adversary") == "traffic cone");
}

TEST_CASE("AdP scores all-maintaining responses as zero") {
    std::vector<BenchmarkItem> gold = {gold_item("i1", "a", "b", "chair"),
                                       gold_item("i2", "a", "b", "vase")};
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::adp, "The chair is wooden."),
        reply("i2", QuestionKind::adp, "A lovely blue vase."),
    };
    hft::FnJudge judge(denial_judge());
    CHECK(score_adp(responses, gold, judge).value == 0.0);
}

TEST_CASE("judge parse failures score as maintained, not as credit") {
    std::vector<BenchmarkItem> gold = {gold_item("i1", "a", "b", "chair"),
                                       gold_item("i2", "a", "b", "vase")};
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::adp, "There is no chair in the image."),
        reply("i2", QuestionKind::adp, "There is no vase in the image."),
    };
    hft::FnJudge judge([](JudgeKind, const json& payload) -> std::string {
        if (payload.at("caption").get<std::string>().find("vase") != std::string::npos)
            return "score: high";  // never parses, even after the repair re-prompt
        return R"({"present":false})";
    });
    auto report = score_adp(responses, gold, judge);
    CHECK(report.value == 50.0);
    CHECK(report.n == 2);
    const auto& flagged = verdict_for(report, "i2#adp");
    CHECK_FALSE(flagged.correct);
    CHECK(flagged.note == "judge reply unparseable; scored as maintained");
}

TEST_CASE("a judge lost mid-run yields a partial report") {
    std::vector<BenchmarkItem> gold = {gold_item("i1", "a", "b", "chair"),
                                       gold_item("i2", "a", "b", "vase"),
                                       gold_item("i3", "a", "b", "sofa")};
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::adp, "There is no chair in the image."),
        reply("i2", QuestionKind::adp, "A vase."),
        reply("i3", QuestionKind::adp, "There is no sofa."),
    };
    int calls = 0;
    hft::FnJudge judge([&](JudgeKind, const json&) -> std::string {
        if (++calls >= 2) fail(ErrorCode::backend_unavailable, "endpoint lost");
        return R"({"present":false})";
    });
    auto report = score_adp(responses, gold, judge);
    CHECK(report.partial);
    CHECK(report.n == 1);
    CHECK(report.value == 100.0);
}

TEST_CASE("a missing presupposition response counts against the model") {
    std::vector<BenchmarkItem> gold = {gold_item("i1", "a", "b", "chair"),
                                       gold_item("i2", "a", "b", "vase")};
    std::vector<ResponseRecord> responses = {
        reply("i1", QuestionKind::adp, "There is no chair in the image."),
    };
    hft::FnJudge judge(denial_judge());
    auto report = score_adp(responses, gold, judge);
    CHECK(report.n == 2);
    CHECK(report.value == 50.0);
    CHECK(verdict_for(report, "i2#adp").note == "missing response");
}

// ---------------------------------------------------------------------------
// Caption hallucination rates

namespace {

SynonymMap coco_ish_synonyms() {
    return {
        {"cat", "cat"},    {"kitten", "cat"},
        {"dog", "dog"},    {"car", "car"},
        {"sofa", "couch"}, {"couch", "couch"},
        {"fire hydrant", "fire hydrant"},
    };
}

}  // namespace

TEST_CASE("CHAIR rates on the two-caption fixture are 0.4 and 0.3") {
    std::vector<CaptionGold> captions;
    {
        CaptionGold g;
        g.image_id = "i1";
        g.present = {ObjectLabel("cat"), ObjectLabel("dog")};
        // 2 sentences, 4 mentions (cat, dog, dog, kitten->cat), all grounded.
        g.caption = "A cat sat with a dog. The dog watched a kitten.";
        captions.push_back(g);
    }
    {
        CaptionGold g;
        g.image_id = "i2";
        g.present = {ObjectLabel("car")};
        // 3 sentences, 6 mentions; sofa, dog and fire hydrant are hallucinated,
        // tainting the last two sentences.
        g.caption = "A car idles. A second car waits by the sofa. "
                    "A dog barks at the car near a fire hydrant.";
        captions.push_back(g);
    }

    auto scores = score_chair(captions, coco_ish_synonyms());
    CHECK(scores.chair_s.n == 5);
    CHECK(scores.chair_i.n == 10);
    CHECK(scores.chair_s.value == 0.4);
    CHECK(scores.chair_i.value == 0.3);

    CHECK(verdict_for(scores.chair_s, "i1").correct);
    CHECK_FALSE(verdict_for(scores.chair_s, "i2").correct);
}

TEST_CASE("longest synonym phrase wins and matches are whole-word") {
    SynonymMap synonyms = {
        {"fire hydrant", "fire hydrant"},
        {"fire", "fire"},
        {"cat", "cat"},
    };
    std::vector<CaptionGold> captions;
    CaptionGold g;
    g.image_id = "i1";
    g.present = {ObjectLabel("fire hydrant")};
    g.caption = "A fire hydrant stands by the scattered catalogs.";
    captions.push_back(g);

    auto scores = score_chair(captions, synonyms);
    // One mention: the two-word phrase, not a bare hallucinated "fire", and
    // "catalogs" must not read as a cat.
    CHECK(scores.chair_i.n == 1);
    CHECK(scores.chair_i.value == 0.0);
    CHECK(scores.chair_s.value == 0.0);
}

TEST_CASE("mentions flush against punctuation still count") {
    SynonymMap synonyms = {{"dog", "dog"}, {"cat", "cat"}};
    std::vector<CaptionGold> captions;
    CaptionGold g;
    g.image_id = "i1";
    g.present = {};
    g.caption = "There is a dog. A cat, too.";
    captions.push_back(g);

    auto scores = score_chair(captions, synonyms);
    CHECK(scores.chair_i.n == 2);
    CHECK(scores.chair_i.value == 1.0);
    CHECK(scores.chair_s.value == 1.0);
}

TEST_CASE("mention-free captions still count sentences in the CHAIR_s denominator") {
    SynonymMap synonyms = {{"cat", "cat"}};
    std::vector<CaptionGold> captions;
    CaptionGold g;
    g.image_id = "i1";
    g.present = {};
    g.caption = "Soft light falls. Nothing notable here.";
    captions.push_back(g);

    auto scores = score_chair(captions, synonyms);
    CHECK(scores.chair_s.n == 2);
    CHECK(scores.chair_s.value == 0.0);
    CHECK(scores.chair_i.n == 0);
    CHECK(scores.chair_i.value == 0.0);

    CHECK_THROWS_AS(score_chair({}, synonyms), Error);
}

TEST_CASE("CHAIR_i is zero whenever every mention is grounded") {
    SynonymMap synonyms = {{"cat", "cat"}, {"dog", "dog"}};
    std::vector<CaptionGold> captions;
    CaptionGold g;
    g.image_id = "i1";
    g.present = {ObjectLabel("cat"), ObjectLabel("dog")};
    g.caption = "A cat watches a dog. The dog sleeps.";
    captions.push_back(g);
    auto scores = score_chair(captions, synonyms);
    CHECK(scores.chair_i.n == 3);
    CHECK(scores.chair_i.value == 0.0);
    CHECK(scores.chair_s.value == 0.0);
}

// ---------------------------------------------------------------------------
// External benchmark aggregates

TEST_CASE("hallusion aggregate sums instance, question and figure accuracies") {
    SUBCASE("perfect run scores 300") {
        std::vector<GroupedVerdict> items;
        for (int i = 0; i < 8; ++i)
            items.push_back({"it" + std::to_string(i), "q" + std::to_string(i / 2),
                             "f" + std::to_string(i / 4), true});
        CHECK(aggregate_hallusion(items) == 300.0);
    }

    SUBCASE("one wrong instance sinks its whole question and figure group") {
        std::vector<GroupedVerdict> items = {
            {"a", "q1", "f1", true},
            {"b", "q1", "f1", false},
            {"c", "q2", "f2", true},
            {"d", "q2", "f2", true},
        };
        // aAcc 75, qAcc 50, fAcc 50
        CHECK(aggregate_hallusion(items) == 175.0);
    }

    SUBCASE("flipping any single verdict never raises the score") {
        std::vector<GroupedVerdict> items;
        for (int i = 0; i < 6; ++i)
            items.push_back({"it" + std::to_string(i), "q" + std::to_string(i / 3),
                             "f" + std::to_string(i / 2), true});
        double full = aggregate_hallusion(items);
        for (std::size_t flip = 0; flip < items.size(); ++flip) {
            auto copy = items;
            copy[flip].correct = false;
            CHECK(aggregate_hallusion(copy) < full);
        }
    }

    SUBCASE("items outside any group are a config error") {
        CHECK_THROWS_AS(aggregate_hallusion({}), Error);
        std::vector<GroupedVerdict> orphan = {{"a", "", "f1", true}};
        CHECK_THROWS_WITH_AS(aggregate_hallusion(orphan),
                             doctest::Contains("belongs to no question or figure group"), Error);
    }
}

TEST_CASE("MME aggregate sums accuracy and the all-or-nothing accuracy+") {
    SUBCASE("perfect pairs score 200") {
        std::vector<PairedVerdict> qs = {
            {"i1", true}, {"i1", true}, {"i2", true}, {"i2", true}};
        CHECK(aggregate_mme(qs) == 200.0);
    }

    SUBCASE("one image half-correct scores 125") {
        std::vector<PairedVerdict> qs = {
            {"i1", true}, {"i1", true}, {"i2", true}, {"i2", false}};
        CHECK(aggregate_mme(qs) == 125.0);
    }

    SUBCASE("flipping any single verdict never raises the score") {
        std::vector<PairedVerdict> qs = {
            {"i1", true}, {"i1", true}, {"i2", true}, {"i2", true}, {"i3", true}, {"i3", true}};
        double full = aggregate_mme(qs);
        for (std::size_t flip = 0; flip < qs.size(); ++flip) {
            auto copy = qs;
            copy[flip].correct = false;
            CHECK(aggregate_mme(copy) < full);
        }
    }

    SUBCASE("unpaired questions are a config error") {
        std::vector<PairedVerdict> qs = {{"i1", true}, {"i1", true}, {"i2", true}};
        CHECK_THROWS_WITH_AS(aggregate_mme(qs), doctest::Contains("requires exactly 2"), Error);
        CHECK_THROWS_AS(aggregate_mme({}), Error);
    }
}

// ---------------------------------------------------------------------------
// Contextual presence

TEST_CASE("presence scoring credits CPQ absences and TPQ presences") {
    // Judged present iff the answer opens with an affirmation.
    hft::FnJudge judge([](JudgeKind kind, const json& payload) -> std::string {
        REQUIRE(kind == JudgeKind::cpbench_presence);
        bool claims = payload.at("answer").get<std::string>().find("I see") == 0;
        return json{{"present", claims}}.dump();
    });

    std::vector<PresenceQuery> queries = {
        {"q1", TaskType::cpq, "Is there a ghost?", "There is nothing like that."},  // credited
        {"q2", TaskType::cpq, "Is there a fork?", "I see a fork."},                 // fp
        {"q3", TaskType::tpq, "Is there a cup?", "I see a cup."},                   // tp
        {"q4", TaskType::tpq, "Is there a bowl?", "Hard to tell."},                 // fn
    };
    auto scores = score_presence(queries, judge);
    CHECK(scores.accuracy.value == 50.0);
    CHECK(scores.accuracy.n == 4);
    // precision 1/2, recall 1/2
    CHECK(scores.f1 == doctest::Approx(0.5));
}

TEST_CASE("unparseable presence judgments read as a claimed object") {
    hft::FnJudge judge([](JudgeKind, const json&) -> std::string { return "who knows"; });
    std::vector<PresenceQuery> queries = {
        {"q1", TaskType::cpq, "Is there a ghost?", "No ghost."},
        {"q2", TaskType::tpq, "Is there a cup?", "A cup, yes."},
    };
    auto scores = score_presence(queries, judge);
    // cpq loses its credit, tpq keeps it.
    CHECK(scores.accuracy.value == 50.0);
    CHECK(verdict_for(scores.accuracy, "q1").note ==
          "judge reply unparseable; scored as present");
    CHECK(scores.f1 == doctest::Approx(2.0 / 3.0));  // precision 1/2, recall 1/1
}

TEST_CASE("presence scoring rejects non-presence tasks and empty input") {
    hft::FnJudge judge([](JudgeKind, const json&) -> std::string {
        return R"({"present":true})";
    });
    std::vector<PresenceQuery> bad = {{"q", TaskType::description, "x", "y"}};
    CHECK_THROWS_WITH_AS(score_presence(bad, judge), doctest::Contains("must be cpq or tpq"),
                         Error);
    CHECK_THROWS_AS(score_presence({}, judge), Error);
}
