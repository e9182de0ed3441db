#include "halluforge/evalkit.hpp"

#include <algorithm>

#include "halluforge/errors.hpp"
#include "halluforge/text.hpp"

namespace halluforge {

void to_json(json& j, const ResponseRecord& v) {
    j = json{{"question_id", v.question_id}, {"model_name", v.model_name}, {"text", v.text}};
}

void from_json(const json& j, ResponseRecord& v) {
    j.at("question_id").get_to(v.question_id);
    j.at("model_name").get_to(v.model_name);
    j.at("text").get_to(v.text);
}

void to_json(json& j, const ItemVerdict& v) {
    j = json{{"id", v.id}, {"correct", v.correct}, {"note", v.note}};
}

void to_json(json& j, const MetricReport& v) {
    j = json{{"metric", v.metric},   {"value", v.value},
             {"n", v.n},             {"partial", v.partial},
             {"config_digest", v.config_digest}, {"verdicts", v.verdicts}};
}

namespace {

std::map<std::string, const ResponseRecord*> index_responses(
    const std::vector<ResponseRecord>& responses) {
    std::map<std::string, const ResponseRecord*> by_id;
    for (const auto& r : responses) {
        auto [it, inserted] = by_id.emplace(r.question_id, &r);
        if (!inserted) {
            fail(ErrorCode::precondition,
                 "duplicate response for question '" + r.question_id + "'");
        }
    }
    return by_id;
}

double percent(std::size_t hits, std::size_t total) {
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

void finalize_accuracy(MetricReport& report) {
    std::size_t hits = 0;
    for (const auto& v : report.verdicts) hits += v.correct ? 1 : 0;
    report.n = report.verdicts.size();
    report.value = percent(hits, report.n);
}

}  // namespace

RecognitionScores score_recognition(const std::vector<ResponseRecord>& responses,
                                    const std::vector<BenchmarkItem>& gold) {
    auto by_id = index_responses(responses);

    RecognitionScores out;
    out.rec_pos.metric = "rec_pos";
    out.rec_rnd.metric = "rec_rnd";
    out.rec_adv.metric = "rec_adv";

    std::size_t seen = 0;
    for (const auto& item : gold) {
        for (const auto& q : item.questions) {
            MetricReport* report = nullptr;
            switch (q.kind) {
                case QuestionKind::rec_pos: report = &out.rec_pos; break;
                case QuestionKind::rec_rnd: report = &out.rec_rnd; break;
                case QuestionKind::rec_adv: report = &out.rec_adv; break;
                case QuestionKind::adp: continue;  // scored by the judge path
            }
            ++seen;

            ItemVerdict verdict;
            verdict.id = BenchmarkItem::question_id(item.image_id, q.kind);
            require(q.gold == GoldAnswer::yes || q.gold == GoldAnswer::no,
                    ErrorCode::precondition,
                    "recognition question '" + verdict.id + "' lacks a yes/no gold answer");

            auto found = by_id.find(verdict.id);
            if (found == by_id.end()) {
                verdict.correct = false;
                verdict.note = "missing response";
            } else {
                bool answered_yes = text::parses_as_yes(found->second->text);
                bool gold_yes = q.gold == GoldAnswer::yes;
                verdict.correct = answered_yes == gold_yes;
                if (text::first_alpha_token(found->second->text).empty()) {
                    verdict.note = "unparseable response";
                }
            }
            report->verdicts.push_back(std::move(verdict));
        }
    }
    require(seen > 0, ErrorCode::precondition, "no recognition questions to score");

    finalize_accuracy(out.rec_pos);
    finalize_accuracy(out.rec_rnd);
    finalize_accuracy(out.rec_adv);
    return out;
}

MetricReport score_adp(const std::vector<ResponseRecord>& responses,
                       const std::vector<BenchmarkItem>& gold, JudgeBackend& judge) {
    auto by_id = index_responses(responses);

    MetricReport report;
    report.metric = "adp";

    std::size_t credited = 0;
    std::size_t judged = 0;
    for (const auto& item : gold) {
        for (const auto& q : item.questions) {
            if (q.kind != QuestionKind::adp) continue;

            ItemVerdict verdict;
            verdict.id = BenchmarkItem::question_id(item.image_id, q.kind);

            auto found = by_id.find(verdict.id);
            if (found == by_id.end()) {
                verdict.correct = false;
                verdict.note = "missing response";
                report.verdicts.push_back(std::move(verdict));
                ++judged;
                continue;
            }

            json payload;
            payload["caption"] = found->second->text;
            payload["adversary"] = q.target_object.name();

            bool maintained = true;
            try {
                JudgeVerdict jv = judge_with_repair(judge, JudgeKind::adp_presence, payload);
                maintained = jv.present.value();
            } catch (const Error& e) {
                if (e.code() == ErrorCode::backend_unavailable) {
                    // Cannot finish scoring; hand back what was judged so far.
                    report.n = judged;
                    report.value = percent(credited, judged);
                    report.partial = true;
                    return report;
                }
                if (e.code() != ErrorCode::judge_parse) throw;
                verdict.note = "judge reply unparseable; scored as maintained";
            }

            verdict.correct = !maintained;
            credited += verdict.correct ? 1 : 0;
            ++judged;
            report.verdicts.push_back(std::move(verdict));
        }
    }
    require(judged > 0, ErrorCode::precondition, "no presupposition questions to score");

    report.n = judged;
    report.value = percent(credited, judged);
    return report;
}

namespace {

struct Mention {
    std::string canonical;
    bool hallucinated = false;
};

std::vector<std::string> split_words(const std::string& normalized) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : normalized) {
        if (c == ' ') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

/// Scans the sentence for synonym-map phrases, longest phrase first at each
/// position; every occurrence counts as one mention. Punctuation acts as a
/// word boundary so "a dog." still mentions the dog.
std::vector<Mention> extract_mentions(const std::string& sentence, const SynonymMap& synonyms,
                                      std::size_t max_phrase_words, const ObjectSet& present) {
    std::vector<Mention> mentions;
    std::string scrubbed = text::normalize_label(sentence);
    for (char& c : scrubbed) {
        bool word_char = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (!word_char) c = ' ';
    }
    std::vector<std::string> words = split_words(scrubbed);
    std::size_t i = 0;
    while (i < words.size()) {
        std::size_t longest = std::min(max_phrase_words, words.size() - i);
        bool matched = false;
        for (std::size_t len = longest; len >= 1; --len) {
            std::string phrase = words[i];
            for (std::size_t k = 1; k < len; ++k) phrase += " " + words[i + k];
            auto it = synonyms.find(phrase);
            if (it != synonyms.end()) {
                Mention m;
                m.canonical = it->second;
                m.hallucinated = present.find(ObjectLabel(it->second)) == present.end();
                mentions.push_back(std::move(m));
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) ++i;
    }
    return mentions;
}

}  // namespace

ChairScores score_chair(const std::vector<CaptionGold>& captions, const SynonymMap& synonyms) {
    require(!captions.empty(), ErrorCode::precondition, "no captions to score");

    SynonymMap normalized;
    std::size_t max_phrase_words = 1;
    for (const auto& [phrase, canonical] : synonyms) {
        std::string key = text::normalize_label(phrase);
        normalized[key] = text::normalize_label(canonical);
        max_phrase_words = std::max(max_phrase_words, split_words(key).size());
    }

    ChairScores out;
    out.chair_s.metric = "chair_s";
    out.chair_i.metric = "chair_i";

    std::size_t sentences_total = 0;
    std::size_t sentences_bad = 0;
    std::size_t mentions_total = 0;
    std::size_t mentions_bad = 0;

    for (const auto& cap : captions) {
        std::size_t cap_sentences_bad = 0;
        std::size_t cap_mentions = 0;
        std::size_t cap_mentions_bad = 0;

        std::vector<std::string> sentences = text::split_sentences(cap.caption);
        for (const auto& sentence : sentences) {
            auto mentions = extract_mentions(sentence, normalized, max_phrase_words, cap.present);
            bool bad = false;
            for (const auto& m : mentions) {
                ++cap_mentions;
                if (m.hallucinated) {
                    ++cap_mentions_bad;
                    bad = true;
                }
            }
            if (bad) ++cap_sentences_bad;
        }

        sentences_total += sentences.size();
        sentences_bad += cap_sentences_bad;
        mentions_total += cap_mentions;
        mentions_bad += cap_mentions_bad;

        ItemVerdict verdict;
        verdict.id = cap.image_id;
        verdict.correct = cap_mentions_bad == 0;
        verdict.note = std::to_string(cap_mentions_bad) + "/" + std::to_string(cap_mentions) +
                       " hallucinated mentions over " + std::to_string(sentences.size()) +
                       " sentences";
        out.chair_s.verdicts.push_back(verdict);
        out.chair_i.verdicts.push_back(std::move(verdict));
    }

    out.chair_s.n = sentences_total;
    out.chair_s.value = sentences_total == 0 ? 0.0
                                             : static_cast<double>(sentences_bad) /
                                                   static_cast<double>(sentences_total);
    out.chair_i.n = mentions_total;
    out.chair_i.value = mentions_total == 0 ? 0.0
                                            : static_cast<double>(mentions_bad) /
                                                  static_cast<double>(mentions_total);
    return out;
}

double aggregate_hallusion(const std::vector<GroupedVerdict>& items) {
    require(!items.empty(), ErrorCode::precondition, "no items to aggregate");

    std::size_t correct = 0;
    std::map<std::string, bool> question_ok;
    std::map<std::string, bool> figure_ok;
    for (const auto& item : items) {
        if (item.question_id.empty() || item.figure_id.empty()) {
            fail(ErrorCode::config,
                 "item '" + item.item_id + "' belongs to no question or figure group");
        }
        correct += item.correct ? 1 : 0;
        auto [qit, qnew] = question_ok.emplace(item.question_id, true);
        qit->second = qit->second && item.correct;
        (void)qnew;
        auto [fit, fnew] = figure_ok.emplace(item.figure_id, true);
        fit->second = fit->second && item.correct;
        (void)fnew;
    }

    auto all_correct = [](const std::map<std::string, bool>& groups) {
        std::size_t ok = 0;
        for (const auto& [id, good] : groups) ok += good ? 1 : 0;
        return ok;
    };

    double a_acc = percent(correct, items.size());
    double q_acc = percent(all_correct(question_ok), question_ok.size());
    double f_acc = percent(all_correct(figure_ok), figure_ok.size());
    return a_acc + q_acc + f_acc;
}

double aggregate_mme(const std::vector<PairedVerdict>& questions) {
    require(!questions.empty(), ErrorCode::precondition, "no questions to aggregate");

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_image;  // (count, correct)
    std::size_t correct = 0;
    for (const auto& q : questions) {
        auto& [count, hits] = per_image[q.image_id];
        ++count;
        hits += q.correct ? 1 : 0;
        correct += q.correct ? 1 : 0;
    }

    std::size_t images_perfect = 0;
    for (const auto& [image_id, stats] : per_image) {
        if (stats.first != 2) {
            fail(ErrorCode::config, "image '" + image_id + "' has " +
                                        std::to_string(stats.first) +
                                        " questions; the pairing requires exactly 2");
        }
        if (stats.second == 2) ++images_perfect;
    }

    double accuracy = percent(correct, questions.size());
    double accuracy_plus = percent(images_perfect, per_image.size());
    return accuracy + accuracy_plus;
}

PresenceScores score_presence(const std::vector<PresenceQuery>& queries, JudgeBackend& judge) {
    require(!queries.empty(), ErrorCode::precondition, "no presence queries to score");

    PresenceScores out;
    out.accuracy.metric = "presence_accuracy";

    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& q : queries) {
        require(q.task == TaskType::cpq || q.task == TaskType::tpq, ErrorCode::precondition,
                "presence query '" + q.id + "' must be cpq or tpq");

        json payload;
        payload["question"] = q.question;
        payload["answer"] = q.answer;

        bool present = true;
        ItemVerdict verdict;
        verdict.id = q.id;
        try {
            JudgeVerdict jv = judge_with_repair(judge, JudgeKind::cpbench_presence, payload);
            present = jv.present.value();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::judge_parse) throw;
            verdict.note = "judge reply unparseable; scored as present";
        }

        bool positive = q.task == TaskType::tpq;
        verdict.correct = positive == present;
        if (positive && present) ++tp;
        if (!positive && present) ++fp;
        if (positive && !present) ++fn;
        out.accuracy.verdicts.push_back(std::move(verdict));
    }

    finalize_accuracy(out.accuracy);

    double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    return out;
}

}  // namespace halluforge
