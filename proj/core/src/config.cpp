#include "halluforge/config.hpp"

#include <cctype>
#include <fstream>

#include "halluforge/digest.hpp"
#include "halluforge/errors.hpp"

namespace halluforge {

// ---------------------------------------------------------------------------
// TOML subset reader

namespace {

[[noreturn]] void toml_fail(std::size_t line, const std::string& message) {
    fail(ErrorCode::config, "toml line " + std::to_string(line) + ": " + message);
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

/// Removes a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

json parse_toml_scalar(const std::string& raw, std::size_t line) {
    std::string v = strip(raw);
    if (v.empty()) toml_fail(line, "empty value");

    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') toml_fail(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: toml_fail(line, std::string("unknown escape \\") + v[i]);
                }
            } else {
                out += v[i];
            }
        }
        return json(out);
    }
    if (v == "true") return json(true);
    if (v == "false") return json(false);

    // Numbers: integer when it round-trips as one, float otherwise.
    bool looks_float = v.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (looks_float) {
            double d = std::stod(v, &used);
            if (used != v.size()) toml_fail(line, "malformed number '" + v + "'");
            return json(d);
        }
        if (!v.empty() && v[0] == '-') {
            long long n = std::stoll(v, &used);
            if (used != v.size()) toml_fail(line, "malformed number '" + v + "'");
            return json(n);
        }
        unsigned long long n = std::stoull(v, &used);
        if (used != v.size()) toml_fail(line, "malformed number '" + v + "'");
        return json(n);
    } catch (const std::exception&) {
        toml_fail(line, "unrecognized value '" + v + "'");
    }
}

json parse_toml_value(const std::string& raw, std::size_t line) {
    std::string v = strip(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') toml_fail(line, "unterminated array");
        json arr = json::array();
        std::string body = v.substr(1, v.size() - 2);
        std::string cur;
        bool in_string = false;
        for (char c : body) {
            if (c == '"') in_string = !in_string;
            if (c == ',' && !in_string) {
                if (!strip(cur).empty()) arr.push_back(parse_toml_scalar(cur, line));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!strip(cur).empty()) arr.push_back(parse_toml_scalar(cur, line));
        return arr;
    }
    return parse_toml_scalar(v, line);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

}  // namespace

json parse_toml(const std::string& text) {
    json doc = json::object();
    json* table = &doc;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        line = strip(strip_comment(line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') toml_fail(line_no, "unterminated table header");
            std::string name = strip(line.substr(1, line.size() - 2));
            if (!valid_key(name)) toml_fail(line_no, "bad table name '" + name + "'");
            if (doc.contains(name) && !doc[name].is_object()) {
                toml_fail(line_no, "table '" + name + "' clashes with a key");
            }
            table = &doc[name];
            if (table->is_null()) *table = json::object();
            continue;
        }

        std::size_t eq = line.find('=');
        if (eq == std::string::npos) toml_fail(line_no, "expected key = value");
        std::string key = strip(line.substr(0, eq));
        if (!valid_key(key)) toml_fail(line_no, "bad key '" + key + "'");
        if (table->contains(key)) toml_fail(line_no, "duplicate key '" + key + "'");
        (*table)[key] = parse_toml_value(line.substr(eq + 1), line_no);
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Config document

namespace {

/// Pulls known keys out of `section` and errors on leftovers, so typos
/// surface as config errors instead of silently keeping defaults.
class Section {
public:
    Section(const json& doc, std::string name) : name_(std::move(name)) {
        if (name_.empty()) {
            obj_ = doc;
            return;
        }
        if (!doc.contains(name_)) return;
        if (!doc[name_].is_object()) {
            fail(ErrorCode::config, "config section '" + name_ + "' must be a table");
        }
        obj_ = doc[name_];
    }

    template <typename T>
    void read(const char* key, T& into) {
        if (!obj_.is_object() || !obj_.contains(key)) return;
        try {
            into = obj_[key].get<T>();
        } catch (const json::exception& e) {
            fail(ErrorCode::config, "config key '" + qualified(key) + "': " + e.what());
        }
        obj_.erase(key);
    }

    void read_path(const char* key, std::filesystem::path& into) {
        std::string s = into.string();
        read(key, s);
        into = s;
    }

    void skip(const char* key) {
        if (obj_.is_object()) obj_.erase(key);
    }

    void finish() const {
        if (!obj_.is_object() || obj_.empty()) return;
        fail(ErrorCode::config, "unknown config key '" + qualified(obj_.begin().key()) + "'");
    }

private:
    std::string qualified(const std::string& key) const {
        return name_.empty() ? key : name_ + "." + key;
    }

    std::string name_;
    json obj_;
};

}  // namespace

PipelineConfig config_from_json(const json& doc) {
    require(doc.is_object(), ErrorCode::config, "config document must be a JSON object");
    PipelineConfig cfg;

    Section top(doc, "");
    top.read("seed", cfg.seed);
    top.read("jobs", cfg.jobs);
    top.read_path("out_dir", cfg.out_dir);
    top.skip("backend");
    top.skip("thresholds");
    top.skip("pool");
    top.skip("annotate");
    top.skip("adversary");
    top.skip("questions");
    top.skip("prefs");
    top.skip("evaluate");
    top.finish();

    Section backend(doc, "backend");
    std::string kind = cfg.backend.kind == BackendKind::http ? "http" : "mock";
    backend.read("kind", kind);
    if (kind == "http") {
        cfg.backend.kind = BackendKind::http;
    } else if (kind == "mock") {
        cfg.backend.kind = BackendKind::mock;
    } else {
        fail(ErrorCode::config, "backend.kind must be 'http' or 'mock', got '" + kind + "'");
    }
    backend.read("endpoint", cfg.backend.endpoint);
    std::int64_t timeout_ms = cfg.backend.timeout.count();
    std::int64_t backoff_ms = cfg.backend.backoff_initial.count();
    backend.read("timeout_ms", timeout_ms);
    backend.read("backoff_initial_ms", backoff_ms);
    cfg.backend.timeout = std::chrono::milliseconds(timeout_ms);
    cfg.backend.backoff_initial = std::chrono::milliseconds(backoff_ms);
    backend.read("max_retries", cfg.backend.max_retries);
    backend.read("max_in_flight", cfg.backend.max_in_flight);
    backend.read("backoff_factor", cfg.backend.backoff_factor);
    backend.finish();

    Section thresholds(doc, "thresholds");
    thresholds.read("text", cfg.verify.text_threshold);
    thresholds.read("box", cfg.verify.box_threshold);
    thresholds.read("decision", cfg.verify.decision_threshold);
    thresholds.read("crop_pad", cfg.verify.crop_pad);
    thresholds.read("distance", cfg.distance_threshold);
    thresholds.read("posthoc_distance", cfg.posthoc_distance_threshold);
    thresholds.read("beta", cfg.beta);
    thresholds.finish();

    Section pool(doc, "pool");
    pool.read_path("embeddings", cfg.embeddings);
    pool.read("k", cfg.pool_k);
    pool.read_path("captions", cfg.captions);
    pool.read_path("quality", cfg.quality);
    pool.read("max_perplexity", cfg.max_perplexity);
    pool.read("min_concrete", cfg.min_concrete);
    pool.finish();

    Section annotate(doc, "annotate");
    annotate.read_path("candidates", cfg.candidates);
    annotate.read("caption_prompt", cfg.caption_prompt);
    annotate.finish();

    Section adversary(doc, "adversary");
    adversary.read("top_k", cfg.top_k);
    adversary.read("emit_ranking", cfg.emit_ranking);
    adversary.finish();

    Section questions(doc, "questions");
    questions.read_path("templates", cfg.templates_file);
    questions.finish();

    Section prefs(doc, "prefs");
    prefs.read_path("tasks", cfg.tasks);
    prefs.read("fallback", cfg.weight_fallback);
    prefs.read("total", cfg.total);
    std::vector<std::size_t> ratio(cfg.ratio.begin(), cfg.ratio.end());
    prefs.read("ratio", ratio);
    if (ratio.size() != cfg.ratio.size()) {
        fail(ErrorCode::config, "prefs.ratio must have exactly 5 entries");
    }
    std::copy(ratio.begin(), ratio.end(), cfg.ratio.begin());
    prefs.finish();

    Section evaluate(doc, "evaluate");
    evaluate.read_path("responses", cfg.responses);
    evaluate.finish();

    check_config(cfg);
    return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
    json doc;
    doc["seed"] = cfg.seed;
    doc["jobs"] = cfg.jobs;
    doc["out_dir"] = cfg.out_dir.string();
    doc["backend"] = {
        {"kind", cfg.backend.kind == BackendKind::http ? "http" : "mock"},
        {"endpoint", cfg.backend.endpoint},
        {"timeout_ms", cfg.backend.timeout.count()},
        {"max_retries", cfg.backend.max_retries},
        {"max_in_flight", cfg.backend.max_in_flight},
        {"backoff_initial_ms", cfg.backend.backoff_initial.count()},
        {"backoff_factor", cfg.backend.backoff_factor},
    };
    doc["thresholds"] = {
        {"text", cfg.verify.text_threshold},
        {"box", cfg.verify.box_threshold},
        {"decision", cfg.verify.decision_threshold},
        {"crop_pad", cfg.verify.crop_pad},
        {"distance", cfg.distance_threshold},
        {"posthoc_distance", cfg.posthoc_distance_threshold},
        {"beta", cfg.beta},
    };
    doc["pool"] = {
        {"embeddings", cfg.embeddings.string()}, {"k", cfg.pool_k},
        {"captions", cfg.captions.string()},     {"quality", cfg.quality.string()},
        {"max_perplexity", cfg.max_perplexity},  {"min_concrete", cfg.min_concrete},
    };
    doc["annotate"] = {
        {"candidates", cfg.candidates.string()},
        {"caption_prompt", cfg.caption_prompt},
    };
    doc["adversary"] = {{"top_k", cfg.top_k}, {"emit_ranking", cfg.emit_ranking}};
    doc["questions"] = {{"templates", cfg.templates_file.string()}};
    doc["prefs"] = {
        {"tasks", cfg.tasks.string()},
        {"fallback", cfg.weight_fallback},
        {"total", cfg.total},
        {"ratio", std::vector<std::size_t>(cfg.ratio.begin(), cfg.ratio.end())},
    };
    doc["evaluate"] = {{"responses", cfg.responses.string()}};
    return doc;
}

std::string config_digest(const PipelineConfig& cfg) { return digest_json(config_to_json(cfg)); }

void check_config(const PipelineConfig& cfg) {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(cfg.verify.text_threshold) || !in_unit(cfg.verify.box_threshold) ||
        !in_unit(cfg.verify.decision_threshold)) {
        fail(ErrorCode::config, "verification thresholds must lie in (0,1)");
    }
    if (cfg.verify.crop_pad < 0.0 || cfg.verify.crop_pad > 1.0) {
        fail(ErrorCode::config, "thresholds.crop_pad must lie in [0,1]");
    }
    if (cfg.distance_threshold < 0.0 || cfg.distance_threshold > 2.0 ||
        cfg.posthoc_distance_threshold < 0.0 || cfg.posthoc_distance_threshold > 2.0) {
        fail(ErrorCode::config, "distance thresholds must lie in [0,2]");
    }
    if (cfg.beta <= 0.0) fail(ErrorCode::config, "thresholds.beta must be positive");
    if (cfg.jobs < 1) fail(ErrorCode::config, "jobs must be at least 1");
    if (cfg.weight_fallback < 1 || cfg.weight_fallback > 3) {
        fail(ErrorCode::config, "prefs.fallback must be 1, 2 or 3");
    }
    if (cfg.min_concrete < 0) fail(ErrorCode::config, "pool.min_concrete must be non-negative");
    if (cfg.max_perplexity <= 0.0) fail(ErrorCode::config, "pool.max_perplexity must be positive");
    if (cfg.top_k < 1) fail(ErrorCode::config, "adversary.top_k must be at least 1");
    if (cfg.backend.max_retries < 0) fail(ErrorCode::config, "backend.max_retries must be >= 0");
    if (cfg.backend.max_in_flight < 1) {
        fail(ErrorCode::config, "backend.max_in_flight must be at least 1");
    }
    if (cfg.backend.backoff_factor < 1.0) {
        fail(ErrorCode::config, "backend.backoff_factor must be at least 1");
    }
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::config, "cannot open config file '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    json doc;
    if (path.extension() == ".toml") {
        doc = parse_toml(text);
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::exception& e) {
            fail(ErrorCode::config, "config file '" + path.string() + "' is not valid JSON: " +
                                        std::string(e.what()));
        }
    }
    return config_from_json(doc);
}

}  // namespace halluforge
