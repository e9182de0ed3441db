#include "halluforge/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace halluforge::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) { return lower(c); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_label(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (is_space(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(lower(c));
    }
    return out;
}

std::string first_alpha_token(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && !is_alpha(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && is_alpha(s[j])) ++j;
    return to_lower(s.substr(i, j - i));
}

bool parses_as_yes(std::string_view response) {
    return first_alpha_token(response) == "yes";
}

bool contains_normalized(std::string_view haystack, std::string_view needle) {
    return normalize_label(haystack).find(normalize_label(needle)) != std::string::npos;
}

namespace {

// Abbreviations whose trailing '.' never ends a sentence.
constexpr std::array<std::string_view, 5> kAbbrevGuards = {"e.g.", "i.e.", "mr.", "dr.", "vs."};

bool ends_with_abbreviation(std::string_view prose, std::size_t dot_pos) {
    for (std::string_view abbrev : kAbbrevGuards) {
        if (dot_pos + 1 < abbrev.size()) continue;
        std::size_t start = dot_pos + 1 - abbrev.size();
        if (start > 0 && !is_space(prose[start - 1])) continue;
        std::string_view slice = prose.substr(start, abbrev.size());
        bool match = std::equal(slice.begin(), slice.end(), abbrev.begin(),
                                [](char a, char b) { return lower(a) == b; });
        if (match) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view prose) {
    std::vector<std::string> sentences;
    std::size_t start = 0;
    for (std::size_t i = 0; i < prose.size(); ++i) {
        char c = prose[i];
        if (c != '.' && c != '!' && c != '?') continue;
        bool at_end = i + 1 == prose.size();
        if (!at_end && !is_space(prose[i + 1])) continue;
        if (c == '.' && ends_with_abbreviation(prose, i)) continue;
        std::string sentence = trim(prose.substr(start, i + 1 - start));
        if (!sentence.empty()) sentences.push_back(std::move(sentence));
        start = i + 1;
    }
    std::string tail = trim(prose.substr(start));
    if (!tail.empty()) sentences.push_back(std::move(tail));
    return sentences;
}

std::size_t count_tokens(std::string_view s) {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : s) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

std::string substitute(std::string_view tmpl, std::string_view slot, std::string_view value) {
    std::string out;
    out.reserve(tmpl.size() + value.size());
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = tmpl.find(slot, pos);
        if (hit == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            return out;
        }
        out.append(tmpl.substr(pos, hit - pos));
        out.append(value);
        pos = hit + slot.size();
    }
}

std::size_t count_occurrences(std::string_view tmpl, std::string_view slot) {
    if (slot.empty()) return 0;
    std::size_t n = 0, pos = 0;
    while ((pos = tmpl.find(slot, pos)) != std::string_view::npos) {
        ++n;
        pos += slot.size();
    }
    return n;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    return std::equal(prefix.begin(), prefix.end(), s.begin(),
                      [](char a, char b) { return lower(a) == lower(b); });
}

}  // namespace halluforge::text
