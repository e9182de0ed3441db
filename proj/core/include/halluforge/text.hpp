#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace halluforge::text {

/// Object-label normal form: ASCII-lowercase, trimmed, internal whitespace
/// runs collapsed to single spaces. Idempotent.
std::string normalize_label(std::string_view raw);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// First maximal run of alphabetic characters, lowercased; empty if none.
std::string first_alpha_token(std::string_view s);

/// Yes/no parse used by verification and recognition scoring: a response
/// counts as "yes" iff its first alphabetic token is "yes"; everything
/// else (hedges, refusals, noise) counts as "no".
bool parses_as_yes(std::string_view response);

/// Case-insensitive substring test after label normalization on both sides.
bool contains_normalized(std::string_view haystack, std::string_view needle);

/// Splits prose into sentences on '.', '!', '?' followed by whitespace or
/// end of text. A '.' that terminates a known abbreviation ("e.g.", "i.e.",
/// "Mr.", "Dr.", "vs.", case-insensitive) is not a boundary. Sentences keep
/// their terminal punctuation and are trimmed.
std::vector<std::string> split_sentences(std::string_view prose);

/// Whitespace-delimited token count.
std::size_t count_tokens(std::string_view s);

/// Replaces every occurrence of `slot` in `tmpl` with `value`.
std::string substitute(std::string_view tmpl, std::string_view slot, std::string_view value);

/// Number of (non-overlapping) occurrences of `slot` in `tmpl`.
std::size_t count_occurrences(std::string_view tmpl, std::string_view slot);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace halluforge::text
