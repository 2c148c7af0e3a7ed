#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace umae {

// Normalization options shared by the metric tokenizer and answer matching.
struct TextNorm {
    bool strip_articles = false; // drop "a", "an", "the"
};

// Tokenizer for the reference scorer: lowercase, whitespace split, punctuation
// split into single-character tokens. Substrings of the form "<#...#>"
// (prompt and separator tokens) are kept atomic with their case preserved.
std::vector<std::string> ref_tokenize(std::string_view text);

// Tokenizer for metrics: lowercase, punctuation replaced by spaces, whitespace
// split. Article stripping is optional and off by default.
std::vector<std::string> metric_tokenize(std::string_view text, const TextNorm& norm = {});

// Metric-tokenized text joined back with single spaces; the canonical form
// used for answer equality.
std::string normalize_answer(std::string_view text, const TextNorm& norm = {});

// Porter (1980) stemming algorithm over lowercase ASCII words.
std::string porter_stem(std::string_view word);

std::string join_tokens(std::span<const std::string> tokens);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Splits on runs of whitespace.
std::vector<std::string> split_ws(std::string_view s);

} // namespace umae
