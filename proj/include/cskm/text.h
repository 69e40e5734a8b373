#ifndef CSKM_TEXT_H_
#define CSKM_TEXT_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cskm {

// ASCII lowercase; bytes outside ASCII pass through unchanged.
std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s);

// Splits on every occurrence of sep; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, char sep);

std::string join(const std::vector<std::string> &parts, std::string_view sep);

bool is_ascii_punct(char c);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Parses the whole of s, surrounding whitespace aside, as a decimal number;
// nullopt on any other trailing text.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// A surface token with its byte range in the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool punct = false;
};

// Whitespace tokenizer. Leading and trailing punctuation characters of each
// whitespace-delimited chunk become single-character punctuation tokens;
// interior punctuation (hyphens, apostrophes) stays inside the word.
std::vector<Token> tokenize(std::string_view text);

// Lowercased non-punctuation token texts.
std::vector<std::string> word_tokens(std::string_view text);

}  // namespace cskm

#endif  // CSKM_TEXT_H_
