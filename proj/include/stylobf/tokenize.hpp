#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stylobf {

// Offsets are UTF-8 byte offsets into the source text: text.substr(start, end - start) == surface.
struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

namespace detail {

inline bool is_space(unsigned char c) { return c == ' ' || (c >= '\t' && c <= '\r'); }

// Non-ASCII bytes belong to words so multi-byte code points are never split.
inline bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Index where a clitic starts inside a word, or npos. "don't" -> 2, "John's" -> 4.
inline std::size_t clitic_split(std::string_view word) {
  const std::string lower = ascii_lower(word);
  if (lower.size() > 3 && lower.ends_with("n't")) return lower.size() - 3;
  for (std::string_view suffix : {"'s", "'re", "'ll", "'ve", "'d", "'m"}) {
    if (lower.size() > suffix.size() && lower.ends_with(suffix)) return lower.size() - suffix.size();
  }
  return std::string_view::npos;
}

}  // namespace detail

// Whitespace split, punctuation detachment, and a fixed English contraction table
// ("don't" -> "do" "n't", "we're" -> "we" "'re"). Runs of '.' or '-' stay together.
inline std::vector<Token> tokenize(std::string_view text) {
  using detail::is_digit;
  using detail::is_space;
  using detail::is_word_byte;

  std::vector<Token> out;
  auto emit = [&](std::size_t b, std::size_t e) { out.push_back({std::string(text.substr(b, e - b)), b, e}); };
  auto at = [&](std::size_t i) -> unsigned char { return i < text.size() ? static_cast<unsigned char>(text[i]) : 0; };

  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = at(i);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i + 1;
      while (j < text.size()) {
        const unsigned char d = at(j);
        if (is_word_byte(d)) {
          ++j;
        } else if ((d == '\'' || d == '-') && is_word_byte(at(j - 1)) && is_word_byte(at(j + 1))) {
          j += 1;
        } else if ((d == '.' || d == ',') && is_digit(at(j - 1)) && is_digit(at(j + 1))) {
          j += 1;
        } else {
          break;
        }
      }
      const std::size_t k = detail::clitic_split(text.substr(i, j - i));
      if (k != std::string_view::npos) {
        emit(i, i + k);
        emit(i + k, j);
      } else {
        emit(i, j);
      }
      i = j;
      continue;
    }
    std::size_t j = i + 1;
    if (c == '.' || c == '-') {
      while (at(j) == c) ++j;
    }
    emit(i, j);
    i = j;
  }
  return out;
}

// Rebuilds text from tokens laid over the gaps of `original`. The i-th surface in
// `surfaces` replaces tokens[i]; gaps between tokens are copied verbatim.
inline std::string splice(std::string_view original, const std::vector<Token>& tokens,
                          const std::vector<std::string>& surfaces) {
  std::string out;
  out.reserve(original.size() + 16);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out.append(original.substr(cursor, tokens[i].start - cursor));
    out.append(surfaces[i]);
    cursor = tokens[i].end;
  }
  out.append(original.substr(cursor));
  return out;
}

}  // namespace stylobf
