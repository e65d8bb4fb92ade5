#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "postag.hpp"

namespace stylobf {

struct FillRequest {
  std::vector<std::string> tokens;
  std::vector<std::size_t> mask_indices;  // strictly increasing
  std::size_t context_window = 64;        // tokens kept on each side; 0 = full text
  std::vector<std::string> tags;          // aligned with tokens when known; never sent over the wire

  void validate() const {
    for (std::size_t i = 0; i < mask_indices.size(); ++i) {
      if (mask_indices[i] >= tokens.size()) throw Error(ErrorCode::kInvalidArgument, "mask index out of range");
      if (i > 0 && mask_indices[i] <= mask_indices[i - 1]) {
        throw Error(ErrorCode::kInvalidArgument, "mask indices must be strictly increasing");
      }
    }
    if (!tags.empty() && tags.size() != tokens.size()) {
      throw Error(ErrorCode::kInvalidArgument, "tags not aligned with tokens");
    }
  }
};

struct FillResponse {
  std::vector<std::string> replacements;
  std::string generator_id;
  std::chrono::nanoseconds latency{0};
};

class FillError : public Error {
 public:
  FillError(ErrorCode code, const std::string& detail, int status = 0) : Error(code, detail), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Arity and non-emptiness, enforced for every generator.
inline void validate_fill(const FillRequest& req, const FillResponse& resp) {
  if (resp.replacements.size() != req.mask_indices.size()) {
    throw FillError(ErrorCode::kFillProtocol, "arity mismatch");
  }
  for (const auto& r : resp.replacements) {
    if (r.empty()) throw FillError(ErrorCode::kFillProtocol, "empty replacement");
  }
}

class ReplacementGenerator {
 public:
  virtual ~ReplacementGenerator() = default;
  virtual std::string id() const = 0;
  // Must be safe to call concurrently.
  virtual FillResponse fill(const FillRequest& req) const = 0;
};

// Slice of `tokens` around [begin, end) with `window` tokens of context per side.
// Returns the request plus the offset of its first token in the full sequence.
inline std::pair<FillRequest, std::size_t> make_fill_request(std::span<const std::string> tokens,
                                                             std::span<const std::string> tags, std::size_t begin,
                                                             std::size_t end, std::size_t window) {
  const std::size_t lo = window == 0 ? 0 : (begin > window ? begin - window : 0);
  const std::size_t hi = window == 0 ? tokens.size() : std::min(tokens.size(), end + window);
  FillRequest req;
  req.context_window = window;
  req.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(lo), tokens.begin() + static_cast<std::ptrdiff_t>(hi));
  if (!tags.empty()) req.tags.assign(tags.begin() + static_cast<std::ptrdiff_t>(lo), tags.begin() + static_cast<std::ptrdiff_t>(hi));
  for (std::size_t i = begin; i < end; ++i) req.mask_indices.push_back(i - lo);
  return {std::move(req), lo};
}

// Frequency-ranked surface forms per POS tag.
class PosLexicon {
 public:
  PosLexicon() = default;
  explicit PosLexicon(std::map<std::string, std::vector<std::string>> words) : words_(std::move(words)) {}

  const std::vector<std::string>& words(const std::string& tag) const {
    static const std::vector<std::string> kEmpty;
    auto it = words_.find(tag);
    return it == words_.end() ? kEmpty : it->second;
  }
  const std::map<std::string, std::vector<std::string>>& table() const { return words_; }

  nlohmann::json to_json() const { return {{"format", "stylobf-lexicon"}, {"version", 1}, {"words", words_}}; }

  static PosLexicon from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "stylobf-lexicon") throw FormatError("pos_lexicon", "unexpected format tag");
      return PosLexicon(j.at("words").get<std::map<std::string, std::vector<std::string>>>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("pos_lexicon", e.what());
    }
  }

 private:
  std::map<std::string, std::vector<std::string>> words_;
};

// Counts (tag, surface) over tagged texts; keeps the `per_tag` most frequent
// surfaces per tag, ties broken by byte order. Surfaces are lowercased except for
// proper nouns; generators restore sentence-initial capitals.
inline PosLexicon build_pos_lexicon(std::span<const TaggedText> texts, std::size_t per_tag = 64) {
  std::map<std::string, std::unordered_map<std::string, std::size_t>> counts;
  for (const auto& t : texts) {
    for (std::size_t i = 0; i < t.tokens.size(); ++i) {
      const auto& tag = t.tags[i];
      const bool proper = tag == "NNP" || tag == "NNPS";
      ++counts[tag][proper ? t.tokens[i].surface : detail::ascii_lower(t.tokens[i].surface)];
    }
  }
  std::map<std::string, std::vector<std::string>> table;
  for (auto& [tag, c] : counts) {
    std::vector<std::pair<std::string, std::size_t>> ranked(c.begin(), c.end());
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    auto& out = table[tag];
    for (std::size_t i = 0; i < ranked.size() && i < per_tag; ++i) out.push_back(std::move(ranked[i].first));
  }
  return PosLexicon(std::move(table));
}

namespace detail {

enum class TokenShape { kWord, kClitic, kPunct };

inline TokenShape token_shape(std::string_view s) {
  if (s.empty()) return TokenShape::kPunct;
  const auto c = static_cast<unsigned char>(s.front());
  if (is_word_byte(c)) return TokenShape::kWord;
  if (c == '\'' && s.size() > 1 && is_word_byte(static_cast<unsigned char>(s[1]))) return TokenShape::kClitic;
  return TokenShape::kPunct;
}

inline std::string match_case(std::string word, std::string_view like) {
  if (!like.empty() && !word.empty() && std::isupper(static_cast<unsigned char>(like.front())) &&
      std::islower(static_cast<unsigned char>(word.front()))) {
    word.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(word.front())));
  }
  return word;
}

}  // namespace detail

// Per masked token: the most frequent lexicon word with the same tag and token
// shape that differs from the original surface; the original when none exists.
inline FillResponse fallback_fill(const FillRequest& req, const PosLexicon& lexicon,
                                  std::span<const std::string> tags) {
  req.validate();
  if (tags.size() != req.tokens.size()) throw Error(ErrorCode::kInvalidArgument, "tags not aligned with tokens");
  FillResponse resp;
  resp.generator_id = "fallback";
  for (std::size_t idx : req.mask_indices) {
    const std::string& original = req.tokens[idx];
    const auto shape = detail::token_shape(original);
    std::string choice = original;
    for (const auto& candidate : lexicon.words(tags[idx])) {
      if (detail::token_shape(candidate) != shape) continue;
      std::string cased = detail::match_case(candidate, original);
      if (cased != original) {
        choice = std::move(cased);
        break;
      }
    }
    resp.replacements.push_back(std::move(choice));
  }
  return resp;
}

class FallbackGenerator final : public ReplacementGenerator {
 public:
  explicit FallbackGenerator(PosLexicon lexicon) : lexicon_(std::move(lexicon)) {}
  std::string id() const override { return "fallback"; }
  FillResponse fill(const FillRequest& req) const override {
    const auto start = std::chrono::steady_clock::now();
    if (req.tags.size() != req.tokens.size()) {
      const auto tags = fallback_tag(std::span<const Token>(tokens_of(req.tokens)));
      auto resp = fallback_fill(req, lexicon_, tags);
      resp.latency = std::chrono::steady_clock::now() - start;
      return resp;
    }
    auto resp = fallback_fill(req, lexicon_, req.tags);
    resp.latency = std::chrono::steady_clock::now() - start;
    return resp;
  }

 private:
  static std::vector<Token> tokens_of(const std::vector<std::string>& surfaces) {
    std::vector<Token> out;
    std::size_t pos = 0;
    for (const auto& s : surfaces) {
      out.push_back({s, pos, pos + s.size()});
      pos += s.size() + 1;
    }
    return out;
  }

  PosLexicon lexicon_;
};

// Returns every masked token unchanged.
class IdentityGenerator final : public ReplacementGenerator {
 public:
  std::string id() const override { return "identity"; }
  FillResponse fill(const FillRequest& req) const override {
    req.validate();
    FillResponse resp;
    resp.generator_id = "identity";
    for (std::size_t i : req.mask_indices) resp.replacements.push_back(req.tokens[i]);
    return resp;
  }
};

}  // namespace stylobf
