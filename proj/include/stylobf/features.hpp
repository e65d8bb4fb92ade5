#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "postag.hpp"
#include "rng.hpp"

namespace stylobf {

enum class FeatureKind : std::uint8_t { kChar = 0, kPos = 1 };

inline std::string_view to_string(FeatureKind k) { return k == FeatureKind::kChar ? "char" : "pos"; }

inline FeatureKind feature_kind_from(std::string_view s) {
  if (s == "char") return FeatureKind::kChar;
  if (s == "pos") return FeatureKind::kPos;
  throw Error(ErrorCode::kInvalidArgument, "unknown feature kind '" + std::string(s) + "'");
}

struct FeatureKey {
  FeatureKind kind = FeatureKind::kPos;
  std::vector<std::string> gram;

  std::size_t length() const { return gram.size(); }
  auto operator<=>(const FeatureKey&) const = default;

  std::string display() const {
    std::string out;
    for (std::size_t i = 0; i < gram.size(); ++i) {
      if (i > 0 && kind == FeatureKind::kPos) out += ' ';
      out += gram[i];
    }
    return out;
  }
};

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t space_checksum = 0;  // 0 = unchecked
};

namespace detail {

inline constexpr char kGramSep = '\x1f';

// Splits UTF-8 into code points; invalid bytes become U+FFFD so concatenation stays decodable.
inline std::vector<std::string> code_points(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    bool valid = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k) valid = (static_cast<unsigned char>(text[i + k]) >> 6) == 0x2;
    if (valid) {
      out.emplace_back(text.substr(i, len));
      i += len;
    } else {
      out.emplace_back("\xEF\xBF\xBD");
      i += 1;
    }
  }
  return out;
}

// Symbols flattened into one buffer plus boundaries so any contiguous gram is a
// string_view: chars are concatenated, POS tags are separator-joined.
struct SymbolBuffer {
  std::string bytes;
  std::vector<std::size_t> begin;  // symbol i starts at begin[i]
  std::vector<std::size_t> end;    // and ends at end[i]
  std::size_t size() const { return begin.size(); }
  std::string_view gram(std::size_t i, std::size_t l) const {
    return std::string_view(bytes).substr(begin[i], end[i + l - 1] - begin[i]);
  }
};

inline SymbolBuffer make_buffer(std::span<const std::string> symbols, bool separated) {
  SymbolBuffer buf;
  buf.begin.reserve(symbols.size());
  buf.end.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (separated && i > 0) buf.bytes += kGramSep;
    buf.begin.push_back(buf.bytes.size());
    buf.bytes += symbols[i];
    buf.end.push_back(buf.bytes.size());
  }
  return buf;
}

inline std::string encode_gram(FeatureKind kind, std::span<const std::string> gram) {
  std::string out;
  for (std::size_t i = 0; i < gram.size(); ++i) {
    if (kind == FeatureKind::kPos && i > 0) out += kGramSep;
    out += gram[i];
  }
  return out;
}

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
};

using GramIndex = std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>;

}  // namespace detail

// All |sequence| - l + 1 contiguous grams with multiplicities.
inline std::map<std::vector<std::string>, std::size_t> extract_ngrams(std::span<const std::string> sequence,
                                                                      std::size_t l) {
  if (l == 0) throw Error(ErrorCode::kInvalidArgument, "n-gram length must be >= 1");
  std::map<std::vector<std::string>, std::size_t> out;
  if (sequence.size() < l) return out;
  for (std::size_t i = 0; i + l <= sequence.size(); ++i) {
    ++out[std::vector<std::string>(sequence.begin() + static_cast<std::ptrdiff_t>(i),
                                   sequence.begin() + static_cast<std::ptrdiff_t>(i + l))];
  }
  return out;
}

class FeatureSpace {
 public:
  static constexpr int kFormatVersion = 1;

  struct Group {
    FeatureKind kind;
    std::size_t length;
    std::size_t offset;  // first position in the vector
    std::size_t size;
  };

  FeatureSpace() = default;

  // Entries must already be in layout order: kind (char, pos) x length ascending x rank.
  FeatureSpace(std::vector<std::size_t> lengths, std::size_t vocab_cap, std::vector<FeatureKey> entries)
      : lengths_(std::move(lengths)), vocab_cap_(vocab_cap), entries_(std::move(entries)) {
    index();
  }

  const std::vector<std::size_t>& lengths() const { return lengths_; }
  std::size_t vocab_cap() const { return vocab_cap_; }
  const std::vector<FeatureKey>& entries() const { return entries_; }
  const std::vector<Group>& groups() const { return groups_; }
  std::size_t dimension() const { return entries_.size(); }
  std::uint64_t checksum() const { return checksum_; }

  std::optional<std::size_t> position(const FeatureKey& key) const {
    for (const auto& g : groups_) {
      if (g.kind != key.kind || g.length != key.length()) continue;
      const auto& idx = lookup_[group_slot(g)];
      auto it = idx.find(detail::encode_gram(key.kind, key.gram));
      if (it != idx.end()) return g.offset + it->second;
    }
    return std::nullopt;
  }

  // Normalized frequencies: count(k) / total grams of (k.kind, k.length) in the text.
  FeatureVector vectorize(const TaggedText& tagged, std::string_view raw) const {
    FeatureVector out{std::vector<double>(dimension(), 0.0), checksum_};
    const auto chars = detail::code_points(raw);
    const auto char_buf = detail::make_buffer(chars, false);
    const auto pos_buf = detail::make_buffer(tagged.tags, true);
    for (const auto& g : groups_) {
      const auto& buf = g.kind == FeatureKind::kChar ? char_buf : pos_buf;
      if (buf.size() < g.length) continue;
      const std::size_t total = buf.size() - g.length + 1;
      const auto& idx = lookup_[group_slot(g)];
      double* dst = out.values.data() + g.offset;
      for (std::size_t i = 0; i < total; ++i) {
        auto it = idx.find(buf.gram(i, g.length));
        if (it != idx.end()) dst[it->second] += 1.0;
      }
      const auto denom = static_cast<double>(total);
      for (std::size_t k = 0; k < g.size; ++k) dst[k] /= denom;
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_) entries.push_back({{"kind", to_string(e.kind)}, {"gram", e.gram}});
    return {{"format", "stylobf-features"},
            {"version", kFormatVersion},
            {"V", lengths_},
            {"L_vocab", vocab_cap_},
            {"entries", std::move(entries)}};
  }

  static FeatureSpace from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "stylobf-features") throw FormatError("feature_space", "unexpected format tag");
      if (j.at("version").get<int>() != kFormatVersion) throw FormatError("feature_space", "unsupported version");
      std::vector<FeatureKey> entries;
      for (const auto& e : j.at("entries")) {
        entries.push_back({feature_kind_from(e.at("kind").get<std::string>()),
                           e.at("gram").get<std::vector<std::string>>()});
      }
      return FeatureSpace(j.at("V").get<std::vector<std::size_t>>(), j.at("L_vocab").get<std::size_t>(),
                          std::move(entries));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("feature_space", e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kFormat) throw;
      throw FormatError("feature_space", e.what());
    }
  }

 private:
  std::size_t group_slot(const Group& g) const {
    return static_cast<std::size_t>(&g - groups_.data());
  }

  void index() {
    groups_.clear();
    lookup_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (std::find(lengths_.begin(), lengths_.end(), e.length()) == lengths_.end()) {
        throw Error(ErrorCode::kInvalidArgument, "feature length " + std::to_string(e.length()) + " not in V");
      }
      if (groups_.empty() || groups_.back().kind != e.kind || groups_.back().length != e.length()) {
        if (!groups_.empty()) {
          const auto& b = groups_.back();
          if (std::pair(e.kind, e.length()) < std::pair(b.kind, b.length)) {
            throw Error(ErrorCode::kInvalidArgument, "feature entries out of layout order");
          }
        }
        groups_.push_back({e.kind, e.length(), i, 0});
        lookup_.emplace_back();
      }
      auto& g = groups_.back();
      if (!lookup_.back().emplace(detail::encode_gram(e.kind, e.gram), g.size).second) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate feature entry '" + e.display() + "'");
      }
      ++g.size;
      if (g.size > vocab_cap_) throw Error(ErrorCode::kInvalidArgument, "feature group exceeds L_vocab");
    }
    checksum_ = fnv1a(to_json().dump());
  }

  std::vector<std::size_t> lengths_;
  std::size_t vocab_cap_ = 0;
  std::vector<FeatureKey> entries_;
  std::vector<Group> groups_;
  std::vector<detail::GramIndex> lookup_;
  std::uint64_t checksum_ = 0;
};

struct FeatureSpaceOptions {
  std::vector<std::size_t> lengths{1, 2, 3, 4};
  std::size_t vocab_cap = 100;
  bool use_char = true;
  bool use_pos = true;
};

// Keeps the vocab_cap most frequent grams per (kind, length); ties go to the
// lexicographically smaller gram.
inline FeatureSpace build_feature_space(std::span<const TaggedText> tagged, std::span<const std::string> raw,
                                        const FeatureSpaceOptions& opt = {}) {
  if (opt.lengths.empty()) throw Error(ErrorCode::kInvalidArgument, "V must be non-empty");
  if (opt.vocab_cap < 1) throw Error(ErrorCode::kInvalidArgument, "L_vocab must be >= 1");
  if (std::find(opt.lengths.begin(), opt.lengths.end(), std::size_t{0}) != opt.lengths.end()) {
    throw Error(ErrorCode::kInvalidArgument, "n-gram lengths must be >= 1");
  }
  if ((opt.use_char && raw.empty()) || (opt.use_pos && tagged.empty()) || (raw.empty() && tagged.empty())) {
    throw Error(ErrorCode::kEmptyCorpus, "no texts to build a feature space from");
  }

  auto lengths = opt.lengths;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

  std::vector<FeatureKey> entries;
  auto census = [&](FeatureKind kind, const std::vector<detail::SymbolBuffer>& buffers) {
    for (std::size_t l : lengths) {
      std::unordered_map<std::string, std::size_t, detail::StringHash, std::equal_to<>> counts;
      for (const auto& buf : buffers) {
        for (std::size_t i = 0; i + l <= buf.size(); ++i) {
          auto g = buf.gram(i, l);
          auto it = counts.find(g);
          if (it == counts.end()) {
            counts.emplace(std::string(g), 1);
          } else {
            ++it->second;
          }
        }
      }
      std::vector<std::pair<std::vector<std::string>, std::size_t>> ranked;
      ranked.reserve(counts.size());
      for (auto& [key, n] : counts) {
        std::vector<std::string> gram;
        if (kind == FeatureKind::kChar) {
          gram = detail::code_points(key);
        } else {
          std::size_t start = 0;
          for (std::size_t p = 0; p <= key.size(); ++p) {
            if (p == key.size() || key[p] == detail::kGramSep) {
              gram.push_back(key.substr(start, p - start));
              start = p + 1;
            }
          }
        }
        ranked.emplace_back(std::move(gram), n);
      }
      const std::size_t keep = std::min(opt.vocab_cap, ranked.size());
      std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                        [](const auto& a, const auto& b) {
                          return a.second != b.second ? a.second > b.second : a.first < b.first;
                        });
      for (std::size_t k = 0; k < keep; ++k) entries.push_back({kind, std::move(ranked[k].first)});
    }
  };

  if (opt.use_char) {
    std::vector<detail::SymbolBuffer> buffers;
    buffers.reserve(raw.size());
    for (const auto& text : raw) buffers.push_back(detail::make_buffer(detail::code_points(text), false));
    census(FeatureKind::kChar, buffers);
  }
  if (opt.use_pos) {
    std::vector<detail::SymbolBuffer> buffers;
    buffers.reserve(tagged.size());
    for (const auto& t : tagged) buffers.push_back(detail::make_buffer(t.tags, true));
    census(FeatureKind::kPos, buffers);
  }
  return FeatureSpace(std::move(lengths), opt.vocab_cap, std::move(entries));
}

inline FeatureVector vectorize(const FeatureSpace& space, const TaggedText& tagged, std::string_view raw) {
  return space.vectorize(tagged, raw);
}

}  // namespace stylobf
