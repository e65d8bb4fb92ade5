#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrib_net.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "igrad.hpp"
#include "postag.hpp"
#include "replace.hpp"

namespace stylobf {

struct ObfuscationConfig {
  std::size_t top_features = 20;  // L_obf: POS n-gram features processed per text
  IGConfig ig{};
  double max_changed_fraction = 0.6;
  std::size_t context_window = 64;

  void validate() const {
    if (top_features < 1) throw Error(ErrorCode::kInvalidArgument, "L_obf must be >= 1");
    if (!(max_changed_fraction > 0.0 && max_changed_fraction <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "max_changed_fraction must be in (0, 1]");
    }
    ig.validate();
  }
};

struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  bool operator==(const TokenRange&) const = default;
};

struct Change {
  TokenRange span;
  std::vector<std::string> original_tokens;
  std::vector<std::string> replacement_tokens;
  FeatureKey feature;
  double scaled_attribution = 0.0;
  std::size_t feature_rank = 0;  // rank among all features, 1-based
};

struct PhaseTimes {
  std::chrono::nanoseconds attribution{0};  // tagging, vectorizing, integrated gradients, ranking
  std::chrono::nanoseconds matching{0};
  std::chrono::nanoseconds generation{0};
  std::chrono::nanoseconds total() const { return attribution + matching + generation; }
};

struct ObfuscationResult {
  std::string doc_id;
  std::string author;
  std::string original_text;
  std::string obfuscated_text;
  std::vector<Token> tokens;                  // of the original text
  std::vector<std::string> obfuscated_tokens;  // one surface per original token
  std::vector<Change> changes;
  std::string internal_prediction;
  std::string generator_id;
  PhaseTimes elapsed;
};

class GeneratorUnavailable : public Error {
 public:
  GeneratorUnavailable(ObfuscationResult partial, ErrorCode cause, const std::string& detail)
      : Error(ErrorCode::kGeneratorUnavailable, std::string(to_string(cause)) + ": " + detail),
        partial_(std::move(partial)),
        cause_(cause) {}
  const ObfuscationResult& partial() const noexcept { return partial_; }
  ErrorCode cause() const noexcept { return cause_; }

 private:
  ObfuscationResult partial_;
  ErrorCode cause_;
};

// Left-to-right occurrences of `gram` in `tags`. An occurrence is rejected when it
// touches a frozen index; each accepted occurrence freezes its own span at once.
inline std::vector<TokenRange> match_pos_ngram(std::span<const std::string> tags, std::span<const std::string> gram,
                                               std::vector<bool> frozen) {
  if (gram.empty()) throw Error(ErrorCode::kInvalidArgument, "gram must be non-empty");
  frozen.resize(tags.size(), false);
  std::vector<TokenRange> out;
  const std::size_t l = gram.size();
  for (std::size_t i = 0; i + l <= tags.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < l && hit; ++k) hit = !frozen[i + k] && tags[i + k] == gram[k];
    if (!hit) continue;
    out.push_back({i, i + l});
    for (std::size_t k = 0; k < l; ++k) frozen[i + k] = true;
  }
  return out;
}

namespace detail {

// True when re-tokenizing the whitespace-free chunk around `i` yields exactly the
// current surfaces, i.e. the splice did not merge or split tokens.
inline bool chunk_stable(const std::vector<Token>& tokens, const std::vector<std::string>& surfaces, std::size_t i) {
  std::size_t lo = i, hi = i + 1;
  while (lo > 0 && tokens[lo - 1].end == tokens[lo].start) --lo;
  while (hi < tokens.size() && tokens[hi - 1].end == tokens[hi].start) ++hi;
  std::string chunk;
  for (std::size_t k = lo; k < hi; ++k) chunk += surfaces[k];
  const auto re = tokenize(chunk);
  if (re.size() != hi - lo) return false;
  for (std::size_t k = lo; k < hi; ++k) {
    if (re[k - lo].surface != surfaces[k]) return false;
  }
  return true;
}

}  // namespace detail

// One pass over the top POS features of the ORIGINAL text. The internal
// classifier's prediction only selects the attribution target; it never gates edits.
inline ObfuscationResult obfuscate_text(const Document& doc, const AttributionModel& model, const FeatureSpace& space,
                                        const Tagger& tagger, const ReplacementGenerator& generator,
                                        const ObfuscationConfig& cfg) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  ObfuscationResult res;
  res.doc_id = doc.id;
  res.author = doc.author;
  res.original_text = doc.text;
  res.generator_id = generator.id();

  auto t0 = Clock::now();
  const TaggedText tagged = tagger.analyze(doc.id, doc.text);
  const FeatureVector v = space.vectorize(tagged, doc.text);
  const Attribution attr = integrated_gradients(model, v, cfg.ig);
  res.internal_prediction = model.author_labels()[attr.target_class];
  const auto ranked = rank_features(attr.values, space, cfg.ig.c, cfg.ig.rank_mode);
  res.elapsed.attribution = Clock::now() - t0;

  res.tokens = tagged.tokens;
  const std::size_t n = tagged.tokens.size();
  res.obfuscated_tokens.reserve(n);
  for (const auto& t : tagged.tokens) res.obfuscated_tokens.push_back(t.surface);

  std::vector<bool> frozen(n, false);
  std::size_t frozen_count = 0;
  const auto cap = static_cast<double>(n) * cfg.max_changed_fraction;
  auto finish = [&] { res.obfuscated_text = splice(doc.text, res.tokens, res.obfuscated_tokens); };

  std::size_t taken = 0;
  for (const auto& feature : ranked) {
    if (taken >= cfg.top_features || static_cast<double>(frozen_count) >= cap) break;
    if (feature.key.kind != FeatureKind::kPos) continue;
    ++taken;

    t0 = Clock::now();
    const auto matches = match_pos_ngram(tagged.tags, feature.key.gram, frozen);
    res.elapsed.matching += Clock::now() - t0;

    for (const auto& m : matches) {
      if (static_cast<double>(frozen_count) >= cap) break;
      t0 = Clock::now();
      auto [req, offset] = make_fill_request(res.obfuscated_tokens, tagged.tags, m.begin, m.end, cfg.context_window);
      FillResponse resp;
      try {
        resp = generator.fill(req);
        validate_fill(req, resp);
      } catch (const Error& e) {
        res.elapsed.generation += Clock::now() - t0;
        finish();
        throw GeneratorUnavailable(std::move(res), e.code(), e.what());
      }
      res.elapsed.generation += Clock::now() - t0;

      Change change{m, {}, {}, feature.key, feature.scaled_attribution, feature.rank};
      for (std::size_t k = m.begin; k < m.end; ++k) {
        const std::string original = res.obfuscated_tokens[k];
        change.original_tokens.push_back(original);
        res.obfuscated_tokens[k] = resp.replacements[k - m.begin];
        if (!detail::chunk_stable(res.tokens, res.obfuscated_tokens, k)) res.obfuscated_tokens[k] = original;
        change.replacement_tokens.push_back(res.obfuscated_tokens[k]);
        frozen[k] = true;
      }
      frozen_count += m.end - m.begin;
      res.changes.push_back(std::move(change));
    }
  }
  finish();
  return res;
}

// Token positions inside obfuscated_text (gaps are shared with the original).
inline std::vector<Token> obfuscated_token_positions(const ObfuscationResult& r) {
  std::vector<Token> out;
  out.reserve(r.tokens.size());
  std::size_t shift = 0;
  std::ptrdiff_t delta = 0;
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    shift = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r.tokens[i].start) + delta);
    out.push_back({r.obfuscated_tokens[i], shift, shift + r.obfuscated_tokens[i].size()});
    delta += static_cast<std::ptrdiff_t>(r.obfuscated_tokens[i].size()) -
             static_cast<std::ptrdiff_t>(r.tokens[i].end - r.tokens[i].start);
  }
  return out;
}

// Rebuilds the original text from obfuscated_text by undoing every change.
inline std::string revert_changes(const ObfuscationResult& r) {
  std::vector<std::string> surfaces = r.obfuscated_tokens;
  for (const auto& c : r.changes) {
    for (std::size_t k = c.span.begin; k < c.span.end; ++k) surfaces[k] = c.original_tokens[k - c.span.begin];
  }
  return splice(r.obfuscated_text, obfuscated_token_positions(r), surfaces);
}

inline double ms(std::chrono::nanoseconds d) { return static_cast<double>(d.count()) / 1e6; }

inline nlohmann::json to_json(const ObfuscationResult& r) {
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : r.changes) {
    changes.push_back({{"token_start", c.span.begin},
                       {"token_end", c.span.end},
                       {"char_start", r.tokens[c.span.begin].start},
                       {"char_end", r.tokens[c.span.end - 1].end},
                       {"original_tokens", c.original_tokens},
                       {"replacement_tokens", c.replacement_tokens},
                       {"feature", {{"kind", to_string(c.feature.kind)}, {"gram", c.feature.gram}}},
                       {"scaled_attribution", c.scaled_attribution},
                       {"feature_rank", c.feature_rank}});
  }
  return {{"type", "result"},
          {"doc_id", r.doc_id},
          {"author", r.author},
          {"original_text", r.original_text},
          {"obfuscated_text", r.obfuscated_text},
          {"token_count", r.tokens.size()},
          {"internal_prediction", r.internal_prediction},
          {"generator", r.generator_id},
          {"changes", std::move(changes)},
          {"elapsed_ms",
           {{"attribution", ms(r.elapsed.attribution)},
            {"matching", ms(r.elapsed.matching)},
            {"generation", ms(r.elapsed.generation)}}}};
}

// Interpretability report: which POS n-gram drove each edit and where it sits.
inline nlohmann::json explain(const ObfuscationResult& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& c : r.changes) {
    const std::size_t cb = r.tokens[c.span.begin].start;
    const std::size_t ce = r.tokens[c.span.end - 1].end;
    std::vector<std::string> replaced(r.obfuscated_tokens.begin() + static_cast<std::ptrdiff_t>(c.span.begin),
                                      r.obfuscated_tokens.begin() + static_cast<std::ptrdiff_t>(c.span.end));
    std::vector<Token> span_tokens(r.tokens.begin() + static_cast<std::ptrdiff_t>(c.span.begin),
                                   r.tokens.begin() + static_cast<std::ptrdiff_t>(c.span.end));
    for (auto& t : span_tokens) {
      t.start -= cb;
      t.end -= cb;
    }
    const std::string original = r.original_text.substr(cb, ce - cb);
    entries.push_back({{"pos_gram", c.feature.display()},
                       {"feature_rank", c.feature_rank},
                       {"scaled_attribution", c.scaled_attribution},
                       {"original", original},
                       {"replacement", splice(original, span_tokens, replaced)},
                       {"char_start", cb},
                       {"char_end", ce}});
  }
  nlohmann::json out = {{"doc_id", r.doc_id}, {"changes", std::move(entries)}};
  if (r.changes.empty()) out["message"] = "no matches among top-L features";
  return out;
}

inline std::string explain_text(const ObfuscationResult& r) {
  const auto j = explain(r);
  std::string out = "document " + r.doc_id + "\n";
  if (r.changes.empty()) return out + "  no matches among top-L features\n";
  for (const auto& e : j["changes"]) {
    out += "  [" + std::to_string(e["char_start"].get<std::size_t>()) + "," +
           std::to_string(e["char_end"].get<std::size_t>()) + ") " + e["pos_gram"].get<std::string>() + " (" +
           std::to_string(e["scaled_attribution"].get<double>()) + "): \"" + e["original"].get<std::string>() +
           "\" -> \"" + e["replacement"].get<std::string>() + "\"\n";
  }
  return out;
}

}  // namespace stylobf
