#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "obfuscate.hpp"
#include "postag.hpp"
#include "tokenize.hpp"

namespace stylobf {

// A target attribution classifier the attack is evaluated against.
class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual std::string predict(std::string_view text) const = 0;
};

struct EvalPair {
  std::string doc_id;
  std::string original;
  std::string obfuscated;
  std::string author;
};

struct Retained {
  std::vector<EvalPair> pairs;
  double accuracy_on_originals = 0.0;  // before filtering
};

// Keeps the samples the target attributes correctly before obfuscation.
inline Retained retain_correct(const TextClassifier& target, std::span<const EvalPair> pairs) {
  Retained out;
  for (const auto& p : pairs) {
    if (target.predict(p.original) == p.author) out.pairs.push_back(p);
  }
  out.accuracy_on_originals =
      pairs.empty() ? 0.0 : static_cast<double>(out.pairs.size()) / static_cast<double>(pairs.size());
  return out;
}

// Macro F1 over the union of true and predicted labels; 0/0 counts as 0.
inline double macro_f1(std::span<const std::string> truth, std::span<const std::string> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::kInvalidArgument, "label lists differ in length");
  if (truth.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "no labels");
  std::set<std::string> labels(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());
  double sum = 0.0;
  for (const auto& label : labels) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == label, p = predicted[i] == label;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    sum += precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(labels.size());
}

struct AttackOutcome {
  double accuracy_after = 0.0;
  double f1_after = 0.0;
  std::vector<std::string> predictions;  // target labels for each obfuscated text
};

inline AttackOutcome attack_success(const TextClassifier& target, std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "no pairs to evaluate");
  AttackOutcome out;
  std::vector<std::string> truth;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    out.predictions.push_back(target.predict(p.obfuscated));
    truth.push_back(p.author);
    correct += out.predictions.back() == p.author;
  }
  out.accuracy_after = static_cast<double>(correct) / static_cast<double>(pairs.size());
  out.f1_after = macro_f1(truth, out.predictions);
  return out;
}

struct MeteorDetail {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f_mean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

// Exact-surface unigram METEOR. Each candidate token aligns to an unused
// reference occurrence, preferring the one that continues the current chunk.
inline MeteorDetail meteor_detail(std::string_view reference, std::string_view candidate) {
  const auto ref = tokenize(reference);
  const auto cand = tokenize(candidate);
  MeteorDetail d;
  if (ref.empty() || cand.empty()) return d;

  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t j = 0; j < ref.size(); ++j) positions[ref[j].surface].push_back(j);
  std::vector<bool> used(ref.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> alignment;  // (candidate, reference)
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t prev_ref = kNone;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    auto it = positions.find(cand[i].surface);
    if (it == positions.end()) {
      prev_ref = kNone;
      continue;
    }
    std::size_t pick = kNone;
    for (std::size_t j : it->second) {
      if (used[j]) continue;
      if (prev_ref != kNone && j == prev_ref + 1) {
        pick = j;
        break;
      }
      if (pick == kNone) pick = j;
    }
    prev_ref = pick;
    if (pick == kNone) continue;
    used[pick] = true;
    alignment.emplace_back(i, pick);
  }
  d.matches = alignment.size();
  if (d.matches == 0) return d;
  d.chunks = 1;
  for (std::size_t k = 1; k < alignment.size(); ++k) {
    const bool adjacent = alignment[k].first == alignment[k - 1].first + 1 &&
                          alignment[k].second == alignment[k - 1].second + 1;
    if (!adjacent) ++d.chunks;
  }
  const auto m = static_cast<double>(d.matches);
  d.precision = m / static_cast<double>(cand.size());
  d.recall = m / static_cast<double>(ref.size());
  d.f_mean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
  d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
  d.score = d.f_mean * (1.0 - d.penalty);
  return d;
}

inline double meteor(std::string_view reference, std::string_view candidate) {
  return meteor_detail(reference, candidate).score;
}

// Maps a batch of texts into one shared vector space.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) const = 0;
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "embeddings differ in dimension");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Term-frequency vectors weighted by smoothed IDF from a reference corpus.
// Terms unseen in the reference get the maximum IDF.
class TfIdfEmbedder final : public Embedder {
 public:
  TfIdfEmbedder() = default;
  explicit TfIdfEmbedder(std::span<const std::string> reference) {
    std::unordered_map<std::string, std::size_t> df;
    for (const auto& text : reference) {
      std::set<std::string> seen;
      for (const auto& t : tokenize(text)) seen.insert(detail::ascii_lower(t.surface));
      for (const auto& term : seen) ++df[term];
    }
    const double n = static_cast<double>(reference.size());
    for (const auto& [term, count] : df) idf_[term] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
    unseen_idf_ = std::log(1.0 + n) + 1.0;
  }

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) const override {
    std::map<std::string, std::size_t> vocab;
    std::vector<std::unordered_map<std::string, double>> counts(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      for (const auto& t : tokenize(texts[i])) {
        const auto term = detail::ascii_lower(t.surface);
        counts[i][term] += 1.0;
        vocab.emplace(term, 0);
      }
    }
    std::size_t k = 0;
    for (auto& [term, slot] : vocab) slot = k++;
    std::vector<std::vector<double>> out(texts.size(), std::vector<double>(vocab.size(), 0.0));
    for (std::size_t i = 0; i < texts.size(); ++i) {
      for (const auto& [term, c] : counts[i]) {
        auto it = idf_.find(term);
        out[i][vocab.at(term)] = c * (it == idf_.end() ? unseen_idf_ : it->second);
      }
    }
    return out;
  }

 private:
  std::unordered_map<std::string, double> idf_;
  double unseen_idf_ = 1.0;
};

inline double cosine_similarity(const Embedder& embedder, const std::string& a, const std::string& b) {
  const std::vector<std::string> texts{a, b};
  const auto e = embedder.embed(texts);
  return cosine(e[0], e[1]);
}

struct EntropyResult {
  double normalized = 0.0;
  std::map<std::string, double> contributions;  // sums to `normalized`
};

// Base-2 Shannon entropy of post-obfuscation labels divided by log2(pool size).
// Pool defaults to the distinct labels seen before or after obfuscation.
inline EntropyResult label_entropy(std::span<const std::pair<std::string, std::string>> predictions,
                                   std::optional<std::size_t> pool_size = std::nullopt) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyInput, "no predictions");
  std::set<std::string> pool;
  std::map<std::string, std::size_t> counts;
  for (const auto& [pre, post] : predictions) {
    pool.insert(pre);
    pool.insert(post);
    ++counts[post];
  }
  const std::size_t k = pool_size.value_or(pool.size());
  EntropyResult out;
  if (k <= 1) {
    for (const auto& [label, c] : counts) out.contributions[label] = 0.0;
    return out;
  }
  const double norm = std::log2(static_cast<double>(k));
  const double n = static_cast<double>(predictions.size());
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / n;
    const double term = p >= 1.0 ? 0.0 : -p * std::log2(p) / norm;
    out.contributions[label] = term;
    out.normalized += term;
  }
  return out;
}

// Fraction of tokens inside changes whose surface actually differs.
inline double change_rate(const TaggedText& t, const ObfuscationResult& r) {
  if (t.tokens.empty()) return 0.0;
  std::size_t changed = 0;
  for (const auto& c : r.changes) {
    for (std::size_t k = 0; k < c.original_tokens.size(); ++k) changed += c.original_tokens[k] != c.replacement_tokens[k];
  }
  return static_cast<double>(changed) / static_cast<double>(t.tokens.size());
}

inline double change_rate(const ObfuscationResult& r) {
  TaggedText t;
  t.tokens = r.tokens;
  return change_rate(t, r);
}

struct EvalRow {
  std::string doc_id;
  std::string author;
  std::string prediction_after;
  double meteor = 0.0;
  double cosine = 0.0;
  double change_rate = 0.0;
};

struct EvalReport {
  std::size_t samples_total = 0;
  std::size_t samples_retained = 0;
  double accuracy_on_originals = 0.0;
  double accuracy_before = 0.0;  // over retained samples, 1.0 by construction
  double accuracy_after = 0.0;
  double f1_after = 0.0;
  double meteor_mean = 0.0;
  double cosine_mean = 0.0;
  double change_rate_mean = 0.0;
  double entropy = 0.0;
  std::map<std::string, double> per_author_entropy_contribution;
  std::vector<EvalRow> rows;
};

struct EvalInput {
  EvalPair pair;
  double change_rate = 0.0;
};

// Retains originally-correct samples, then computes attack metrics,
// semantic similarity and label entropy over the retained set.
inline EvalReport evaluate(const TextClassifier& target, std::span<const EvalInput> inputs, const Embedder& embedder,
                           std::optional<std::size_t> author_pool = std::nullopt) {
  EvalReport rep;
  rep.samples_total = inputs.size();
  std::vector<EvalPair> retained;
  std::vector<double> rates;
  std::size_t correct = 0;
  for (const auto& in : inputs) {
    if (target.predict(in.pair.original) != in.pair.author) continue;
    ++correct;
    retained.push_back(in.pair);
    rates.push_back(in.change_rate);
  }
  rep.samples_retained = retained.size();
  rep.accuracy_on_originals =
      inputs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(inputs.size());
  if (retained.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "target classified no original correctly");
  rep.accuracy_before = 1.0;

  const auto attack = attack_success(target, retained);
  rep.accuracy_after = attack.accuracy_after;
  rep.f1_after = attack.f1_after;

  std::vector<std::pair<std::string, std::string>> labels;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    const auto& p = retained[i];
    EvalRow row{p.doc_id, p.author, attack.predictions[i], meteor(p.original, p.obfuscated),
                cosine_similarity(embedder, p.original, p.obfuscated), rates[i]};
    rep.meteor_mean += row.meteor;
    rep.cosine_mean += row.cosine;
    rep.change_rate_mean += row.change_rate;
    rep.rows.push_back(std::move(row));
    labels.emplace_back(p.author, attack.predictions[i]);
  }
  const double n = static_cast<double>(retained.size());
  rep.meteor_mean /= n;
  rep.cosine_mean /= n;
  rep.change_rate_mean /= n;
  const auto ent = label_entropy(labels, author_pool);
  rep.entropy = ent.normalized;
  rep.per_author_entropy_contribution = ent.contributions;
  return rep;
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"samples_total", r.samples_total},
          {"samples_retained", r.samples_retained},
          {"accuracy_on_originals", r.accuracy_on_originals},
          {"accuracy_before", r.accuracy_before},
          {"accuracy_after", r.accuracy_after},
          {"f1_after", r.f1_after},
          {"meteor_mean", r.meteor_mean},
          {"cosine_mean", r.cosine_mean},
          {"change_rate_mean", r.change_rate_mean},
          {"entropy", r.entropy},
          {"per_author_entropy_contribution", r.per_author_entropy_contribution}};
}

inline std::string to_table(const EvalReport& r) {
  std::string out;
  char line[128];
  auto add = [&](const char* name, double v) {
    std::snprintf(line, sizeof line, "%-24s %10.4f\n", name, v);
    out += line;
  };
  std::snprintf(line, sizeof line, "%-24s %10zu\n", "samples_total", r.samples_total);
  out += line;
  std::snprintf(line, sizeof line, "%-24s %10zu\n", "samples_retained", r.samples_retained);
  out += line;
  add("accuracy_on_originals", r.accuracy_on_originals);
  add("accuracy_before", r.accuracy_before);
  add("accuracy_after", r.accuracy_after);
  add("f1_after", r.f1_after);
  add("meteor_mean", r.meteor_mean);
  add("cosine_mean", r.cosine_mean);
  add("change_rate_mean", r.change_rate_mean);
  add("entropy", r.entropy);
  for (const auto& [author, c] : r.per_author_entropy_contribution) {
    std::snprintf(line, sizeof line, "  %-22s %10.4f\n", author.c_str(), c);
    out += line;
  }
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const EvalReport& r) {
  std::string out = "doc_id,author,prediction_after,meteor,cosine,change_rate\n";
  char nums[96];
  for (const auto& row : r.rows) {
    std::snprintf(nums, sizeof nums, ",%.6f,%.6f,%.6f\n", row.meteor, row.cosine, row.change_rate);
    out += csv_escape(row.doc_id) + "," + csv_escape(row.author) + "," + csv_escape(row.prediction_after) + nums;
  }
  return out;
}

}  // namespace stylobf
