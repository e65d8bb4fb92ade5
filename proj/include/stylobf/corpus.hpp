#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace stylobf {

struct Document {
  std::string id;
  std::string author;
  std::string text;
};

using Corpus = std::vector<Document>;

inline bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Parses JSON-lines records {"id","author","text"}. Blank lines are skipped.
inline Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(line_no, "invalid JSON");
    }
    if (!rec.is_object()) throw MalformedRecord(line_no, "record is not an object");
    Document doc;
    for (auto [field, dest] : {std::pair{"id", &doc.id}, {"author", &doc.author}, {"text", &doc.text}}) {
      auto it = rec.find(field);
      if (it == rec.end() || !it->is_string()) {
        throw MalformedRecord(line_no, std::string("missing string field '") + field + "'");
      }
      *dest = it->get<std::string>();
    }
    if (doc.id.empty()) throw MalformedRecord(line_no, "empty id");
    if (doc.author.empty()) throw MalformedRecord(line_no, "empty author");
    if (is_blank(doc.text)) throw MalformedRecord(line_no, "empty text");
    if (!seen.insert(doc.id).second) throw DuplicateId(doc.id);
    corpus.push_back(std::move(doc));
  }
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no records");
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_corpus(in);
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus) {
    out << nlohmann::json{{"id", d.id}, {"author", d.author}, {"text", d.text}}.dump() << '\n';
  }
}

inline void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_corpus(out, corpus);
}

// Sorted, de-duplicated author labels.
inline std::vector<std::string> authors_of(const Corpus& corpus) {
  std::vector<std::string> out;
  for (const auto& d : corpus) out.push_back(d.author);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct SplitSpec {
  // (X, X*, T): target-training surrogate, attacker training, obfuscation test.
  std::array<double, 3> fractions{0.4, 0.4, 0.2};
  std::uint64_t seed = 7;
  bool stratify_by_author = true;

  void validate() const {
    double sum = 0.0;
    for (double f : fractions) {
      if (!(f >= 0.0)) throw Error(ErrorCode::kInvalidSplit, "fractions must be nonnegative");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidSplit, "fractions must sum to 1 (got " + std::to_string(sum) + ")");
    }
    if (std::any_of(fractions.begin(), fractions.end(), [](double f) { return f <= 0.0; })) {
      throw Error(ErrorCode::kInvalidSplit, "every split needs a positive fraction");
    }
    if (!stratify_by_author) throw Error(ErrorCode::kInvalidSplit, "only author-stratified splits are supported");
  }
};

struct Splits {
  Corpus target_train;    // X
  Corpus attacker_train;  // X*
  Corpus test;            // T
};

// Per-author seeded shuffle, then cut by fractions; rounding remainders go to X.
inline Splits split(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "nothing to split");

  std::map<std::string, std::vector<std::size_t>> by_author;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_author[corpus[i].author].push_back(i);

  std::vector<int> assignment(corpus.size(), 0);
  for (auto& [author, idx] : by_author) {
    const std::size_t n = idx.size();
    // Every split keeps at least one document per author.
    const auto cut = [n](double f) {
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)));
    };
    const std::size_t n_star = cut(spec.fractions[1]);
    const std::size_t n_test = cut(spec.fractions[2]);
    if (n < 3 || n_star + n_test >= n) throw AuthorTooSmall(author);
    Rng rng(spec.seed ^ fnv1a(author));
    rng.shuffle(std::span(idx));
    for (std::size_t k = 0; k < n_star; ++k) assignment[idx[k]] = 1;
    for (std::size_t k = n_star; k < n_star + n_test; ++k) assignment[idx[k]] = 2;
  }

  Splits out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    switch (assignment[i]) {
      case 0: out.target_train.push_back(corpus[i]); break;
      case 1: out.attacker_train.push_back(corpus[i]); break;
      default: out.test.push_back(corpus[i]); break;
    }
  }
  return out;
}

inline nlohmann::json split_manifest(const Splits& s, const SplitSpec& spec) {
  auto ids = [](const Corpus& c) {
    std::vector<std::string> v;
    for (const auto& d : c) v.push_back(d.id);
    return v;
  };
  return {{"version", 1},
          {"seed", spec.seed},
          {"fractions", spec.fractions},
          {"X", ids(s.target_train)},
          {"X_star", ids(s.attacker_train)},
          {"T", ids(s.test)}};
}

}  // namespace stylobf
