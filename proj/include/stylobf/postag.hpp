#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"
#include "tokenize.hpp"

namespace stylobf {

// Penn Treebank tagset (45 tags).
inline constexpr std::array<std::string_view, 45> kPennTags = {
    "CC",  "CD",   "DT",  "EX",  "FW",  "IN",  "JJ",   "JJR", "JJS",  "LS",  "MD",    "NN",    "NNS",  "NNP", "NNPS",
    "PDT", "POS",  "PRP", "PRP$", "RB", "RBR", "RBS",  "RP",  "SYM",  "TO",  "UH",    "VB",    "VBD",  "VBG", "VBN",
    "VBP", "VBZ",  "WDT", "WP",  "WP$", "WRB", "#",    "$",   ".",    ",",   ":",     "-LRB-", "-RRB-", "``",  "''"};

inline bool is_penn_tag(std::string_view tag) {
  return std::find(kPennTags.begin(), kPennTags.end(), tag) != kPennTags.end();
}

inline std::vector<std::string> penn_tagset() { return {kPennTags.begin(), kPennTags.end()}; }

struct TaggedText {
  std::string doc_id;
  std::vector<Token> tokens;
  std::vector<std::string> tags;
};

// ---------------------------------------------------------------------------
// Rule fallback: closed-class lexicon, suffix heuristics, default NN.

namespace detail {

inline const std::unordered_map<std::string, std::string_view>& closed_class_lexicon() {
  static const auto table = [] {
    std::unordered_map<std::string, std::string_view> t;
    auto add = [&t](std::string_view tag, std::initializer_list<const char*> words) {
      for (const char* w : words) t.emplace(w, tag);
    };
    add("DT", {"the", "a", "an", "this", "these", "those", "every", "each", "some", "any", "no", "another",
               "either", "neither"});
    add("PDT", {"all", "both", "half"});
    add("IN", {"of",     "in",      "on",    "at",      "by",      "for",    "with",    "from",   "about",
               "into",   "over",    "under", "after",   "before",  "between", "through", "during", "without",
               "against", "among",  "because", "if",    "while",   "although", "since", "until",  "that",
               "as",     "than",    "upon",  "within",  "across",  "behind", "beyond",  "near",   "around",
               "toward", "towards", "whether", "unless", "though", "despite", "along",  "above",  "below"});
    add("CC", {"and", "but", "or", "nor", "yet", "plus"});
    add("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them", "myself", "yourself",
                "himself", "herself", "itself", "ourselves", "themselves", "one"});
    add("PRP$", {"my", "your", "his", "her", "its", "our", "their"});
    add("MD", {"can", "could", "will", "would", "shall", "should", "may", "might", "must", "ca", "wo", "'ll", "'d"});
    add("TO", {"to"});
    add("EX", {"there"});
    add("WDT", {"which", "whichever", "whatever"});
    add("WP", {"who", "whom", "what", "whoever"});
    add("WP$", {"whose"});
    add("WRB", {"when", "where", "why", "how", "whenever", "wherever"});
    add("RB", {"not",  "n't",   "very",  "also",   "too",     "just",  "then",  "now",    "never", "always",
               "often", "here", "so",    "quite",  "really",  "even",  "still", "already", "soon",  "again",
               "ever",  "perhaps", "almost", "rather", "maybe", "else",  "yet",   "away",   "indeed", "instead",
               "sometimes", "together", "later", "today", "once", "twice", "anyway", "thus", "hence"});
    add("RBR", {"more", "less"});
    add("RBS", {"most", "least"});
    add("VBZ", {"is", "has", "does", "says", "goes", "seems"});
    add("VBP", {"are", "am", "have", "do", "'re", "'m", "'ve"});
    add("VBD", {"was",  "were", "had",  "did",  "said", "went", "made", "came", "took", "saw",  "got",
                "knew", "thought", "told", "felt", "gave", "found", "left", "became", "began", "kept",
                "ran", "wrote", "spoke", "brought", "stood", "sat", "met", "paid", "sent", "built"});
    add("VBN", {"been", "done", "gone", "taken", "seen", "known", "given", "written", "spoken", "become",
                "begun", "shown", "grown", "driven", "eaten", "fallen", "forgotten", "chosen"});
    add("VBG", {"being", "having", "doing", "going"});
    add("VB", {"be", "get", "make", "go", "know", "take", "see", "come", "think", "look", "want", "give",
               "use", "find", "tell", "ask", "work", "feel", "try", "leave", "call", "keep", "let", "begin"});
    add("POS", {"'s", "'"});
    add("UH", {"oh", "yes", "hey", "wow", "ah", "hello", "okay", "ok", "please", "thanks"});
    add("JJ", {"good", "new", "old", "great", "big", "small", "little", "long", "high", "other", "large", "own",
               "young", "few", "bad", "same", "able", "last", "first", "next", "early", "late", "right", "real",
               "sure", "whole", "free", "full", "true", "hard", "clear", "major", "low", "short", "strong",
               "many", "much", "such", "only", "several", "different", "certain", "whole", "happy", "simple"});
    add("JJR", {"better", "worse", "larger", "smaller", "bigger", "older", "younger", "higher", "lower",
                "greater", "longer", "easier", "harder"});
    add("JJS", {"best", "worst", "largest", "smallest", "biggest", "oldest", "highest", "greatest"});
    add("NNS", {"people", "men", "women", "children", "things", "years", "days", "times", "ways"});
    add("CD", {"zero", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
               "twelve", "twenty", "hundred", "thousand", "million", "billion"});
    return t;
  }();
  return table;
}

inline std::string_view punctuation_tag(std::string_view s, bool after_space) {
  if (s == "." || s == "!" || s == "?") return ".";
  if (s == ",") return ",";
  if (s == ":" || s == ";" || s.starts_with("-") || s.starts_with("..")) return ":";
  if (s == "(" || s == "[" || s == "{") return "-LRB-";
  if (s == ")" || s == "]" || s == "}") return "-RRB-";
  if (s == "\"" || s == "`") return after_space ? "``" : "''";
  if (s == "'") return "''";
  if (s == "$") return "$";
  if (s == "#") return "#";
  if (s == "%") return "NN";
  if (s == "&") return "CC";
  return "SYM";
}

inline bool looks_numeric(std::string_view s) {
  if (s.empty() || !is_digit(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return is_digit(c) || c == '.' || c == ','; }) ||
         s.ends_with("th") || s.ends_with("st") || s.ends_with("nd") || s.ends_with("rd") || s.ends_with("s");
}

inline bool ends_with_any(std::string_view w, std::initializer_list<std::string_view> suffixes,
                          std::size_t min_len = 0) {
  if (w.size() < min_len) return false;
  return std::any_of(suffixes.begin(), suffixes.end(), [w](std::string_view s) { return w.ends_with(s); });
}

inline std::string_view suffix_tag(std::string_view lower, std::string_view prev_tag) {
  if (prev_tag == "TO" || prev_tag == "MD") return "VB";
  if (ends_with_any(lower, {"ly"}, 4)) return "RB";
  if (ends_with_any(lower, {"ing"}, 5)) return "VBG";
  if (ends_with_any(lower, {"ed"}, 4)) {
    const bool perfect = prev_tag == "VBZ" || prev_tag == "VBP" || prev_tag == "VBD" || prev_tag == "VBN";
    return perfect ? "VBN" : "VBD";
  }
  if (ends_with_any(lower, {"fy", "ize", "ise"}, 4)) return "VB";
  if (ends_with_any(lower, {"est"}, 6)) return "JJS";
  if (ends_with_any(lower, {"tions", "sions", "ments", "nesses", "ities", "ships", "isms", "ances", "ences"}, 6))
    return "NNS";
  if (ends_with_any(lower, {"tion", "sion", "ment", "ness", "ity", "ship", "ism", "ance", "ence", "hood"}, 5))
    return "NN";
  if (ends_with_any(lower, {"ous", "ful", "able", "ible", "al", "ive", "ic", "less", "ish", "ary", "ant", "ent"}, 4))
    return "JJ";
  if (lower.size() > 3 && lower.ends_with("s") && !ends_with_any(lower, {"ss", "us", "is"})) {
    const bool subject = prev_tag == "NN" || prev_tag == "NNP" || prev_tag == "PRP";
    return subject ? "VBZ" : "NNS";
  }
  return "NN";
}

}  // namespace detail

// Rule-based tagger; total over every token (non-ASCII words default to NN).
inline std::vector<std::string> fallback_tag(std::span<const Token> tokens) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  const auto& lexicon = detail::closed_class_lexicon();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& w = tokens[i].surface;
    const std::string_view prev = i > 0 ? std::string_view(tags[i - 1]) : std::string_view(".");
    const unsigned char first = w.empty() ? 0 : static_cast<unsigned char>(w.front());

    if (!w.empty() && !detail::is_word_byte(first) && w != "'s" && w != "'re" && w != "'m" && w != "'ve" &&
        w != "'ll" && w != "'d") {
      const bool after_space = i == 0 || tokens[i - 1].end < tokens[i].start;
      tags.emplace_back(detail::punctuation_tag(w, after_space));
      continue;
    }
    if (detail::looks_numeric(w)) {
      tags.emplace_back("CD");
      continue;
    }
    const std::string lower = detail::ascii_lower(w);
    if (auto it = lexicon.find(lower); it != lexicon.end()) {
      std::string_view tag = it->second;
      // "'s" after a pronoun or before a verb form reads as "is".
      if (lower == "'s" && (prev == "PRP" || prev == "EX" || prev == "WP")) tag = "VBZ";
      if (lower == "her" && (i + 1 >= tokens.size() || !detail::is_word_byte(static_cast<unsigned char>(tokens[i + 1].surface.front()))))
        tag = "PRP";
      if (lower == "that" && (prev == "NN" || prev == "NNS")) tag = "WDT";
      tags.emplace_back(tag);
      continue;
    }
    const bool sentence_initial = prev == "." || prev == "``" || prev == ":";
    if (std::isupper(first) && !sentence_initial) {
      tags.emplace_back("NNP");
      continue;
    }
    if (first >= 0x80) {
      tags.emplace_back("NN");
      continue;
    }
    tags.emplace_back(detail::suffix_tag(lower, prev));
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Averaged perceptron tagger.

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

class TaggerModel {
 public:
  static constexpr int kFormatVersion = 1;

  TaggerModel() = default;
  TaggerModel(std::vector<std::string> tagset,
              std::unordered_map<std::string, std::unordered_map<int, double>> weights)
      : tagset_(std::move(tagset)), weights_(std::move(weights)) {
    validate_tagset();
  }

  const std::vector<std::string>& tagset() const { return tagset_; }
  std::size_t num_features() const { return weights_.size(); }

  std::vector<std::string> tag(std::span<const std::string> words) const {
    std::vector<std::string> out;
    out.reserve(words.size());
    std::string p1 = "-START-", p2 = "-START2-";
    std::vector<double> scores(tagset_.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
      const int best = predict(features(words, i, p1, p2), scores);
      out.push_back(tagset_[static_cast<std::size_t>(best)]);
      p2 = std::move(p1);
      p1 = out.back();
    }
    return out;
  }

  std::vector<std::string> tag(std::span<const Token> tokens) const {
    std::vector<std::string> words;
    words.reserve(tokens.size());
    for (const auto& t : tokens) words.push_back(t.surface);
    return tag(std::span<const std::string>(words));
  }

  // Context features: bias, word, affixes up to length 3, neighbours, two previous tags.
  static std::vector<std::string> features(std::span<const std::string> words, std::size_t i, std::string_view p1,
                                           std::string_view p2) {
    const std::string w = detail::ascii_lower(words[i]);
    auto prefix = [&](std::size_t n) { return w.substr(0, std::min(n, w.size())); };
    auto suffix = [&](std::size_t n) { return w.substr(w.size() - std::min(n, w.size())); };
    const std::string prev = i > 0 ? detail::ascii_lower(words[i - 1]) : "-START-";
    const std::string next = i + 1 < words.size() ? detail::ascii_lower(words[i + 1]) : "-END-";
    const bool cap = !words[i].empty() && std::isupper(static_cast<unsigned char>(words[i].front()));
    return {"bias",
            "w=" + w,
            "p1=" + prefix(1),
            "p2=" + prefix(2),
            "p3=" + prefix(3),
            "s1=" + suffix(1),
            "s2=" + suffix(2),
            "s3=" + suffix(3),
            "cap=" + std::string(cap ? "1" : "0"),
            "w-1=" + prev,
            "w+1=" + next,
            "t-1=" + std::string(p1),
            "t-2t-1=" + std::string(p2) + "|" + std::string(p1),
            "t-1w=" + std::string(p1) + "|" + w};
  }

  int predict(const std::vector<std::string>& feats, std::vector<double>& scores) const {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (const auto& f : feats) {
      auto it = weights_.find(f);
      if (it == weights_.end()) continue;
      for (const auto& [cls, w] : it->second) scores[static_cast<std::size_t>(cls)] += w;
    }
    // Ties go to the lowest tag index.
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }

  nlohmann::json to_json() const {
    nlohmann::json weights = nlohmann::json::object();
    std::map<std::string, std::map<std::string, double>> sorted;
    for (const auto& [feat, row] : weights_) {
      for (const auto& [cls, w] : row) {
        if (w != 0.0) sorted[feat][tagset_[static_cast<std::size_t>(cls)]] = w;
      }
    }
    for (auto& [feat, row] : sorted) weights[feat] = row;
    return {{"format", "stylobf-tagger"}, {"version", kFormatVersion}, {"tagset", tagset_}, {"weights", weights}};
  }

  static TaggerModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "stylobf-tagger") throw FormatError("tagger", "unexpected format tag");
      if (j.at("version").get<int>() != kFormatVersion) throw FormatError("tagger", "unsupported version");
      auto tagset = j.at("tagset").get<std::vector<std::string>>();
      std::unordered_map<std::string, int> index;
      for (std::size_t i = 0; i < tagset.size(); ++i) index[tagset[i]] = static_cast<int>(i);
      std::unordered_map<std::string, std::unordered_map<int, double>> weights;
      for (const auto& [feat, row] : j.at("weights").items()) {
        for (const auto& [tag, w] : row.items()) {
          auto it = index.find(tag);
          if (it == index.end()) throw FormatError("tagger.weights", "unknown tag " + tag);
          weights[feat][it->second] = w.get<double>();
        }
      }
      return TaggerModel(std::move(tagset), std::move(weights));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("tagger", e.what());
    }
  }

 private:
  void validate_tagset() const {
    if (tagset_.empty()) throw Error(ErrorCode::kInvalidArgument, "tagset is empty");
    auto sorted = tagset_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorCode::kInvalidArgument, "tagset has duplicates");
    }
  }

  std::vector<std::string> tagset_;
  std::unordered_map<std::string, std::unordered_map<int, double>> weights_;
};

struct TaggerTrainOptions {
  int epochs = 5;
  std::uint64_t seed = 1;
  double holdout_fraction = 0.0;
  std::vector<std::string> tagset = penn_tagset();
};

struct TaggerTrainReport {
  TaggerModel model;
  double train_accuracy = 0.0;
  std::optional<double> heldout_accuracy;
};

inline double tagging_accuracy(const TaggerModel& model, std::span<const TaggedSentence> data) {
  std::size_t correct = 0, total = 0;
  for (const auto& s : data) {
    const auto pred = model.tag(std::span<const std::string>(s.tokens));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == s.tags[i];
    total += pred.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

inline TaggerTrainReport train_tagger(std::vector<TaggedSentence> annotated, const TaggerTrainOptions& opt = {}) {
  if (annotated.empty()) throw Error(ErrorCode::kEmptyTraining, "no annotated sentences");
  if (opt.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");

  std::unordered_map<std::string, int> tag_index;
  for (std::size_t i = 0; i < opt.tagset.size(); ++i) tag_index[opt.tagset[i]] = static_cast<int>(i);
  for (const auto& s : annotated) {
    if (s.tokens.size() != s.tags.size()) throw Error(ErrorCode::kInvalidArgument, "token/tag count mismatch");
    for (const auto& t : s.tags) {
      if (!tag_index.contains(t)) throw UnknownTag(t);
    }
  }

  Rng rng(opt.seed);
  std::vector<TaggedSentence> heldout;
  if (opt.holdout_fraction > 0.0) {
    rng.shuffle(std::span(annotated));
    const auto n = static_cast<std::size_t>(opt.holdout_fraction * static_cast<double>(annotated.size()));
    if (n > 0 && n < annotated.size()) {
      heldout.assign(std::make_move_iterator(annotated.end() - static_cast<std::ptrdiff_t>(n)),
                     std::make_move_iterator(annotated.end()));
      annotated.resize(annotated.size() - n);
    }
  }

  struct Param {
    double weight = 0.0;
    double total = 0.0;
    long stamp = 0;
  };
  std::unordered_map<std::string, std::unordered_map<int, Param>> params;
  std::unordered_map<std::string, std::unordered_map<int, double>> live;
  long clock = 0;
  auto update = [&](const std::string& feat, int cls, double delta) {
    Param& p = params[feat][cls];
    p.total += static_cast<double>(clock - p.stamp) * p.weight;
    p.stamp = clock;
    p.weight += delta;
    live[feat][cls] = p.weight;
  };

  std::vector<std::size_t> order(annotated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> scores(opt.tagset.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t si : order) {
      const auto& s = annotated[si];
      std::string p1 = "-START-", p2 = "-START2-";
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        const auto feats = TaggerModel::features(s.tokens, i, p1, p2);
        std::fill(scores.begin(), scores.end(), 0.0);
        for (const auto& f : feats) {
          auto it = live.find(f);
          if (it == live.end()) continue;
          for (const auto& [cls, w] : it->second) scores[static_cast<std::size_t>(cls)] += w;
        }
        const int truth = tag_index.at(s.tags[i]);
        // Best competing tag; a tie with the truth counts as a mistake.
        int guess = truth == 0 ? 1 : 0;
        for (int k = 0; k < static_cast<int>(scores.size()); ++k) {
          if (k != truth && scores[static_cast<std::size_t>(k)] > scores[static_cast<std::size_t>(guess)]) guess = k;
        }
        ++clock;
        if (scores[static_cast<std::size_t>(guess)] >= scores[static_cast<std::size_t>(truth)]) {
          for (const auto& f : feats) {
            update(f, truth, 1.0);
            update(f, guess, -1.0);
          }
        }
        // Teacher forcing on previous tags.
        p2 = std::move(p1);
        p1 = s.tags[i];
      }
    }
  }

  std::unordered_map<std::string, std::unordered_map<int, double>> averaged;
  for (auto& [feat, row] : params) {
    for (auto& [cls, p] : row) {
      const double total = p.total + static_cast<double>(clock - p.stamp) * p.weight;
      const double avg = total / static_cast<double>(std::max<long>(clock, 1));
      if (avg != 0.0) averaged[feat][cls] = avg;
    }
  }

  TaggerTrainReport report{TaggerModel(opt.tagset, std::move(averaged)), 0.0, std::nullopt};
  report.train_accuracy = tagging_accuracy(report.model, annotated);
  if (!heldout.empty()) report.heldout_accuracy = tagging_accuracy(report.model, heldout);
  return report;
}

// Two-column "token tag" lines; blank lines separate sentences.
inline std::vector<TaggedSentence> parse_conll(std::istream& in) {
  std::vector<TaggedSentence> out;
  TaggedSentence cur;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!cur.tokens.empty()) out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    const auto sep = line.find_first_of(" \t");
    if (sep == std::string::npos) throw MalformedRecord(line_no, "expected 'token tag'");
    const auto tag_begin = line.find_first_not_of(" \t", sep);
    if (tag_begin == std::string::npos) throw MalformedRecord(line_no, "missing tag");
    auto tag_end = line.find_first_of(" \t", tag_begin);
    cur.tokens.push_back(line.substr(0, sep));
    cur.tags.push_back(line.substr(tag_begin, tag_end == std::string::npos ? std::string::npos : tag_end - tag_begin));
  }
  flush();
  return out;
}

// Tags tokens with a trained model when one is given, otherwise with the rule fallback.
class Tagger {
 public:
  Tagger() = default;
  explicit Tagger(std::shared_ptr<const TaggerModel> model) : model_(std::move(model)) {}

  bool has_model() const { return model_ != nullptr; }
  const TaggerModel* model() const { return model_.get(); }

  std::vector<std::string> tag(std::span<const Token> tokens) const {
    return model_ ? model_->tag(tokens) : fallback_tag(tokens);
  }

  TaggedText analyze(std::string doc_id, std::string_view text) const {
    TaggedText out;
    out.doc_id = std::move(doc_id);
    out.tokens = tokenize(text);
    out.tags = tag(out.tokens);
    return out;
  }

 private:
  std::shared_ptr<const TaggerModel> model_;
};

}  // namespace stylobf
