#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <span>
#include <map>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "rng.hpp"

namespace stylobf {

// Generator for synthetic multi-author corpora. Each author has a habitual mix of
// sentence constructions (POS habits) and private word preferences within every
// open word class. The vocabulary is chosen so the rule tagger labels it reliably.
struct SyntheticOptions {
  std::size_t authors = 10;
  std::size_t docs_per_author = 500;
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 10;
  double construction_skew = 0.5;  // larger = sharper per-author construction habits
  double word_skew = 1.5;          // Zipf exponent over each author's private word ranking
  std::uint64_t seed = 2024;
};

namespace synth {

inline const std::map<std::string, std::vector<std::string>>& vocabulary() {
  static const std::map<std::string, std::vector<std::string>> v = {
      {"DT", {"the", "a", "this", "every", "some", "another"}},
      {"IN", {"in", "on", "near", "with", "behind", "across", "under", "after", "before", "around", "beyond"}},
      {"PRP", {"he", "she", "they", "we", "it"}},
      {"PRP$", {"his", "her", "their", "our", "my"}},
      {"CC", {"and", "but", "or", "yet"}},
      {"MD", {"can", "could", "would", "should", "might", "will", "must"}},
      {"WDT", {"which", "that"}},
      {"BE", {"is", "was", "seems"}},
      {"RBC", {"very", "often", "never", "always", "also", "still", "soon", "rather", "quite"}},
      {"NNP", {"Anna", "Boris", "Clara", "Dmitri", "Elena", "Felix", "Greta", "Hugo", "Ingrid", "Jonas", "Kira",
               "Lukas", "Marta", "Nikolai", "Olga", "Pavel"}},
      {"NN", {"house",  "garden", "river",   "window", "table",   "letter", "road",   "market", "forest", "mountain",
              "village", "bridge", "kitchen", "doctor", "teacher", "farmer", "painter", "soldier", "engine", "bottle",
              "basket", "pocket", "candle", "lantern", "blanket", "hammer", "ladder", "harbor", "meadow", "tower",
              "winter", "summer", "morning", "evening", "shadow", "mirror", "castle", "valley", "island", "sailor"}},
      {"NNS", {"houses",  "gardens", "rivers",  "windows", "tables",  "letters", "roads",    "markets",
               "forests", "bridges", "doctors", "teachers", "farmers", "painters", "soldiers", "engines",
               "bottles", "baskets", "candles", "lanterns", "blankets", "hammers", "ladders",  "towers",
               "shadows", "mirrors", "castles", "valleys", "islands", "sailors"}},
      {"JJ", {"famous",   "careful", "curious",  "nervous", "joyful",  "hopeful",  "peaceful", "graceful",
              "useful",   "capable", "reliable", "visible", "central", "local",    "formal",   "natural",
              "active",   "massive", "creative", "heroic",  "classic", "tragic",   "restless", "endless",
              "careless", "foolish", "selfish",  "stylish", "generous", "glorious", "anxious",  "dangerous",
              "cheerful", "painful", "fearless", "helpless", "historic", "festive",  "eternal",  "gradual"}},
      {"RB", {"quickly", "slowly", "quietly", "rarely", "gently", "happily", "openly", "softly", "warmly", "boldly",
              "calmly", "proudly", "eagerly", "kindly", "loudly", "briefly", "firmly", "gladly", "nearly", "simply"}},
      {"VBD", {"walked",   "painted",  "opened",  "watched",  "carried",  "followed", "noticed",  "crossed",
               "visited",  "repaired", "cleaned", "borrowed", "delivered", "discovered", "entered", "finished",
               "gathered", "handled",  "joined",  "lifted",   "mentioned", "ordered",  "pulled",   "pushed",
               "reached",  "rescued",  "searched", "touched", "wanted",   "admired"}},
      {"VBZ", {"walks",   "paints",  "opens",   "watches", "carries", "follows", "notices", "crosses", "visits",
               "repairs", "cleans",  "borrows", "delivers", "discovers", "enters", "finishes", "gathers",
               "handles", "joins",   "lifts",   "orders",  "pulls",   "pushes",  "reaches", "touches", "wants"}},
      {"VBG", {"walking",  "painting", "opening",  "watching", "carrying", "following", "noticing", "crossing",
               "visiting", "repairing", "cleaning", "borrowing", "gathering", "handling", "lifting", "ordering",
               "pulling",  "pushing",  "reaching", "searching"}},
      {"VB", {"walk",    "paint",  "open",  "watch",  "carry",   "follow", "notice", "cross",  "visit", "repair",
              "clean",   "borrow", "deliver", "discover", "enter", "finish", "gather", "handle", "join", "lift"}},
      {"CD", {"two", "three", "four", "five", "seven", "ten", "twelve", "twenty"}},
  };
  return v;
}

// Sentence constructions as slot sequences. Slots name a vocabulary class or a
// literal token prefixed with '='.
inline const std::vector<std::vector<std::string>>& constructions() {
  static const std::vector<std::vector<std::string>> c = {
      {"DT", "JJ", "NN", "VBD", "DT", "NN", "=."},
      {"PRP", "VBD", "IN", "DT", "JJ", "NN", "=."},
      {"DT", "NN", "IN", "DT", "NN", "VBZ", "RB", "=."},
      {"NNP", "VBD", "DT", "NNS", "=,", "CC", "PRP", "VBD", "RB", "=."},
      {"DT", "JJ", "JJ", "NNS", "VBD", "IN", "PRP$", "NN", "=."},
      {"PRP", "MD", "VB", "DT", "NN", "IN", "DT", "NN", "=."},
      {"DT", "NN", "BE", "RBC", "JJ", "CC", "JJ", "=."},
      {"RB", "=,", "DT", "NN", "VBD", "=to", "VB", "DT", "NNS", "=."},
      {"IN", "DT", "NN", "=,", "PRP", "VBD", "DT", "JJ", "NN", "=."},
      {"DT", "NNS", "VBD", "RB", "IN", "DT", "NN", "=;", "PRP", "BE", "JJ", "=."},
      {"PRP", "BE", "VBG", "PRP$", "JJ", "NN", "=."},
      {"=there", "BE", "DT", "JJ", "NN", "IN", "DT", "NN", "=."},
      {"DT", "NN", "WDT", "VBD", "DT", "NN", "BE", "JJ", "=."},
      {"PRP", "VBD", "DT", "NN", "CC", "VBD", "CD", "NNS", "=."},
      {"NNP", "RBC", "VBD", "PRP$", "NNS", "IN", "DT", "NN", "=!"},
      {"PRP", "VBD", "=:", "DT", "NN", "=,", "DT", "NN", "=,", "CC", "DT", "NN", "=."},
  };
  return c;
}

struct AuthorProfile {
  std::vector<double> construction_weights;
  std::map<std::string, std::vector<double>> word_weights;  // per class, aligned with vocabulary()
};

inline std::size_t draw(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

inline AuthorProfile make_profile(Rng& rng, const SyntheticOptions& opt) {
  AuthorProfile p;
  // Log-normal habit weights: a few favourite constructions per author.
  for (std::size_t i = 0; i < constructions().size(); ++i) {
    p.construction_weights.push_back(std::exp(opt.construction_skew * rng.normal()));
  }
  for (const auto& [cls, words] : vocabulary()) {
    std::vector<std::size_t> rank(words.size());
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
    rng.shuffle(std::span(rank));
    std::vector<double> w(words.size());
    for (std::size_t r = 0; r < rank.size(); ++r) w[rank[r]] = 1.0 / std::pow(static_cast<double>(r + 1), opt.word_skew);
    p.word_weights[cls] = std::move(w);
  }
  return p;
}

inline std::string sentence(Rng& rng, const AuthorProfile& p) {
  const auto& cons = constructions()[draw(rng, p.construction_weights)];
  std::string out;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    const std::string& slot = cons[i];
    std::string word;
    if (slot.front() == '=') {
      word = slot.substr(1);
    } else {
      const auto& words = vocabulary().at(slot);
      word = words[draw(rng, p.word_weights.at(slot))];
    }
    const bool punct = word.size() == 1 && std::ispunct(static_cast<unsigned char>(word.front()));
    if (i == 0) {
      word.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(word.front())));
    } else if (!punct) {
      out += ' ';
    }
    out += word;
  }
  return out;
}

inline std::string document(Rng& rng, const AuthorProfile& p, std::size_t sentences) {
  std::string out;
  for (std::size_t s = 0; s < sentences; ++s) {
    if (s > 0) out += ' ';
    out += sentence(rng, p);
  }
  return out;
}

}  // namespace synth

inline std::vector<synth::AuthorProfile> synthetic_profiles(const SyntheticOptions& opt) {
  Rng rng(opt.seed);
  std::vector<synth::AuthorProfile> out;
  for (std::size_t a = 0; a < opt.authors; ++a) out.push_back(synth::make_profile(rng, opt));
  return out;
}

inline std::string synthetic_author_name(std::size_t a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "author%02zu", a);
  return buf;
}

inline Corpus generate_synthetic_corpus(const SyntheticOptions& opt) {
  const auto profiles = synthetic_profiles(opt);
  Rng rng(opt.seed ^ 0x5bd1e995ULL);
  Corpus corpus;
  corpus.reserve(opt.authors * opt.docs_per_author);
  for (std::size_t d = 0; d < opt.docs_per_author; ++d) {
    for (std::size_t a = 0; a < opt.authors; ++a) {
      const std::size_t n = opt.min_sentences + rng.below(opt.max_sentences - opt.min_sentences + 1);
      corpus.push_back({synthetic_author_name(a) + "-" + std::to_string(d), synthetic_author_name(a),
                        synth::document(rng, profiles[a], n)});
    }
  }
  return corpus;
}

// A single long text (at least `min_words` tokens) in the style of author `a`.
inline std::string synthetic_long_text(const SyntheticOptions& opt, std::size_t a, std::size_t min_words,
                                       std::uint64_t seed) {
  const auto profiles = synthetic_profiles(opt);
  Rng rng(seed);
  std::string out;
  std::size_t words = 0;
  while (words < min_words) {
    const std::string s = synth::sentence(rng, profiles[a % profiles.size()]);
    words += static_cast<std::size_t>(std::count(s.begin(), s.end(), ' ')) + 2;
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

}  // namespace stylobf
