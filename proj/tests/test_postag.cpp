#include <catch_amalgamated.hpp>

#include <sstream>

#include "support.hpp"

using namespace stylobf;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& t) {
  std::vector<std::string> out;
  for (const auto& x : t) out.push_back(x.surface);
  return out;
}

std::vector<std::string> tags_of(std::string_view text) { return Tagger{}.analyze("", text).tags; }

using Strings = std::vector<std::string>;

}  // namespace

TEST_CASE("tokenize splits punctuation and keeps byte offsets") {
  const auto t = tokenize("Hi, Bob.");
  REQUIRE(surfaces(t) == Strings{"Hi", ",", "Bob", "."});
  CHECK(t[0].start == 0);
  CHECK(t[0].end == 2);
  CHECK(t[1].start == 2);
  CHECK(t[2].start == 4);
  CHECK(t[3].end == 8);
  CHECK(tokenize("").empty());
  CHECK(tokenize("  \n\t ").empty());
}

TEST_CASE("tokenize handles contractions, numbers and hyphens") {
  CHECK(surfaces(tokenize("don't")) == Strings{"do", "n't"});
  CHECK(surfaces(tokenize("John's")) == Strings{"John", "'s"});
  CHECK(surfaces(tokenize("they'll go")) == Strings{"they", "'ll", "go"});
  CHECK(surfaces(tokenize("3.14 and 1,000")) == Strings{"3.14", "and", "1,000"});
  CHECK(surfaces(tokenize("well-known")) == Strings{"well-known"});
  CHECK(surfaces(tokenize("wait...")) == Strings{"wait", "..."});
  CHECK(surfaces(tokenize("(x)")) == Strings{"(", "x", ")"});
}

TEST_CASE("tokenize offsets reproduce surfaces on random strings") {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto text = testing::random_text(rng, 120);
    const auto toks = tokenize(text);
    std::size_t prev_end = 0;
    for (const auto& t : toks) {
      REQUIRE(t.start >= prev_end);
      REQUIRE(t.end > t.start);
      REQUIRE(text.substr(t.start, t.end - t.start) == t.surface);
      prev_end = t.end;
    }
    CHECK(splice(text, toks, surfaces(toks)) == text);
  }
}

TEST_CASE("splice keeps inter-token whitespace") {
  const std::string text = "The  dog\nruns.";
  const auto toks = tokenize(text);
  auto s = surfaces(toks);
  s[1] = "cat";
  CHECK(splice(text, toks, s) == "The  cat\nruns.");
}

TEST_CASE("fallback tagger covers common cases") {
  CHECK(tags_of("The dog runs") == Strings{"DT", "NN", "VBZ"});
  CHECK(tags_of(".") == Strings{"."});
  CHECK(tags_of("blargify") == Strings{"VB"});
  CHECK(tags_of("") == Strings{});
  CHECK(tags_of("She quickly ate 12 apples .") == Strings{"PRP", "RB", "NN", "CD", "NNS", "."});
  CHECK(tags_of("I met Alice")[2] == "NNP");
  CHECK(tags_of("It's fine")[1] == "VBZ");
  for (const auto& tag : tags_of("Whatever, they said: \"we'll (maybe) go; today's forecast is 3.5 degrees!\"")) {
    CHECK(is_penn_tag(tag));
  }
}

TEST_CASE("tagset is the 45-tag Penn set") {
  CHECK(penn_tagset().size() == 45);
  CHECK(is_penn_tag("NNS"));
  CHECK(is_penn_tag("-LRB-"));
  CHECK_FALSE(is_penn_tag("NOUN"));
}

namespace {

std::vector<TaggedSentence> toy_treebank() {
  return {{{"The", "dog", "barks", "."}, {"DT", "NN", "VBZ", "."}},
          {{"A", "cat", "sleeps", "."}, {"DT", "NN", "VBZ", "."}},
          {{"Dogs", "bark", "loudly", "."}, {"NNS", "VBP", "RB", "."}},
          {{"The", "old", "man", "walked", "home", "."}, {"DT", "JJ", "NN", "VBD", "NN", "."}},
          {{"She", "can", "run", "."}, {"PRP", "MD", "VB", "."}},
          {{"They", "run", "fast", "."}, {"PRP", "VBP", "RB", "."}}};
}

}  // namespace

TEST_CASE("perceptron tagger fits a small treebank") {
  TaggerTrainOptions opt;
  opt.epochs = 10;
  const auto report = train_tagger(toy_treebank(), opt);
  CHECK(report.train_accuracy == 1.0);
  CHECK(tagging_accuracy(report.model, toy_treebank()) == 1.0);
  const Tagger tagger(std::make_shared<TaggerModel>(report.model));
  CHECK(tagger.analyze("x", "The cat barks.").tags == Strings{"DT", "NN", "VBZ", "."});
}

TEST_CASE("perceptron tagger errors") {
  CHECK_THROWS_AS(train_tagger({}, {}), Error);
  std::vector<TaggedSentence> bad = {{{"x"}, {"NOUN"}}};
  CHECK_THROWS_AS(train_tagger(bad, {}), UnknownTag);
}

TEST_CASE("perceptron tagger is deterministic and serializes byte-identically") {
  const auto a = train_tagger(toy_treebank(), {});
  const auto b = train_tagger(toy_treebank(), {});
  CHECK(a.model.to_json().dump() == b.model.to_json().dump());
  const auto back = TaggerModel::from_json(a.model.to_json());
  CHECK(back.to_json().dump() == a.model.to_json().dump());
  const Strings words = {"The", "man", "can", "run", "."};
  CHECK(back.tag(std::span<const std::string>(words)) == a.model.tag(std::span<const std::string>(words)));
}

TEST_CASE("parse_conll reads two-column files") {
  std::istringstream in("The DT\ndog NN\n\nIt PRP\nran VBD\n. .\n");
  const auto s = parse_conll(in);
  REQUIRE(s.size() == 2);
  CHECK(s[1].tokens == Strings{"It", "ran", "."});
  CHECK(s[1].tags == Strings{"PRP", "VBD", "."});
  std::istringstream bad("lonely\n");
  CHECK_THROWS_AS(parse_conll(bad), MalformedRecord);
}
