#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "support.hpp"

using namespace stylobf;
using Strings = std::vector<std::string>;

namespace {

FeatureSpace space_for(const std::vector<std::string>& texts, FeatureSpaceOptions opt = {}) {
  std::vector<TaggedText> tagged;
  for (const auto& t : texts) tagged.push_back(Tagger{}.analyze("", t));
  return build_feature_space(tagged, texts, opt);
}

}  // namespace

TEST_CASE("extract_ngrams counts contiguous grams") {
  const Strings tags = {"DT", "NN", "VBZ", "DT", "NN"};
  const auto tri = extract_ngrams(tags, 3);
  CHECK(tri.size() == 3);
  CHECK(tri.at({"DT", "NN", "VBZ"}) == 1);
  CHECK(tri.at({"VBZ", "DT", "NN"}) == 1);
  CHECK(extract_ngrams(tags, 2).at({"DT", "NN"}) == 2);

  const Strings aaa = {"a", "a", "a"};
  const auto bi = extract_ngrams(aaa, 2);
  REQUIRE(bi.size() == 1);
  CHECK(bi.at({"a", "a"}) == 2);
  CHECK(extract_ngrams(aaa, 4).empty());
  CHECK_THROWS_AS(extract_ngrams(aaa, 0), Error);
}

TEST_CASE("vocabulary keeps the most frequent gram") {
  FeatureSpaceOptions opt;
  opt.lengths = {2};
  opt.vocab_cap = 1;
  opt.use_pos = false;
  const auto space = space_for({"abab"}, opt);
  REQUIRE(space.dimension() == 1);
  CHECK(space.entries()[0].gram == Strings{"a", "b"});
}

TEST_CASE("vocabulary ties go to the lexicographically smaller gram") {
  FeatureSpaceOptions opt;
  opt.lengths = {1};
  opt.vocab_cap = 2;
  opt.use_pos = false;
  const auto space = space_for({"cba"}, opt);
  REQUIRE(space.dimension() == 2);
  CHECK(space.entries()[0].gram == Strings{"a"});
  CHECK(space.entries()[1].gram == Strings{"b"});
}

TEST_CASE("dimension is at most 2 x |V| x L_vocab with groups in layout order") {
  Rng rng(1);
  std::vector<std::string> texts;
  for (int i = 0; i < 200; ++i) texts.push_back(testing::random_text(rng, 300));
  FeatureSpaceOptions opt;
  opt.vocab_cap = 25;
  const auto space = space_for(texts, opt);
  CHECK(space.dimension() <= 2 * 4 * 25);
  std::size_t offset = 0;
  for (const auto& g : space.groups()) {
    CHECK(g.offset == offset);
    CHECK(g.size <= 25);
    offset += g.size;
  }
  CHECK(offset == space.dimension());
  CHECK(space.groups().front().kind == FeatureKind::kChar);
  CHECK(space.groups().back().kind == FeatureKind::kPos);
}

TEST_CASE("vectorize normalizes by grams of the same kind and length") {
  FeatureSpaceOptions opt;
  opt.lengths = {1};
  opt.use_char = false;
  const auto space = space_for({"The dog barks ."}, opt);
  const auto t2 = Tagger{}.analyze("", "The cat .");
  const auto v2 = space.vectorize(t2, "The cat .");
  const auto nn = space.position({FeatureKind::kPos, {"NN"}});
  REQUIRE(nn.has_value());
  CHECK(v2.values[*nn] == Catch::Approx(1.0 / 3.0));
  const auto dt = space.position({FeatureKind::kPos, {"DT"}});
  CHECK(v2.values[*dt] + v2.values[*nn] == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("vectorize of empty text is the zero vector") {
  const auto space = space_for({"A small text, with words."});
  const auto v = space.vectorize(Tagger{}.analyze("", ""), "");
  CHECK(v.values.size() == space.dimension());
  for (double x : v.values) CHECK(x == 0.0);
  CHECK(v.space_checksum == space.checksum());
}

TEST_CASE("vectorize matches a brute-force counter on random texts") {
  Rng rng(99);
  std::vector<std::string> corpus;
  for (int i = 0; i < 100; ++i) corpus.push_back(testing::random_text(rng, 500));
  const auto space = space_for(corpus);
  for (int trial = 0; trial < 300; ++trial) {
    const auto text = testing::random_text(rng, 500);
    const auto tagged = Tagger{}.analyze("", text);
    const auto got = space.vectorize(tagged, text).values;
    const auto want = testing::naive_vectorize(space, tagged, text);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i] == want[i]);
  }
}

TEST_CASE("char n-grams are over code points; invalid bytes become U+FFFD") {
  CHECK(detail::code_points("héllo").size() == 5);
  const auto cp = detail::code_points(std::string("a\xff") + "b");
  REQUIRE(cp.size() == 3);
  CHECK(cp[1] == "\xEF\xBF\xBD");
}

TEST_CASE("vectorize is sensitive to token order") {
  const auto space = space_for({"The big dog runs fast .", "Fast runs the big dog ."});
  const std::string a = "The big dog runs fast .";
  const std::string b = "fast runs dog big The .";
  CHECK(space.vectorize(Tagger{}.analyze("", a), a).values != space.vectorize(Tagger{}.analyze("", b), b).values);
}

TEST_CASE("feature space JSON round trip and validation") {
  const auto space = space_for({"One text here.", "Another one, there!"});
  const auto back = FeatureSpace::from_json(space.to_json());
  CHECK(back.checksum() == space.checksum());
  CHECK(back.entries() == space.entries());
  auto j = space.to_json();
  j["format"] = "nope";
  CHECK_THROWS_AS(FeatureSpace::from_json(j), FormatError);
  CHECK_THROWS_AS(FeatureSpace({1}, 1, {{FeatureKind::kPos, {"NN"}}, {FeatureKind::kPos, {"DT"}}}), Error);
  CHECK_THROWS_AS(FeatureSpace({1}, 5, {{FeatureKind::kPos, {"NN", "DT"}}}), Error);
  CHECK_THROWS_AS(FeatureSpace({1}, 5, {{FeatureKind::kPos, {"NN"}}, {FeatureKind::kChar, {"a"}}}), Error);
  FeatureSpaceOptions empty_v;
  empty_v.lengths = {};
  CHECK_THROWS_AS(space_for({"x"}, empty_v), Error);
}
