#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "support.hpp"

using namespace stylobf;

namespace {

Corpus parse(const std::string& s) {
  std::istringstream in(s);
  return parse_corpus(in);
}

Corpus uniform_corpus(std::size_t authors, std::size_t per_author) {
  Corpus c;
  for (std::size_t a = 0; a < authors; ++a) {
    for (std::size_t d = 0; d < per_author; ++d) {
      c.push_back({"d" + std::to_string(a) + "_" + std::to_string(d), "author" + std::to_string(a), "text " + std::to_string(d)});
    }
  }
  return c;
}

std::size_t count_author(const Corpus& c, const std::string& author) {
  return static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [&](const Document& d) { return d.author == author; }));
}

}  // namespace

TEST_CASE("parse_corpus reads well-formed records") {
  const auto c = parse(R"({"id":"1","author":"a","text":"Hello there."}
{"id":"2","author":"b","text":"General Kenobi."}

{"id":"3","author":"a","text":"x"}
)");
  REQUIRE(c.size() == 3);
  CHECK(c[1].author == "b");
  CHECK(c[1].text == "General Kenobi.");
  CHECK(authors_of(c) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse_corpus rejects bad input") {
  CHECK_THROWS_AS(parse(R"({"id":"1","author":"a","text":"x"}
{"id":"1","author":"b","text":"y"})"),
                  DuplicateId);
  CHECK_THROWS_AS(parse(""), Error);
  try {
    parse("\n\n");
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyCorpus);
  }
  CHECK_THROWS_AS(parse(R"({"id":"1","author":"a"})"), MalformedRecord);
  CHECK_THROWS_AS(parse(R"({"id":"1","author":"a","text":"   "})"), MalformedRecord);
  CHECK_THROWS_AS(parse(R"({"id":"1","author":"","text":"x"})"), MalformedRecord);
  CHECK_THROWS_AS(parse("not json"), MalformedRecord);
}

TEST_CASE("write_corpus round trips") {
  Corpus c = {{"a-1", "a", "quote \" and\nnewline"}, {"b-1", "b", "ünïcode"}};
  std::ostringstream out;
  write_corpus(out, c);
  const auto back = parse(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back[0].text == c[0].text);
  CHECK(back[1].text == c[1].text);
}

TEST_CASE("split gives 12/12/6 per author for 30 docs at 0.4/0.4/0.2") {
  const auto c = uniform_corpus(3, 30);
  const auto s = split(c, SplitSpec{});
  for (std::size_t a = 0; a < 3; ++a) {
    const std::string author = "author" + std::to_string(a);
    CHECK(count_author(s.target_train, author) == 12);
    CHECK(count_author(s.attacker_train, author) == 12);
    CHECK(count_author(s.test, author) == 6);
  }
}

TEST_CASE("split is deterministic per seed") {
  const auto c = uniform_corpus(4, 25);
  SplitSpec spec;
  const auto a = split_manifest(split(c, spec), spec);
  const auto b = split_manifest(split(c, spec), spec);
  CHECK(a == b);
  spec.seed = 8;
  CHECK(split_manifest(split(c, spec), spec) != a);
}

TEST_CASE("split validation") {
  const auto c = uniform_corpus(2, 10);
  SplitSpec spec;
  spec.fractions = {0.4, 0.4, 0.1};
  CHECK_THROWS_AS(split(c, spec), Error);
  spec.fractions = {0.5, 0.5, 0.0};
  CHECK_THROWS_AS(split(c, spec), Error);
  spec.fractions = {0.4, 0.4, 0.2};
  Corpus tiny = uniform_corpus(2, 10);
  tiny.push_back({"lonely", "solo", "only one"});
  CHECK_THROWS_AS(split(tiny, spec), AuthorTooSmall);
}

TEST_CASE("split property: disjoint, covering, every author in every split") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t authors = 2 + rng.below(5);
    Corpus c;
    for (std::size_t a = 0; a < authors; ++a) {
      const std::size_t n = 5 + rng.below(40);
      for (std::size_t d = 0; d < n; ++d) c.push_back({std::to_string(a) + ":" + std::to_string(d), std::to_string(a), "t"});
    }
    SplitSpec spec;
    spec.seed = rng.below(1000);
    const auto s = split(c, spec);
    std::set<std::string> seen;
    for (const Corpus* part : {&s.target_train, &s.attacker_train, &s.test}) {
      for (const auto& d : *part) CHECK(seen.insert(d.id).second);
      for (std::size_t a = 0; a < authors; ++a) CHECK(count_author(*part, std::to_string(a)) >= 1);
    }
    CHECK(seen.size() == c.size());
  }
}
