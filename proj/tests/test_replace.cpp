#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace stylobf;
using Strings = std::vector<std::string>;

namespace {

FillRequest request(Strings tokens, std::vector<std::size_t> masks, Strings tags = {}) {
  FillRequest r;
  r.tokens = std::move(tokens);
  r.mask_indices = std::move(masks);
  r.tags = std::move(tags);
  return r;
}

const PosLexicon& lexicon() {
  static const PosLexicon lex({{"NN", {"time", "dog", "way"}}, {"VBZ", {"is", "runs"}}, {"DT", {"the", "a"}}, {".", {"."}}});
  return lex;
}

}  // namespace

TEST_CASE("fallback picks the most frequent differing same-tag word") {
  const FallbackGenerator gen(lexicon());
  const auto resp = gen.fill(request({"the", "dog", "runs", "."}, {1}, {"DT", "NN", "VBZ", "."}));
  REQUIRE(resp.replacements.size() == 1);
  CHECK(resp.replacements[0] == "time");
  const auto resp2 = gen.fill(request({"the", "time", "runs", "."}, {1, 2}, {"DT", "NN", "VBZ", "."}));
  CHECK(resp2.replacements == Strings{"dog", "is"});
}

TEST_CASE("fallback restores sentence-initial capitals") {
  const FallbackGenerator gen(lexicon());
  const auto resp = gen.fill(request({"The", "dog"}, {0}, {"DT", "NN"}));
  CHECK(resp.replacements[0] == "A");
}

TEST_CASE("fallback keeps the original when nothing else fits") {
  const FallbackGenerator gen(PosLexicon{});
  const auto resp = gen.fill(request({"the", "dog", "."}, {0, 1, 2}, {"DT", "NN", "."}));
  CHECK(resp.replacements == Strings{"the", "dog", "."});
  const FallbackGenerator same(lexicon());
  CHECK(same.fill(request({"x", "."}, {1}, {"NN", "."})).replacements == Strings{"."});
}

TEST_CASE("fallback never changes token shape") {
  const PosLexicon lex({{"NN", {",", "'s", "cat"}}});
  const FallbackGenerator gen(lex);
  CHECK(gen.fill(request({"dog"}, {0}, {"NN"})).replacements == Strings{"cat"});
}

TEST_CASE("fallback re-tags when tags are absent and is deterministic") {
  const FallbackGenerator gen(lexicon());
  const auto req = request({"the", "dog", "runs", "."}, {1});
  const auto a = gen.fill(req);
  const auto b = gen.fill(req);
  CHECK(a.replacements == b.replacements);
  CHECK(a.replacements == Strings{"time"});
}

TEST_CASE("identity generator echoes masked tokens") {
  const IdentityGenerator gen;
  CHECK(gen.fill(request({"a", "b", "c"}, {0, 2})).replacements == Strings{"a", "c"});
}

TEST_CASE("requests are validated") {
  const IdentityGenerator gen;
  CHECK_THROWS_AS(gen.fill(request({"a"}, {1})), Error);
  CHECK_THROWS_AS(gen.fill(request({"a", "b"}, {1, 0})), Error);
  CHECK_THROWS_AS(gen.fill(request({"a", "b"}, {0}, {"DT"})), Error);
}

TEST_CASE("responses are checked for arity and emptiness") {
  const auto req = request({"a", "b"}, {0, 1});
  FillResponse short_resp{{"x"}, "g", {}};
  try {
    validate_fill(req, short_resp);
    FAIL("expected protocol error");
  } catch (const FillError& e) {
    CHECK(e.code() == ErrorCode::kFillProtocol);
  }
  CHECK_THROWS_AS(validate_fill(req, FillResponse{{"x", ""}, "g", {}}), FillError);
  CHECK_NOTHROW(validate_fill(req, FillResponse{{"x", "y"}, "g", {}}));
}

TEST_CASE("make_fill_request windows the context") {
  Strings tokens;
  for (int i = 0; i < 20; ++i) tokens.push_back("t" + std::to_string(i));
  const auto [req, offset] = make_fill_request(tokens, {}, 10, 12, 3);
  CHECK(offset == 7);
  CHECK(req.tokens.size() == 8);
  CHECK(req.mask_indices == std::vector<std::size_t>{3, 4});
  CHECK(req.tokens[req.mask_indices[0]] == "t10");
  const auto [full, off2] = make_fill_request(tokens, {}, 0, 1, 0);
  CHECK(off2 == 0);
  CHECK(full.tokens.size() == 20);
}

TEST_CASE("lexicon is frequency ranked, lowercased, and serializable") {
  std::vector<TaggedText> tagged = {Tagger{}.analyze("1", "The dog saw the dog ."), Tagger{}.analyze("2", "A cat ran .")};
  const auto lex = build_pos_lexicon(tagged, 2);
  CHECK(lex.words("DT") == Strings{"the", "a"});
  CHECK(lex.words("NN").front() == "dog");
  CHECK(lex.words("NN").size() <= 2);
  CHECK(PosLexicon::from_json(lex.to_json()).table() == lex.table());
  CHECK_THROWS_AS(PosLexicon::from_json(nlohmann::json{{"format", "x"}}), FormatError);
}
