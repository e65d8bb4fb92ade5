#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace stylobf;

namespace {

const Corpus& corpus() {
  static const Corpus c = generate_synthetic_corpus(testing::small_synthetic(3, 20, 5));
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("stylobf_test_" + name);
}

}  // namespace

TEST_CASE("bundle round trip predicts identically") {
  const auto b = train_bundle(corpus(), testing::small_training(5, 16));
  const auto path = temp_path("bundle.json");
  save_bundle(path, b);
  const auto back = load_bundle(path);
  std::filesystem::remove(path);
  CHECK(bundle_checksum(back) == bundle_checksum(b));
  const BundleClassifier a(std::make_shared<const ModelBundle>(b));
  const BundleClassifier c(std::make_shared<const ModelBundle>(back));
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.predict(corpus()[i].text) == c.predict(corpus()[i].text));
}

TEST_CASE("retraining with the same seed gives the same checksum") {
  const auto a = train_bundle(corpus(), testing::small_training(5, 16));
  const auto b = train_bundle(corpus(), testing::small_training(5, 16));
  CHECK(bundle_checksum(a) == bundle_checksum(b));
  auto other = testing::small_training(5, 16);
  other.net.seed = 99;
  CHECK(bundle_checksum(train_bundle(corpus(), other)) != bundle_checksum(a));
}

TEST_CASE("bundle keeps a trained tagger") {
  std::vector<TaggedSentence> bank = {{{"The", "dog", "barks", "."}, {"DT", "NN", "VBZ", "."}}};
  auto tagger_model = std::make_shared<TaggerModel>(train_tagger(bank, {}).model);
  const auto b = train_bundle(corpus(), testing::small_training(2, 8), Tagger(tagger_model));
  const auto back = ModelBundle::from_json(nlohmann::json::parse(b.to_json().dump()));
  REQUIRE(back.tagger_model != nullptr);
  CHECK(back.tagger_model->to_json() == tagger_model->to_json());
}

TEST_CASE("corrupt bundles name the failing section") {
  const auto b = train_bundle(corpus(), testing::small_training(2, 8));
  const auto good = b.to_json();
  auto section_of = [](const nlohmann::json& j) -> std::string {
    try {
      ModelBundle::from_json(j);
    } catch (const FormatError& e) {
      return e.section();
    }
    return "";
  };
  auto j = good;
  j["model"]["layers"] = 3;
  CHECK(section_of(j).starts_with("model"));
  j = good;
  j.erase("feature_space");
  CHECK(section_of(j) == "feature_space");
  j = good;
  j["pos_lexicon"]["format"] = "x";
  CHECK(section_of(j) == "pos_lexicon");
  j = good;
  j["version"] = 99;
  CHECK(section_of(j) == "header");
  j = good;
  j["feature_space"]["L_vocab"] = 1;
  CHECK(section_of(j) == "feature_space");

  const auto path = temp_path("corrupt.json");
  {
    std::ofstream out(path);
    out << "{ not json";
  }
  try {
    load_bundle(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.section() == "header");
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_bundle(temp_path("missing.json")), Error);
}
