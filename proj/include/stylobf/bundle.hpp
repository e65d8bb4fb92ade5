#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrib_net.hpp"
#include "corpus.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "postag.hpp"
#include "replace.hpp"

namespace stylobf {

// Everything obfuscation needs, produced by one training run.
struct ModelBundle {
  static constexpr int kFormatVersion = 1;

  FeatureSpace space;
  AttributionModel model;
  PosLexicon lexicon;
  std::shared_ptr<const TaggerModel> tagger_model;  // null: rule fallback
  std::optional<std::string> tagger_path;            // where the tagger model was loaded from
  double training_seconds = 0.0;
  nlohmann::json config = nlohmann::json::object();

  Tagger tagger() const { return Tagger(tagger_model); }

  nlohmann::json to_json() const {
    nlohmann::json tagger_section = {{"kind", tagger_model ? "perceptron" : "fallback"}};
    if (tagger_path) tagger_section["path"] = *tagger_path;
    if (tagger_model) tagger_section["model"] = tagger_model->to_json();
    return {{"format", "stylobf-bundle"},
            {"version", kFormatVersion},
            {"config", config},
            {"training_seconds", training_seconds},
            {"tagger", std::move(tagger_section)},
            {"feature_space", space.to_json()},
            {"model", model.to_json()},
            {"pos_lexicon", lexicon.to_json()}};
  }

  static ModelBundle from_json(const nlohmann::json& j) {
    auto section = [&j](const char* name) -> const nlohmann::json& {
      if (!j.is_object() || !j.contains(name)) throw FormatError(name, "missing");
      return j.at(name);
    };
    if (!j.is_object() || j.value("format", "") != "stylobf-bundle") throw FormatError("header", "not a model bundle");
    if (j.value("version", 0) != kFormatVersion) throw FormatError("header", "unsupported bundle version");
    ModelBundle b;
    b.space = FeatureSpace::from_json(section("feature_space"));
    b.model = AttributionModel::from_json(section("model"));
    b.lexicon = PosLexicon::from_json(section("pos_lexicon"));
    const auto& t = section("tagger");
    try {
      if (t.at("kind") == "perceptron") b.tagger_model = std::make_shared<TaggerModel>(TaggerModel::from_json(t.at("model")));
      if (t.contains("path")) b.tagger_path = t.at("path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("tagger", e.what());
    }
    if (b.model.space_checksum() != b.space.checksum()) {
      throw FormatError("model", "feature space checksum does not match the bundled feature space");
    }
    b.config = j.value("config", nlohmann::json::object());
    b.training_seconds = j.value("training_seconds", 0.0);
    return b;
  }
};

inline void save_bundle(const std::filesystem::path& path, const ModelBundle& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << b.to_json().dump();
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("header", std::string("bundle is not valid JSON: ") + e.what());
  }
  return ModelBundle::from_json(j);
}

inline std::string bundle_checksum(const ModelBundle& b) {
  auto j = b.to_json();
  j.erase("training_seconds");
  return checksum_hex(fnv1a(j.dump()));
}

struct TrainOptions {
  FeatureSpaceOptions features{};
  TrainConfig net{};
  std::size_t lexicon_per_tag = 64;
};

// One-time training: tag, build the feature space, vectorize, fit the network,
// collect the POS lexicon for the fallback generator.
inline ModelBundle train_bundle(const Corpus& corpus, const TrainOptions& opt, const Tagger& tagger = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training documents");
  std::vector<TaggedText> tagged;
  std::vector<std::string> raw;
  tagged.reserve(corpus.size());
  raw.reserve(corpus.size());
  for (const auto& d : corpus) {
    tagged.push_back(tagger.analyze(d.id, d.text));
    raw.push_back(d.text);
  }
  ModelBundle b;
  b.space = build_feature_space(tagged, raw, opt.features);
  std::vector<LabeledVector> data;
  data.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) data.push_back({b.space.vectorize(tagged[i], raw[i]), corpus[i].author});
  b.model = train(data, opt.net, b.space.checksum());
  b.lexicon = build_pos_lexicon(tagged, opt.lexicon_per_tag);
  b.tagger_model = tagger.has_model() ? std::shared_ptr<const TaggerModel>(std::make_shared<TaggerModel>(*tagger.model()))
                                      : nullptr;
  b.training_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return b;
}

// A bundle used as an attribution classifier over raw text (the stand-in target).
class BundleClassifier final : public TextClassifier {
 public:
  explicit BundleClassifier(std::shared_ptr<const ModelBundle> bundle) : bundle_(std::move(bundle)) {}
  std::string predict(std::string_view text) const override {
    const auto tagged = bundle_->tagger().analyze("", text);
    const auto v = bundle_->space.vectorize(tagged, text);
    return bundle_->model.author_labels()[bundle_->model.predict(v)];
  }
  const ModelBundle& bundle() const { return *bundle_; }

 private:
  std::shared_ptr<const ModelBundle> bundle_;
};

}  // namespace stylobf
