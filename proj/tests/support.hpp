#pragma once

#include <string>
#include <vector>

#include "stylobf/stylobf.hpp"

namespace stylobf::testing {

// Dense random network with the given layer widths (input first, classes last).
inline AttributionModel random_model(Rng& rng, std::vector<std::size_t> dims, Activation act = Activation::kRelu,
                                     double scale = 1.0) {
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer l{Matrix(dims[i + 1], dims[i]), Vector(dims[i + 1])};
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = scale * rng.normal();
      l.bias(r) = 0.5 * scale * rng.normal();
    }
    layers.push_back(std::move(l));
  }
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < dims.back(); ++k) labels.push_back("a" + std::to_string(k));
  return AttributionModel(std::move(layers), act, std::move(labels));
}

inline FeatureVector random_vector(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  FeatureVector v{std::vector<double>(n), 0};
  for (auto& x : v.values) x = rng.uniform(lo, hi);
  return v;
}

inline std::string random_text(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces = {"a", "b", "c", " ", " ", "the", "dog", "run", ",", ".", "'s",
                                                  "n't", "-", "3", "1.5", "é", "x", "Big", "?", "\n", "ing"};
  std::string out;
  const std::size_t target = rng.below(max_len + 1);
  while (out.size() < target) {
    const auto& p = pieces[rng.below(pieces.size())];
    if (out.size() + p.size() > max_len) break;
    out += p;
  }
  return out;
}

inline SyntheticOptions small_synthetic(std::size_t authors = 4, std::size_t docs = 40, std::uint64_t seed = 11) {
  SyntheticOptions o;
  o.authors = authors;
  o.docs_per_author = docs;
  o.seed = seed;
  return o;
}

inline TrainOptions small_training(int epochs = 15, std::size_t hidden = 32) {
  TrainOptions t;
  t.net.hidden = {hidden};
  t.net.epochs = epochs;
  t.features.vocab_cap = 40;
  return t;
}

}  // namespace stylobf::testing
