#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "attrib_net.hpp"
#include "errors.hpp"
#include "features.hpp"

namespace stylobf {

enum class RankMode { kSigned, kAbsolute };

struct IGConfig {
  int steps = 64;
  double c = 1.4;
  RankMode rank_mode = RankMode::kSigned;
  // Unset: attribute the logit of the predicted class.
  std::optional<std::size_t> target_class;

  void validate() const {
    if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "IG steps must be >= 1");
    if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scaling constant c must be > 0");
  }
};

struct Attribution {
  std::vector<double> values;
  std::size_t target_class = 0;
};

// Right-endpoint Riemann sum of the path integral from the zero baseline to v.
inline Attribution integrated_gradients(const AttributionModel& model, const FeatureVector& v, const IGConfig& cfg) {
  cfg.validate();
  model.check(v);
  const std::size_t cls = cfg.target_class.value_or(model.predict(v));
  const auto d = static_cast<Eigen::Index>(v.values.size());
  const Eigen::Map<const Eigen::RowVectorXd> x(v.values.data(), d);

  Matrix path(cfg.steps, d);
  for (int k = 1; k <= cfg.steps; ++k) path.row(k - 1) = (static_cast<double>(k) / cfg.steps) * x;
  const Matrix grads = model.input_gradients(path, cls);
  const Eigen::RowVectorXd mean = grads.colwise().sum() / static_cast<double>(cfg.steps);

  Attribution out{std::vector<double>(v.values.size()), cls};
  for (Eigen::Index i = 0; i < d; ++i) out.values[static_cast<std::size_t>(i)] = x(i) * mean(i);
  return out;
}

struct RankedFeature {
  FeatureKey key;
  double raw_attribution = 0.0;
  double scaled_attribution = 0.0;  // raw * c^length
  std::size_t rank = 0;             // 1-based
};

// Every feature exactly once, best first. Ties: longer gram first, then gram order.
inline std::vector<RankedFeature> rank_features(std::span<const double> attributions, const FeatureSpace& space,
                                                double c, RankMode mode = RankMode::kSigned) {
  if (attributions.size() != space.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "attribution length differs from feature space dimension");
  }
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scaling constant c must be > 0");
  std::vector<RankedFeature> out;
  out.reserve(attributions.size());
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    const auto& key = space.entries()[i];
    const double scale = std::pow(c, static_cast<double>(key.length()));
    out.push_back({key, attributions[i], attributions[i] * scale, 0});
  }
  auto score = [mode](const RankedFeature& f) {
    return mode == RankMode::kSigned ? f.scaled_attribution : std::abs(f.scaled_attribution);
  };
  std::sort(out.begin(), out.end(), [&](const RankedFeature& a, const RankedFeature& b) {
    const double sa = score(a), sb = score(b);
    if (sa != sb) return sa > sb;
    if (a.key.length() != b.key.length()) return a.key.length() > b.key.length();
    if (a.key.gram != b.key.gram) return a.key.gram < b.key.gram;
    return a.key.kind < b.key.kind;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

inline nlohmann::json attribution_report(std::span<const RankedFeature> ranked, double c, std::size_t target_class,
                                         const std::vector<std::string>& labels) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : ranked) {
    features.push_back({{"rank", f.rank},
                        {"kind", to_string(f.key.kind)},
                        {"gram", f.key.gram},
                        {"length", f.key.length()},
                        {"raw", f.raw_attribution},
                        {"scaled", f.scaled_attribution}});
  }
  return {{"c", c},
          {"target_class", target_class},
          {"target_author", target_class < labels.size() ? labels[target_class] : ""},
          {"features", std::move(features)}};
}

}  // namespace stylobf
