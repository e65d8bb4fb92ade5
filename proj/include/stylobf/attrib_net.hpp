#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "errors.hpp"
#include "features.hpp"
#include "rng.hpp"

namespace stylobf {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kIdentity };

inline std::string_view to_string(Activation a) { return a == Activation::kRelu ? "relu" : "identity"; }

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct TrainConfig {
  std::vector<std::size_t> hidden{512};
  Activation activation = Activation::kRelu;
  int epochs = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.1;
  std::uint64_t seed = 7;
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  std::vector<double> epoch_losses;
  double train_accuracy = 0.0;
  std::optional<double> validation_accuracy;
};

struct LabeledVector {
  FeatureVector vector;
  std::string author;
};

inline std::string checksum_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Fully connected classifier over feature vectors. Hidden layers use the
// configured activation; the output layer produces logits.
class AttributionModel {
 public:
  static constexpr int kFormatVersion = 1;

  AttributionModel() = default;
  AttributionModel(std::vector<DenseLayer> layers, Activation activation, std::vector<std::string> author_labels,
                   std::uint64_t space_checksum = 0, TrainingMeta meta = {})
      : layers_(std::move(layers)),
        activation_(activation),
        labels_(std::move(author_labels)),
        space_checksum_(space_checksum),
        meta_(std::move(meta)) {
    validate();
  }

  std::size_t input_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols()); }
  std::size_t num_classes() const { return labels_.size(); }
  const std::vector<std::string>& author_labels() const { return labels_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  std::uint64_t space_checksum() const { return space_checksum_; }
  const TrainingMeta& meta() const { return meta_; }

  std::vector<std::size_t> layer_dims() const {
    std::vector<std::size_t> dims{input_dim()};
    for (const auto& l : layers_) dims.push_back(static_cast<std::size_t>(l.weight.rows()));
    return dims;
  }

  // Logits for a batch; rows are samples.
  Matrix logits(const Matrix& x) const {
    Matrix h = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      Matrix z = h * layers_[k].weight.transpose();
      z.rowwise() += layers_[k].bias.transpose();
      if (k + 1 < layers_.size()) activate(z);
      h = std::move(z);
    }
    return h;
  }

  std::vector<double> logits(const FeatureVector& v) const {
    check(v);
    const Matrix out = logits(row(v.values));
    return {out.data(), out.data() + out.size()};
  }

  std::vector<double> forward(const FeatureVector& v) const { return softmax(logits(v)); }

  std::size_t predict(const FeatureVector& v) const {
    const auto z = logits(v);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  }

  // d logit[cls] / d input for every row of x.
  Matrix input_gradients(const Matrix& x, std::size_t cls) const {
    if (cls >= num_classes()) throw Error(ErrorCode::kInvalidClass, "class index " + std::to_string(cls));
    std::vector<Matrix> pre;  // hidden pre-activations
    Matrix h = x;
    for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
      Matrix z = h * layers_[k].weight.transpose();
      z.rowwise() += layers_[k].bias.transpose();
      h = z;
      activate(h);
      pre.push_back(std::move(z));
    }
    Matrix g = Matrix::Ones(x.rows(), 1) * layers_.back().weight.row(static_cast<Eigen::Index>(cls));
    for (std::size_t k = layers_.size() - 1; k-- > 0;) {
      if (activation_ == Activation::kRelu) g = g.cwiseProduct((pre[k].array() > 0.0).cast<double>().matrix());
      g = g * layers_[k].weight;
    }
    return g;
  }

  std::vector<double> gradient(const FeatureVector& v, std::size_t cls) const {
    check(v);
    const Matrix g = input_gradients(row(v.values), cls);
    return {g.data(), g.data() + g.size()};
  }

  void check(const FeatureVector& v) const {
    if (v.values.size() != input_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector has " + std::to_string(v.values.size()) + " dims, model expects " + std::to_string(input_dim()));
    }
    if (v.space_checksum != 0 && space_checksum_ != 0 && v.space_checksum != space_checksum_) {
      throw Error(ErrorCode::kSpaceMismatch, "vector was built from a different feature space");
    }
  }

  static Matrix row(std::span<const double> values) {
    Matrix m(1, static_cast<Eigen::Index>(values.size()));
    std::copy(values.begin(), values.end(), m.data());
    return m;
  }

  static std::vector<double> softmax(std::span<const double> z) {
    std::vector<double> p(z.begin(), z.end());
    if (p.empty()) return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (auto& x : p) sum += (x = std::exp(x - mx));
    for (auto& x : p) x /= sum;
    return p;
  }

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
      layers.push_back({{"weight", std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size())},
                        {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    nlohmann::json training = {{"seed", meta_.seed},
                               {"epochs", meta_.epochs},
                               {"learning_rate", meta_.learning_rate},
                               {"batch_size", meta_.batch_size},
                               {"epoch_losses", meta_.epoch_losses},
                               {"train_accuracy", meta_.train_accuracy}};
    training["validation_accuracy"] = meta_.validation_accuracy ? nlohmann::json(*meta_.validation_accuracy) : nullptr;
    return {{"format", "stylobf-attrib-net"},
            {"version", kFormatVersion},
            {"layer_dims", layer_dims()},
            {"activation", to_string(activation_)},
            {"author_labels", labels_},
            {"space_checksum", checksum_hex(space_checksum_)},
            {"layers", std::move(layers)},
            {"training", std::move(training)}};
  }

  static AttributionModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "stylobf-attrib-net") throw FormatError("model", "unexpected format tag");
      if (j.at("version").get<int>() != kFormatVersion) throw FormatError("model", "unsupported version");
      const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
      const auto& jl = j.at("layers");
      if (dims.size() != jl.size() + 1) throw FormatError("model.layers", "layer count does not match layer_dims");
      std::vector<DenseLayer> layers;
      for (std::size_t k = 0; k < jl.size(); ++k) {
        const auto w = jl[k].at("weight").get<std::vector<double>>();
        const auto b = jl[k].at("bias").get<std::vector<double>>();
        if (w.size() != dims[k] * dims[k + 1] || b.size() != dims[k + 1]) {
          throw FormatError("model.layers", "layer " + std::to_string(k) + " has inconsistent shape");
        }
        DenseLayer layer{Matrix(static_cast<Eigen::Index>(dims[k + 1]), static_cast<Eigen::Index>(dims[k])),
                         Vector(static_cast<Eigen::Index>(dims[k + 1]))};
        std::copy(w.begin(), w.end(), layer.weight.data());
        std::copy(b.begin(), b.end(), layer.bias.data());
        layers.push_back(std::move(layer));
      }
      const auto act = j.at("activation").get<std::string>();
      if (act != "relu" && act != "identity") throw FormatError("model", "unknown activation " + act);
      TrainingMeta meta;
      if (j.contains("training")) {
        const auto& t = j.at("training");
        meta.seed = t.value("seed", std::uint64_t{0});
        meta.epochs = t.value("epochs", 0);
        meta.learning_rate = t.value("learning_rate", 0.0);
        meta.batch_size = t.value("batch_size", std::size_t{0});
        meta.epoch_losses = t.value("epoch_losses", std::vector<double>{});
        meta.train_accuracy = t.value("train_accuracy", 0.0);
        if (t.contains("validation_accuracy") && !t.at("validation_accuracy").is_null()) {
          meta.validation_accuracy = t.at("validation_accuracy").get<double>();
        }
      }
      return AttributionModel(std::move(layers), act == "relu" ? Activation::kRelu : Activation::kIdentity,
                              j.at("author_labels").get<std::vector<std::string>>(),
                              std::stoull(j.at("space_checksum").get<std::string>(), nullptr, 16), std::move(meta));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("model", e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kFormat) throw;
      throw FormatError("model", e.what());
    }
  }

 private:
  void activate(Matrix& z) const {
    if (activation_ == Activation::kRelu) z = z.cwiseMax(0.0);
  }

  void validate() const {
    if (layers_.empty()) throw Error(ErrorCode::kInvalidArgument, "model needs at least one layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (layers_[k].bias.size() != layers_[k].weight.rows()) {
        throw Error(ErrorCode::kDimensionMismatch, "bias/weight mismatch in layer " + std::to_string(k));
      }
      if (k > 0 && layers_[k].weight.cols() != layers_[k - 1].weight.rows()) {
        throw Error(ErrorCode::kDimensionMismatch, "layer chain broken at layer " + std::to_string(k));
      }
    }
    if (static_cast<std::size_t>(layers_.back().weight.rows()) != labels_.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "output width differs from author label count");
    }
  }

  std::vector<DenseLayer> layers_;
  Activation activation_ = Activation::kRelu;
  std::vector<std::string> labels_;
  std::uint64_t space_checksum_ = 0;
  TrainingMeta meta_;
};

// Glorot-uniform weights, zero biases.
inline std::vector<DenseLayer> init_layers(std::span<const std::size_t> dims, Rng& rng) {
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const auto in = static_cast<Eigen::Index>(dims[k]);
    const auto out = static_cast<Eigen::Index>(dims[k + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer l{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-limit, limit);
    layers.push_back(std::move(l));
  }
  return layers;
}

namespace detail {

inline double accuracy_of(const AttributionModel& m, const Matrix& x, const std::vector<std::size_t>& y) {
  if (y.empty()) return 0.0;
  const Matrix z = m.logits(x);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index arg;
    z.row(i).maxCoeff(&arg);
    correct += static_cast<std::size_t>(arg) == y[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

}  // namespace detail

// Mini-batch Adam on softmax cross-entropy. Deterministic for a given seed.
inline AttributionModel train(std::span<const LabeledVector> data, const TrainConfig& cfg,
                              std::uint64_t space_checksum = 0) {
  if (data.empty()) throw Error(ErrorCode::kEmptyTraining, "no training vectors");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epochs, batch size and learning rate must be positive");
  }
  const std::size_t dim = data.front().vector.values.size();
  if (dim == 0) throw Error(ErrorCode::kDimensionMismatch, "feature vectors are empty");
  std::vector<std::string> labels;
  for (const auto& s : data) {
    if (s.vector.values.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "feature vectors differ in size");
    labels.push_back(s.author);
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.size() < 2) throw Error(ErrorCode::kSingleAuthor, "training needs at least two authors");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));
  std::size_t n_val = static_cast<std::size_t>(cfg.validation_fraction * static_cast<double>(data.size()));
  if (n_val >= data.size()) n_val = 0;
  const std::size_t n_train = data.size() - n_val;

  auto pack = [&](std::size_t from, std::size_t to, Matrix& x, std::vector<std::size_t>& y) {
    x.resize(static_cast<Eigen::Index>(to - from), static_cast<Eigen::Index>(dim));
    y.clear();
    for (std::size_t r = from; r < to; ++r) {
      const auto& s = data[order[r]];
      std::copy(s.vector.values.begin(), s.vector.values.end(), x.row(static_cast<Eigen::Index>(r - from)).data());
      y.push_back(static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), s.author) - labels.begin()));
    }
  };
  Matrix x_train, x_val;
  std::vector<std::size_t> y_train, y_val;
  pack(0, n_train, x_train, y_train);
  pack(n_train, data.size(), x_val, y_val);

  std::vector<std::size_t> dims{dim};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(labels.size());
  auto layers = init_layers(dims, rng);
  const std::size_t depth = layers.size();

  std::vector<Matrix> mw(depth), vw(depth);
  std::vector<Vector> mb(depth), vb(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    mw[k] = vw[k] = Matrix::Zero(layers[k].weight.rows(), layers[k].weight.cols());
    mb[k] = vb[k] = Vector::Zero(layers[k].bias.size());
  }

  TrainingMeta meta{cfg.seed, cfg.epochs, cfg.learning_rate, cfg.batch_size, {}, 0.0, std::nullopt};
  std::vector<std::size_t> batch_order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) batch_order[i] = i;
  long step = 0;
  std::vector<Matrix> acts(depth + 1), pre(depth);
  Matrix xb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span(batch_order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t end = std::min(n_train, start + cfg.batch_size);
      const auto bs = static_cast<Eigen::Index>(end - start);
      xb.resize(bs, static_cast<Eigen::Index>(dim));
      for (std::size_t r = start; r < end; ++r) xb.row(static_cast<Eigen::Index>(r - start)) = x_train.row(static_cast<Eigen::Index>(batch_order[r]));

      acts[0] = xb;
      for (std::size_t k = 0; k < depth; ++k) {
        pre[k] = acts[k] * layers[k].weight.transpose();
        pre[k].rowwise() += layers[k].bias.transpose();
        acts[k + 1] = pre[k];
        if (k + 1 < depth && cfg.activation == Activation::kRelu) acts[k + 1] = acts[k + 1].cwiseMax(0.0);
      }
      // Softmax cross-entropy gradient.
      Matrix delta = acts[depth];
      for (Eigen::Index i = 0; i < bs; ++i) {
        auto r = delta.row(i);
        const double mx = r.maxCoeff();
        r = (r.array() - mx).exp().matrix();
        const double sum = r.sum();
        r /= sum;
        const auto y = static_cast<Eigen::Index>(y_train[batch_order[start + static_cast<std::size_t>(i)]]);
        epoch_loss -= std::log(std::max(r(y), 1e-300));
        r(y) -= 1.0;
      }
      delta /= static_cast<double>(bs);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = depth; k-- > 0;) {
        const Matrix gw = delta.transpose() * acts[k];
        const Vector gb = delta.colwise().sum().transpose();
        if (k > 0) {
          delta = delta * layers[k].weight;
          if (cfg.activation == Activation::kRelu) delta = delta.cwiseProduct((pre[k - 1].array() > 0.0).cast<double>().matrix());
        }
        mw[k] = cfg.beta1 * mw[k] + (1.0 - cfg.beta1) * gw;
        vw[k] = cfg.beta2 * vw[k] + (1.0 - cfg.beta2) * gw.cwiseProduct(gw);
        mb[k] = cfg.beta1 * mb[k] + (1.0 - cfg.beta1) * gb;
        vb[k] = cfg.beta2 * vb[k] + (1.0 - cfg.beta2) * gb.cwiseProduct(gb);
        layers[k].weight.array() -=
            cfg.learning_rate * (mw[k].array() / c1) / ((vw[k].array() / c2).sqrt() + cfg.epsilon);
        layers[k].bias.array() -=
            cfg.learning_rate * (mb[k].array() / c1) / ((vb[k].array() / c2).sqrt() + cfg.epsilon);
      }
    }
    meta.epoch_losses.push_back(epoch_loss / static_cast<double>(n_train));
  }

  AttributionModel model(std::move(layers), cfg.activation, labels, space_checksum, meta);
  meta.train_accuracy = detail::accuracy_of(model, x_train, y_train);
  if (n_val > 0) meta.validation_accuracy = detail::accuracy_of(model, x_val, y_val);
  return AttributionModel(std::vector<DenseLayer>(model.layers()), cfg.activation, labels, space_checksum,
                          std::move(meta));
}

}  // namespace stylobf
