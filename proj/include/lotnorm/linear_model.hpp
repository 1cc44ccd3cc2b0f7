#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/distribution.hpp"
#include "lotnorm/resample.hpp"
#include "lotnorm/rng.hpp"

namespace lotnorm {

class training_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LinearTrainConfig {
  std::size_t buckets = 1u << 18;
  int ngram_min = 2;
  int ngram_max = 4;
  std::size_t epochs = 5;
  double learning_rate = 0.5;
  double resample_q = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (buckets < (1u << 12)) {
      throw parameter_error("linear model needs at least 2^12 buckets");
    }
    if (ngram_min < 2 || ngram_max > 5 || ngram_min > ngram_max) {
      throw parameter_error("n-gram range must lie within [2, 5]");
    }
    if (epochs == 0) throw parameter_error("epochs must be positive");
    if (!(learning_rate > 0.0)) {
      throw parameter_error("learning rate must be positive");
    }
  }
};

// Hashed character n-gram feature vector, L2-normalized so the score scale
// does not depend on name length. Bucket-sorted so weight rows are visited
// in a fixed order.
inline std::vector<std::pair<std::size_t, double>> ngram_features(
    std::string_view name, std::size_t buckets, int ngram_min, int ngram_max) {
  std::map<std::size_t, double> counts;
  const int len = static_cast<int>(name.size());
  for (int n = ngram_min; n <= ngram_max; ++n) {
    for (int i = 0; i + n <= len; ++i) {
      counts[detail::fnv1a64(name.substr(i, n)) % buckets] += 1.0;
    }
  }
  std::vector<std::pair<std::size_t, double>> features(counts.begin(),
                                                       counts.end());
  double norm2 = 0.0;
  for (const auto& [bucket, value] : features) norm2 += value * value;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& [bucket, value] : features) value *= inv;
  }
  return features;
}

// Softmax linear classifier over hashed character n-grams, trained by SGD
// over frequency-tempered class draws. Weights live in feature-major rows
// (buckets x classes) so a training step touches contiguous memory.
class LinearNgramModel {
 public:
  ClassDistribution predict(const CleanedName& name) const {
    return {classes_, detail::softmax_from_logs(scores(name))};
  }

  std::vector<double> scores(const CleanedName& name) const {
    const auto feats =
        ngram_features(name, buckets_, ngram_min_, ngram_max_);
    std::vector<double> s = bias_;
    const std::size_t c = classes_->size();
    for (const auto& [bucket, value] : feats) {
      const double* row = &weights_[bucket * c];
      for (std::size_t i = 0; i < c; ++i) s[i] += value * row[i];
    }
    return s;
  }

  // Cross-entropy loss and sparse gradient for one labeled example.
  // Used by the trainer and by the finite-difference checks.
  struct ExampleGradient {
    double loss = 0.0;
    std::vector<double> dbias;              // size C: p - onehot(y)
    std::vector<std::pair<std::size_t, double>> features;  // active buckets
  };

  ExampleGradient example_gradient(const CleanedName& name,
                                   std::size_t target_class) const {
    ExampleGradient g;
    g.features = ngram_features(name, buckets_, ngram_min_, ngram_max_);
    std::vector<double> s = bias_;
    const std::size_t c = classes_->size();
    for (const auto& [bucket, value] : g.features) {
      const double* row = &weights_[bucket * c];
      for (std::size_t i = 0; i < c; ++i) s[i] += value * row[i];
    }
    const std::vector<double> p = detail::softmax_from_logs(s);
    g.loss = -std::log(std::max(p[target_class], 1e-300));
    g.dbias = p;
    g.dbias[target_class] -= 1.0;
    return g;
  }

  void apply_gradient(const ExampleGradient& g, double lr) {
    const std::size_t c = classes_->size();
    for (std::size_t i = 0; i < c; ++i) bias_[i] -= lr * g.dbias[i];
    for (const auto& [bucket, value] : g.features) {
      double* row = &weights_[bucket * c];
      for (std::size_t i = 0; i < c; ++i) {
        row[i] -= lr * value * g.dbias[i];
      }
    }
  }

  static LinearNgramModel train(const std::vector<LabeledExample>& examples,
                                const LinearTrainConfig& config) {
    config.validate();
    if (examples.empty()) {
      throw parameter_error("linear model training set is empty");
    }
    LinearNgramModel model;
    model.buckets_ = config.buckets;
    model.ngram_min_ = config.ngram_min;
    model.ngram_max_ = config.ngram_max;
    model.classes_ = ClassIndex::from_examples(examples);
    const std::size_t c = model.classes_->size();
    model.weights_.assign(config.buckets * c, 0.0);
    model.bias_.assign(c, 0.0);

    // Examples grouped per class for the within-class uniform pick.
    std::vector<std::vector<const CleanedName*>> per_class(c);
    for (const auto& ex : examples) {
      per_class[model.classes_->index_of(ex.class_id)].push_back(&ex.name);
    }
    ResampleParams params;
    params.q = config.resample_q;
    params.counts.reserve(c);
    for (const auto& names : per_class) params.counts.push_back(names.size());
    ResampleStream stream(params, substream(config.seed, "train/linear"));

    const std::size_t steps = config.epochs * examples.size();
    for (std::size_t step = 0; step < steps; ++step) {
      const auto [cls, ex] = stream.next();
      // Linear decay to zero over the run.
      const double lr = config.learning_rate *
                        (1.0 - static_cast<double>(step) /
                                   static_cast<double>(steps));
      const ExampleGradient g =
          model.example_gradient(*per_class[cls][ex], cls);
      if (!std::isfinite(g.loss)) {
        throw training_error("linear training diverged at step " +
                             std::to_string(step) +
                             " (non-finite loss); lower the learning rate");
      }
      model.apply_gradient(g, lr);
    }
    return model;
  }

  const std::shared_ptr<const ClassIndex>& classes() const { return classes_; }
  std::size_t buckets() const { return buckets_; }
  int ngram_min() const { return ngram_min_; }
  int ngram_max() const { return ngram_max_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  static LinearNgramModel from_parts(std::shared_ptr<const ClassIndex> classes,
                                     std::size_t buckets, int ngram_min,
                                     int ngram_max, std::vector<double> weights,
                                     std::vector<double> bias) {
    LinearNgramModel model;
    model.classes_ = std::move(classes);
    model.buckets_ = buckets;
    model.ngram_min_ = ngram_min;
    model.ngram_max_ = ngram_max;
    model.weights_ = std::move(weights);
    model.bias_ = std::move(bias);
    return model;
  }

 private:
  std::shared_ptr<const ClassIndex> classes_;
  std::size_t buckets_ = 1u << 18;
  int ngram_min_ = 2;
  int ngram_max_ = 4;
  std::vector<double> weights_;  // buckets x classes, feature-major
  std::vector<double> bias_;     // classes
};

}  // namespace lotnorm
