#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/distribution.hpp"
#include "lotnorm/linear_model.hpp"
#include "lotnorm/rng.hpp"

namespace lotnorm {

// Margin-based contrastive loss: d^2 for matched pairs, squared hinge
// (max(0, margin - d))^2 for mismatched ones.
inline double contrastive_loss(double distance, bool same_class,
                               double margin) {
  if (distance < 0.0) throw parameter_error("distance must be non-negative");
  if (!(margin > 0.0)) throw parameter_error("margin must be positive");
  if (same_class) return distance * distance;
  const double gap = margin - distance;
  return gap > 0.0 ? gap * gap : 0.0;
}

struct MinedPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double distance = 0.0;
  bool positive = false;
};

inline double l2_distance(const std::vector<double>& a,
                          const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// Hard-pair mining over one batch: the positives with the largest L2
// distance and the negatives with the smallest, up to the requested counts.
// Ties keep pair enumeration order (i<j, lexicographic).
inline std::vector<MinedPair> mine_hard_pairs(
    const std::vector<std::vector<double>>& vectors,
    const std::vector<std::size_t>& labels, std::size_t max_positives = 4,
    std::size_t max_negatives = 8) {
  std::vector<MinedPair> positives, negatives;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double d = l2_distance(vectors[i], vectors[j]);
      if (labels[i] == labels[j]) {
        positives.push_back({i, j, d, true});
      } else {
        negatives.push_back({i, j, d, false});
      }
    }
  }
  std::stable_sort(positives.begin(), positives.end(),
                   [](const MinedPair& a, const MinedPair& b) {
                     return a.distance > b.distance;
                   });
  std::stable_sort(negatives.begin(), negatives.end(),
                   [](const MinedPair& a, const MinedPair& b) {
                     return a.distance < b.distance;
                   });
  if (positives.size() > max_positives) positives.resize(max_positives);
  if (negatives.size() > max_negatives) negatives.resize(max_negatives);
  std::vector<MinedPair> selected = std::move(positives);
  selected.insert(selected.end(), negatives.begin(), negatives.end());
  return selected;
}

struct ContrastiveParams {
  double margin = 1.0;
  std::size_t batch_size = 16;
  std::size_t positives_per_batch = 4;
  std::size_t negatives_per_batch = 8;
  double learning_rate = 0.05;
  std::size_t steps = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(margin > 0.0)) throw parameter_error("margin must be positive");
    if (batch_size < 4) throw parameter_error("batch size must be >= 4");
    if (steps == 0) throw parameter_error("steps must be positive");
    if (!(learning_rate > 0.0)) {
      throw parameter_error("learning rate must be positive");
    }
  }
};

// Character-aware embedder: hashed character n-gram embeddings mean-pooled
// over the name, followed by one linear projection. Trained with the
// contrastive objective over mined hard pairs.
class EmbeddingModel {
 public:
  struct Config {
    std::size_t dim = 128;
    std::size_t buckets = 1u << 16;
    int ngram_min = 2;
    int ngram_max = 4;
  };

  static EmbeddingModel init(const Config& config, std::uint64_t seed) {
    EmbeddingModel model;
    model.config_ = config;
    Rng rng = substream(seed, "train/embed/init");
    const double scale = 1.0 / std::sqrt(static_cast<double>(config.dim));
    model.table_.resize(config.buckets * config.dim);
    for (double& v : model.table_) v = scale * rng.normal();
    // Projection starts at identity so the pooled features pass through.
    model.proj_.assign(config.dim * config.dim, 0.0);
    for (std::size_t k = 0; k < config.dim; ++k) {
      model.proj_[k * config.dim + k] = 1.0;
    }
    model.bias_.assign(config.dim, 0.0);
    return model;
  }

  std::vector<double> embed(const CleanedName& name) const {
    const std::vector<double> pooled = pool(name);
    const std::size_t d = config_.dim;
    std::vector<double> z(bias_);
    for (std::size_t r = 0; r < d; ++r) {
      const double* row = &proj_[r * d];
      double acc = z[r];
      for (std::size_t k = 0; k < d; ++k) acc += row[k] * pooled[k];
      z[r] = acc;
    }
    return z;
  }

  const Config& config() const { return config_; }
  std::vector<double>& table() { return table_; }
  const std::vector<double>& table() const { return table_; }
  std::vector<double>& projection() { return proj_; }
  const std::vector<double>& projection() const { return proj_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  static EmbeddingModel from_parts(const Config& config,
                                   std::vector<double> table,
                                   std::vector<double> proj,
                                   std::vector<double> bias) {
    EmbeddingModel model;
    model.config_ = config;
    model.table_ = std::move(table);
    model.proj_ = std::move(proj);
    model.bias_ = std::move(bias);
    return model;
  }

  std::vector<std::pair<std::size_t, double>> features(
      const CleanedName& name) const {
    return ngram_features(name, config_.buckets, config_.ngram_min,
                          config_.ngram_max);
  }

 private:
  std::vector<double> pool(const CleanedName& name) const {
    const auto feats = features(name);
    std::vector<double> h(config_.dim, 0.0);
    for (const auto& [bucket, value] : feats) {
      const double* row = &table_[bucket * config_.dim];
      for (std::size_t k = 0; k < config_.dim; ++k) h[k] += value * row[k];
    }
    return h;
  }

  friend class ContrastiveTrainer;

  Config config_;
  std::vector<double> table_;  // buckets x dim
  std::vector<double> proj_;   // dim x dim
  std::vector<double> bias_;   // dim
};

struct TrainLog {
  std::vector<double> loss_curve;  // mean mined-pair loss per step
};

class ContrastiveTrainer {
 public:
  // Batches are composed as (batch_size / 4) classes x 4 examples so mined
  // positives always exist; classes and examples are drawn uniformly.
  static TrainLog train(EmbeddingModel& model,
                        const std::vector<LabeledExample>& examples,
                        const ContrastiveParams& params) {
    params.validate();
    std::map<ClassId, std::vector<const CleanedName*>> by_class;
    for (const auto& ex : examples) by_class[ex.class_id].push_back(&ex.name);
    if (by_class.size() < 2) {
      throw parameter_error("contrastive training needs >= 2 classes");
    }
    std::vector<const std::vector<const CleanedName*>*> classes;
    classes.reserve(by_class.size());
    for (const auto& [cls, names] : by_class) classes.push_back(&names);

    Rng rng = substream(params.seed, "train/embed");
    const std::size_t groups = std::max<std::size_t>(2, params.batch_size / 4);
    const std::size_t per_group = params.batch_size / groups;

    TrainLog log;
    log.loss_curve.reserve(params.steps);
    const std::size_t d = model.config_.dim;

    for (std::size_t step = 0; step < params.steps; ++step) {
      std::vector<const CleanedName*> batch;
      std::vector<std::size_t> labels;
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t cls = rng.below(classes.size());
        const auto& names = *classes[cls];
        for (std::size_t e = 0; e < per_group; ++e) {
          batch.push_back(names[rng.below(names.size())]);
          labels.push_back(cls);
        }
      }

      std::vector<std::vector<std::pair<std::size_t, double>>> feats(
          batch.size());
      std::vector<std::vector<double>> pooled(batch.size());
      std::vector<std::vector<double>> z(batch.size());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        feats[b] = model.features(*batch[b]);
        pooled[b].assign(d, 0.0);
        for (const auto& [bucket, value] : feats[b]) {
          const double* row = &model.table_[bucket * d];
          for (std::size_t k = 0; k < d; ++k) pooled[b][k] += value * row[k];
        }
        z[b].assign(model.bias_.begin(), model.bias_.end());
        for (std::size_t r = 0; r < d; ++r) {
          const double* row = &model.proj_[r * d];
          double acc = z[b][r];
          for (std::size_t k = 0; k < d; ++k) acc += row[k] * pooled[b][k];
          z[b][r] = acc;
        }
      }

      const auto pairs =
          mine_hard_pairs(z, labels, params.positives_per_batch,
                          params.negatives_per_batch);
      if (pairs.empty()) {
        log.loss_curve.push_back(0.0);
        continue;
      }

      std::vector<std::vector<double>> dz(batch.size(),
                                          std::vector<double>(d, 0.0));
      double loss_sum = 0.0;
      const double pair_scale = 1.0 / static_cast<double>(pairs.size());
      for (const MinedPair& pr : pairs) {
        loss_sum += contrastive_loss(pr.distance, pr.positive, params.margin);
        // dL/dz_i for y=1: 2(z_i - z_j); for y=0 inside the margin:
        // -2 (margin - d) (z_i - z_j) / d.
        double coeff = 0.0;
        if (pr.positive) {
          coeff = 2.0;
        } else if (pr.distance < params.margin && pr.distance > 1e-12) {
          coeff = -2.0 * (params.margin - pr.distance) / pr.distance;
        }
        if (coeff == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) {
          const double g = coeff * (z[pr.i][k] - z[pr.j][k]) * pair_scale;
          dz[pr.i][k] += g;
          dz[pr.j][k] -= g;
        }
      }
      const double mean_loss = loss_sum * pair_scale;
      if (!std::isfinite(mean_loss)) {
        throw training_error("contrastive training diverged at step " +
                             std::to_string(step));
      }
      log.loss_curve.push_back(mean_loss);

      const double lr = params.learning_rate;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        bool any = false;
        for (std::size_t k = 0; k < d; ++k) {
          if (dz[b][k] != 0.0) {
            any = true;
            break;
          }
        }
        if (!any) continue;
        // Backprop through z = proj * pooled + bias.
        std::vector<double> dpooled(d, 0.0);
        for (std::size_t r = 0; r < d; ++r) {
          const double g = dz[b][r];
          if (g == 0.0) continue;
          model.bias_[r] -= lr * g;
          double* row = &model.proj_[r * d];
          for (std::size_t k = 0; k < d; ++k) {
            dpooled[k] += row[k] * g;
            row[k] -= lr * g * pooled[b][k];
          }
        }
        for (const auto& [bucket, value] : feats[b]) {
          double* row = &model.table_[bucket * d];
          for (std::size_t k = 0; k < d; ++k) {
            row[k] -= lr * value * dpooled[k];
          }
        }
      }
    }
    return log;
  }
};

struct AnchorSet {
  std::vector<std::vector<double>> vectors;
  std::vector<ClassId> classes;
  std::size_t k = 10;
};

// Samples min(per_class_cap * C, |train|) anchors uniformly from the train
// set and embeds them.
inline AnchorSet build_anchor_set(const EmbeddingModel& model,
                                  const std::vector<LabeledExample>& train,
                                  std::size_t k, std::uint64_t seed,
                                  std::size_t per_class_cap = 10) {
  if (train.empty()) throw parameter_error("anchor set needs train examples");
  std::set<ClassId> class_set;
  for (const auto& ex : train) class_set.insert(ex.class_id);
  const std::size_t want =
      std::min(train.size(), per_class_cap * class_set.size());
  Rng rng = substream(seed, "train/embed/anchors");
  auto idx = rng.sample_indices(train.size(), want);
  std::sort(idx.begin(), idx.end());
  AnchorSet anchors;
  anchors.k = k;
  anchors.vectors.reserve(idx.size());
  anchors.classes.reserve(idx.size());
  for (const std::size_t i : idx) {
    anchors.vectors.push_back(model.embed(train[i].name));
    anchors.classes.push_back(train[i].class_id);
  }
  return anchors;
}

// kNN vote over the anchor set: distribution proportional to class votes
// among the k nearest anchors by L2 distance; ties at the k-th distance
// resolve by anchor index, vote ties by smaller class id.
inline ClassDistribution knn_classify(
    const EmbeddingModel& model, const AnchorSet& anchors,
    const std::shared_ptr<const ClassIndex>& classes,
    const CleanedName& name) {
  if (anchors.vectors.empty()) {
    throw parameter_error("anchor set is empty");
  }
  const std::size_t k = std::min(anchors.k, anchors.vectors.size());
  const std::vector<double> z = model.embed(name);
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(anchors.vectors.size());
  for (std::size_t a = 0; a < anchors.vectors.size(); ++a) {
    dist.emplace_back(l2_distance(z, anchors.vectors[a]), a);
  }
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                    dist.end());
  ClassDistribution out;
  out.classes = classes;
  out.p.assign(classes->size(), 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const auto cls = classes->index_of(anchors.classes[dist[r].second]);
    if (cls >= 0) out.p[static_cast<std::size_t>(cls)] += 1.0;
  }
  for (double& v : out.p) v /= static_cast<double>(k);
  return out;
}

// Same-class decision for a verification pair: L2 distance under threshold.
inline bool verify(const EmbeddingModel& model, const CleanedName& a,
                   const CleanedName& b, double threshold) {
  if (!(threshold > 0.0)) throw parameter_error("threshold must be positive");
  return l2_distance(model.embed(a), model.embed(b)) < threshold;
}

}  // namespace lotnorm
