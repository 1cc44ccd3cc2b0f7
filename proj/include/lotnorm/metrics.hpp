#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/distribution.hpp"
#include "lotnorm/partition.hpp"

namespace lotnorm {

struct MetricRow {
  std::string label;
  std::size_t examples = 0;
  double accuracy = 0.0;  // micro F1
  double macro_f1 = 0.0;
};

struct BucketReport {
  MetricRow overall;
  std::vector<MetricRow> buckets;  // Many / Medium / Few present in golds
};

namespace detail {

// Macro F1 averages per-class F1 over classes present in the gold labels of
// the evaluated subset. A class with gold examples but no true positives
// and no predictions scores 0.
inline MetricRow classification_row(
    const std::string& label, const std::vector<ClassId>& predictions,
    const std::vector<const LabeledExample*>& golds) {
  MetricRow row;
  row.label = label;
  row.examples = golds.size();
  if (golds.empty()) return row;

  std::size_t correct = 0;
  std::map<ClassId, std::size_t> tp, fp, fn;
  std::set<ClassId> gold_classes;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const ClassId& gold = golds[i]->class_id;
    const ClassId& pred = predictions[i];
    gold_classes.insert(gold);
    if (pred == gold) {
      ++correct;
      ++tp[gold];
    } else {
      ++fn[gold];
      ++fp[pred];
    }
  }
  row.accuracy = static_cast<double>(correct) /
                 static_cast<double>(golds.size());
  double f1_sum = 0.0;
  for (const ClassId& cls : gold_classes) {
    const double tpc = static_cast<double>(tp.count(cls) ? tp.at(cls) : 0);
    const double fpc = static_cast<double>(fp.count(cls) ? fp.at(cls) : 0);
    const double fnc = static_cast<double>(fn.count(cls) ? fn.at(cls) : 0);
    const double denom = 2.0 * tpc + fpc + fnc;
    f1_sum += denom > 0.0 ? 2.0 * tpc / denom : 0.0;
  }
  row.macro_f1 = f1_sum / static_cast<double>(gold_classes.size());
  return row;
}

}  // namespace detail

// Per-bucket classification report in the Overall/Many/Medium/Few layout.
inline BucketReport csc_report(
    const std::vector<ClassId>& predictions,
    const std::vector<LabeledExample>& golds,
    const std::map<ClassId, FrequencyBucket>& bucket_of) {
  if (predictions.size() != golds.size()) {
    throw parameter_error("predictions and golds must align");
  }
  std::vector<const LabeledExample*> all;
  all.reserve(golds.size());
  for (const auto& g : golds) all.push_back(&g);

  BucketReport report;
  report.overall = detail::classification_row("overall", predictions, all);

  static constexpr FrequencyBucket kOrder[] = {
      FrequencyBucket::kMany, FrequencyBucket::kMedium, FrequencyBucket::kFew,
      FrequencyBucket::kFrequent, FrequencyBucket::kMediumOpen,
      FrequencyBucket::kRare};
  for (const FrequencyBucket bucket : kOrder) {
    std::vector<ClassId> preds;
    std::vector<const LabeledExample*> subset;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const auto it = bucket_of.find(golds[i].class_id);
      if (it != bucket_of.end() && it->second == bucket) {
        preds.push_back(predictions[i]);
        subset.push_back(&golds[i]);
      }
    }
    if (!subset.empty()) {
      report.buckets.push_back(
          detail::classification_row(bucket_name(bucket), preds, subset));
    }
  }
  return report;
}

// Seen-vs-unseen score: the largest probability over known classes.
inline double osc_score(const ClassDistribution& dist) {
  return dist.max_prob();
}

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr)
  double auc = 0.0;
};

// ROC over a descending threshold sweep; equal scores collapse into one
// step, AUC by trapezoid. Positive label means "seen".
inline RocCurve roc(const std::vector<double>& scores,
                    const std::vector<bool>& is_seen) {
  if (scores.size() != is_seen.size()) {
    throw parameter_error("scores and labels must align");
  }
  std::size_t positives = 0;
  for (const bool b : is_seen) positives += b ? 1 : 0;
  const std::size_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw parameter_error("roc needs both seen and unseen labels");
  }

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (is_seen[order[j]] ? tp : fp) += 1;
      ++j;
    }
    const double fpr = static_cast<double>(fp) / negatives;
    const double tpr = static_cast<double>(tp) / positives;
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    curve.points.emplace_back(fpr, tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
    i = j;
  }
  curve.auc = auc;
  return curve;
}

// Jensen-Shannon divergence with base-2 logarithms; 0 log 0 reads as 0.
// Bounded in [0, 1], symmetric, zero iff the distributions coincide.
inline double jsd(const ClassDistribution& p, const ClassDistribution& q) {
  if (p.p.size() != q.p.size()) {
    throw parameter_error("jsd requires the same class index space");
  }
  auto kl_to_mix = [](const std::vector<double>& a,
                      const std::vector<double>& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] <= 0.0) continue;
      const double m = (a[i] + b[i]) / 2.0;
      sum += a[i] * std::log2(a[i] / m);
    }
    return sum;
  };
  const double d = 0.5 * kl_to_mix(p.p, q.p) + 0.5 * kl_to_mix(q.p, p.p);
  return std::clamp(d, 0.0, 1.0);
}

// Picks the threshold maximizing validation accuracy (candidates are the
// midpoints between consecutive distinct validation distances, plus the two
// all-same / all-different sentinels) and reports test accuracy there.
// The decision rule is same-class iff distance < threshold.
struct OsvResult {
  double threshold = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
};

inline double pair_accuracy(const std::vector<double>& distances,
                            const std::vector<bool>& same, double threshold) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if ((distances[i] < threshold) == same[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(distances.size());
}

inline OsvResult osv_evaluate(const std::vector<double>& valid_distances,
                              const std::vector<bool>& valid_same,
                              const std::vector<double>& test_distances,
                              const std::vector<bool>& test_same) {
  if (valid_distances.empty() || test_distances.empty()) {
    throw parameter_error("osv evaluation needs non-empty pair sets");
  }
  if (valid_distances.size() != valid_same.size() ||
      test_distances.size() != test_same.size()) {
    throw parameter_error("distances and labels must align");
  }
  std::vector<double> sorted = valid_distances;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> candidates;
  candidates.push_back(0.0);  // everything "different"
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
  }
  candidates.push_back(sorted.back() + 1.0);  // everything "same"

  OsvResult result;
  result.threshold = candidates.front();
  result.validation_accuracy = -1.0;
  for (const double theta : candidates) {
    const double acc = pair_accuracy(valid_distances, valid_same, theta);
    if (acc > result.validation_accuracy) {
      result.validation_accuracy = acc;
      result.threshold = theta;
    }
  }
  result.test_accuracy =
      pair_accuracy(test_distances, test_same, result.threshold);
  return result;
}

}  // namespace lotnorm
