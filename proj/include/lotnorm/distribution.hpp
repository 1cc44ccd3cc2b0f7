#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"

namespace lotnorm {

// Sorted, deduplicated class-id space shared by a model and every
// distribution it emits. Index order == lexicographic id order, so the
// smallest index is also the smallest class id.
class ClassIndex {
 public:
  explicit ClassIndex(std::vector<ClassId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    for (std::size_t i = 0; i < ids_.size(); ++i) pos_[ids_[i]] = i;
  }

  static std::shared_ptr<const ClassIndex> from_examples(
      const std::vector<LabeledExample>& examples) {
    std::vector<ClassId> ids;
    ids.reserve(examples.size());
    for (const auto& ex : examples) ids.push_back(ex.class_id);
    return std::make_shared<const ClassIndex>(std::move(ids));
  }

  std::size_t size() const { return ids_.size(); }
  const ClassId& id_of(std::size_t index) const { return ids_[index]; }
  const std::vector<ClassId>& ids() const { return ids_; }

  // -1 when the id is unknown to this index.
  std::ptrdiff_t index_of(const ClassId& id) const {
    const auto it = pos_.find(id);
    return it == pos_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

 private:
  std::vector<ClassId> ids_;
  std::map<ClassId, std::size_t> pos_;
};

// Probability distribution over a ClassIndex. Entries are non-negative and
// sum to 1 within 1e-9; argmax ties resolve to the smallest class id.
struct ClassDistribution {
  std::shared_ptr<const ClassIndex> classes;
  std::vector<double> p;

  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[best]) best = i;
    }
    return best;
  }

  const ClassId& argmax_class() const { return classes->id_of(argmax()); }

  double max_prob() const {
    double best = 0.0;
    for (const double v : p) best = std::max(best, v);
    return best;
  }
};

namespace detail {

// Normalizes log scores into a distribution via log-sum-exp.
inline std::vector<double> softmax_from_logs(const std::vector<double>& logs) {
  double mx = -INFINITY;
  for (const double v : logs) mx = std::max(mx, v);
  std::vector<double> p(logs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    p[i] = std::exp(logs[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace detail

}  // namespace lotnorm
