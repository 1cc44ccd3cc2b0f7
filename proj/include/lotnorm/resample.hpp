#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/rng.hpp"

namespace lotnorm {

struct ResampleParams {
  double q = 0.5;                       // exponent; q < 1 lifts the tail
  std::vector<std::uint64_t> counts;    // n_j per class, all >= 1

  void validate() const {
    if (!(q >= 0.0 && q <= 1.0)) {
      throw parameter_error("resample q must lie in [0, 1]");
    }
    if (counts.empty()) throw parameter_error("resample needs class counts");
    for (const auto n : counts) {
      if (n == 0) throw parameter_error("resample class counts must be >= 1");
    }
  }
};

// Walker alias table: O(n) build, O(1) draws from p_j = n_j^q / sum n_i^q.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob_.resize(n);
    alias_.resize(n);
    double total = 0.0;
    for (const double w : weights) total += w;
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (const std::size_t i : large) prob_[i] = 1.0;
    for (const std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t draw(Rng& rng) const {
    const std::size_t col = rng.below(prob_.size());
    return rng.unit() < prob_[col] ? col : alias_[col];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

// Infinite stream of (class, within-class example) picks following the
// frequency-tempered distribution p_j = n_j^q / sum_i n_i^q; the example
// index is uniform within the class.
class ResampleStream {
 public:
  ResampleStream(ResampleParams params, Rng rng)
      : params_(std::move(params)), rng_(rng), table_(make_weights(params_)) {}

  std::pair<std::size_t, std::size_t> next() {
    const std::size_t cls = table_.draw(rng_);
    const std::size_t ex = rng_.below(params_.counts[cls]);
    return {cls, ex};
  }

  // Exact class probability under the resampling law.
  double probability(std::size_t cls) const {
    double total = 0.0;
    for (const auto n : params_.counts) {
      total += std::pow(static_cast<double>(n), params_.q);
    }
    return std::pow(static_cast<double>(params_.counts[cls]), params_.q) /
           total;
  }

 private:
  static std::vector<double> make_weights(const ResampleParams& params) {
    params.validate();
    std::vector<double> w(params.counts.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::pow(static_cast<double>(params.counts[i]), params.q);
    }
    return w;
  }

  ResampleParams params_;
  Rng rng_;
  AliasTable table_;
};

}  // namespace lotnorm
