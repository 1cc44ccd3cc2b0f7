#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/distribution.hpp"
#include "lotnorm/naive_bayes.hpp"

namespace lotnorm {

struct RerankWeights {
  // exact match must outweigh the other three features combined so an
  // exact hit always ranks first.
  double exact = 3.0;
  double jaccard = 1.0;
  double cosine = 1.0;
  double prior = 0.25;
};

struct RetrievalCandidate {
  ClassId class_id;
  double score = 0.0;     // rerank score
  double cosine = 0.0;    // best tf-idf cosine among the class's hits
};

struct RetrievalDecision {
  std::vector<RetrievalCandidate> ranked;
  bool unseen = false;
  double top_score = 0.0;
};

// Four-stage normalizer: inverted word index with tf-idf statistics,
// top-k cosine retrieval, fixed-weight linear rerank over
// (exact, jaccard, cosine, prior), and a threshold validate step that
// flags queries from unseen classes.
class RetrievalIndex {
 public:
  struct Posting {
    std::uint32_t example = 0;  // index into examples_, ascending
    std::uint32_t tf = 0;
  };

  static RetrievalIndex build(const std::vector<LabeledExample>& examples) {
    if (examples.empty()) {
      throw parameter_error("retrieval index needs a non-empty train set");
    }
    RetrievalIndex index;
    index.examples_ = examples;
    index.classes_ = ClassIndex::from_examples(examples);
    index.class_counts_.assign(index.classes_->size(), 0);
    index.norms_.resize(examples.size());

    // Token ids in sorted token order for deterministic layout.
    std::map<std::string, std::vector<Posting>> postings;
    std::vector<std::map<std::string, std::uint32_t>> tf_of(examples.size());
    for (std::size_t e = 0; e < examples.size(); ++e) {
      ++index.class_counts_[index.classes_->index_of(
          examples[e].class_id)];
      for (const auto& tok : word_tokens(examples[e].name)) {
        ++tf_of[e][tok];
      }
    }
    for (std::size_t e = 0; e < examples.size(); ++e) {
      for (const auto& [tok, tf] : tf_of[e]) {
        postings[tok].push_back({static_cast<std::uint32_t>(e), tf});
      }
    }
    index.postings_ = std::move(postings);
    for (std::size_t e = 0; e < examples.size(); ++e) {
      double norm2 = 0.0;
      for (const auto& [tok, tf] : tf_of[e]) {
        const double w = tf * index.idf(tok);
        norm2 += w * w;
      }
      index.norms_[e] = std::sqrt(norm2);
    }
    return index;
  }

  std::size_t document_frequency(const std::string& token) const {
    const auto it = postings_.find(token);
    return it == postings_.end() ? 0 : it->second.size();
  }

  double idf(const std::string& token) const {
    const std::size_t df = document_frequency(token);
    if (df == 0) return 0.0;
    return std::log(static_cast<double>(examples_.size()) /
                    static_cast<double>(df));
  }

  // Top-k training examples by tf-idf cosine, ties broken by example index.
  std::vector<std::pair<std::size_t, double>> retrieve(
      const CleanedName& query, std::size_t k) const {
    std::map<std::string, std::uint32_t> qtf;
    for (const auto& tok : word_tokens(query)) ++qtf[tok];
    double qnorm2 = 0.0;
    std::map<std::size_t, double> dot;
    for (const auto& [tok, tf] : qtf) {
      const double w = idf(tok);
      if (w == 0.0) continue;
      const double qw = tf * w;
      qnorm2 += qw * qw;
      for (const Posting& post : postings_.at(tok)) {
        dot[post.example] += qw * (post.tf * w);
      }
    }
    if (qnorm2 == 0.0 || dot.empty()) return {};
    const double qnorm = std::sqrt(qnorm2);
    std::vector<std::pair<std::size_t, double>> scored;
    scored.reserve(dot.size());
    for (const auto& [e, d] : dot) {
      scored.emplace_back(e, d / (qnorm * norms_[e]));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) {
                       return a.second > b.second;
                     });
    if (scored.size() > k) scored.resize(k);
    return scored;
  }

  RetrievalDecision normalize(const CleanedName& query, std::size_t k = 10,
                              RerankWeights weights = {},
                              double validate_threshold = 0.5) const {
    RetrievalDecision decision;
    const auto hits = retrieve(query, k);
    if (hits.empty()) {
      decision.unseen = true;
      return decision;
    }
    const std::set<std::string> qtokens = [&] {
      const auto toks = word_tokens(query);
      return std::set<std::string>(toks.begin(), toks.end());
    }();

    struct PerClass {
      double cosine = 0.0;
      double jaccard = 0.0;
      bool exact = false;
    };
    std::map<ClassId, PerClass> agg;
    for (const auto& [e, cos] : hits) {
      PerClass& pc = agg[examples_[e].class_id];
      pc.cosine = std::max(pc.cosine, cos);
      if (examples_[e].name == query) pc.exact = true;
      const auto dtoks = word_tokens(examples_[e].name);
      const std::set<std::string> dset(dtoks.begin(), dtoks.end());
      std::size_t inter = 0;
      for (const auto& t : dset) inter += qtokens.count(t);
      const std::size_t uni = qtokens.size() + dset.size() - inter;
      if (uni > 0) {
        pc.jaccard = std::max(
            pc.jaccard, static_cast<double>(inter) / static_cast<double>(uni));
      }
    }

    for (const auto& [cls, pc] : agg) {
      const double prior =
          static_cast<double>(
              class_counts_[classes_->index_of(cls)]) /
          static_cast<double>(examples_.size());
      const double score = weights.exact * (pc.exact ? 1.0 : 0.0) +
                           weights.jaccard * pc.jaccard +
                           weights.cosine * pc.cosine + weights.prior * prior;
      decision.ranked.push_back({cls, score, pc.cosine});
    }
    std::stable_sort(decision.ranked.begin(), decision.ranked.end(),
                     [](const RetrievalCandidate& a,
                        const RetrievalCandidate& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.class_id < b.class_id;
                     });
    decision.top_score = decision.ranked.front().score;
    decision.unseen = decision.top_score < validate_threshold;
    return decision;
  }

  const std::vector<LabeledExample>& examples() const { return examples_; }
  const std::shared_ptr<const ClassIndex>& classes() const { return classes_; }
  const std::map<std::string, std::vector<Posting>>& postings() const {
    return postings_;
  }

 private:
  std::vector<LabeledExample> examples_;
  std::shared_ptr<const ClassIndex> classes_;
  std::vector<std::uint64_t> class_counts_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<double> norms_;
};

}  // namespace lotnorm
