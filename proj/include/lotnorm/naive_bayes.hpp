#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/distribution.hpp"

namespace lotnorm {

// Function words stripped from bag-of-words features. Institution names mix
// languages, so the list carries the usual English/Romance/Germanic glue.
inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a",  "an",  "and", "at",  "by",  "de",  "del", "della",
      "der", "des", "di",  "du",  "e",   "el",  "en",  "et",
      "for", "from", "in",  "la",  "le",  "les", "of",  "on",
      "or",  "the", "to",  "und", "van", "von", "y"};
  return words;
}

inline std::vector<std::string> word_tokens(std::string_view name) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < name.size()) {
    const std::size_t sp = name.find(' ', start);
    if (sp == std::string_view::npos) {
      tokens.emplace_back(name.substr(start));
      break;
    }
    if (sp > start) tokens.emplace_back(name.substr(start, sp - start));
    start = sp + 1;
  }
  return tokens;
}

// Multinomial Naive Bayes over whitespace word tokens with additive
// smoothing. Tokens absent from the training vocabulary are skipped at
// prediction time, so an all-unseen query falls back to the class priors.
class NaiveBayesModel {
 public:
  NaiveBayesModel() = default;

  static NaiveBayesModel train(const std::vector<LabeledExample>& examples,
                               double alpha = 1.0,
                               const std::set<std::string>& stopwords =
                                   default_stopwords()) {
    if (examples.empty()) {
      throw parameter_error("naive bayes training set is empty");
    }
    if (!(alpha > 0.0)) {
      throw parameter_error("naive bayes smoothing alpha must be > 0");
    }
    NaiveBayesModel model;
    model.alpha_ = alpha;
    model.stopwords_ = stopwords;
    model.classes_ = ClassIndex::from_examples(examples);
    const std::size_t c = model.classes_->size();
    model.class_examples_.assign(c, 0);
    model.class_token_totals_.assign(c, 0);

    std::map<std::string, std::vector<std::uint64_t>> counts;
    for (const auto& ex : examples) {
      const std::size_t cls =
          static_cast<std::size_t>(model.classes_->index_of(ex.class_id));
      ++model.class_examples_[cls];
      for (const auto& tok : word_tokens(ex.name)) {
        if (stopwords.count(tok)) continue;
        auto [it, fresh] = counts.try_emplace(tok);
        if (fresh) it->second.assign(c, 0);
        ++it->second[cls];
        ++model.class_token_totals_[cls];
      }
    }
    model.token_counts_ = std::move(counts);
    model.total_examples_ = examples.size();
    return model;
  }

  ClassDistribution predict(const CleanedName& name) const {
    const std::size_t c = classes_->size();
    const double vocab = static_cast<double>(token_counts_.size());
    std::vector<double> logp(c);
    for (std::size_t i = 0; i < c; ++i) {
      logp[i] = std::log(static_cast<double>(class_examples_[i]) /
                         static_cast<double>(total_examples_));
    }
    for (const auto& tok : word_tokens(name)) {
      if (stopwords_.count(tok)) continue;
      const auto it = token_counts_.find(tok);
      if (it == token_counts_.end()) continue;  // out of vocabulary
      for (std::size_t i = 0; i < c; ++i) {
        const double num = static_cast<double>(it->second[i]) + alpha_;
        const double den = static_cast<double>(class_token_totals_[i]) +
                           alpha_ * vocab;
        logp[i] += std::log(num / den);
      }
    }
    return {classes_, detail::softmax_from_logs(logp)};
  }

  const std::shared_ptr<const ClassIndex>& classes() const { return classes_; }
  double alpha() const { return alpha_; }
  const std::map<std::string, std::vector<std::uint64_t>>& token_counts()
      const {
    return token_counts_;
  }
  const std::vector<std::uint64_t>& class_examples() const {
    return class_examples_;
  }
  const std::vector<std::uint64_t>& class_token_totals() const {
    return class_token_totals_;
  }
  std::uint64_t total_examples() const { return total_examples_; }
  const std::set<std::string>& stopwords() const { return stopwords_; }

  // Serialization support: rebuilds the derived fields from raw counts.
  static NaiveBayesModel from_parts(
      std::shared_ptr<const ClassIndex> classes, double alpha,
      std::set<std::string> stopwords,
      std::map<std::string, std::vector<std::uint64_t>> token_counts,
      std::vector<std::uint64_t> class_examples) {
    NaiveBayesModel model;
    model.classes_ = std::move(classes);
    model.alpha_ = alpha;
    model.stopwords_ = std::move(stopwords);
    model.token_counts_ = std::move(token_counts);
    model.class_examples_ = std::move(class_examples);
    model.class_token_totals_.assign(model.classes_->size(), 0);
    for (const auto& [tok, per_class] : model.token_counts_) {
      for (std::size_t i = 0; i < per_class.size(); ++i) {
        model.class_token_totals_[i] += per_class[i];
      }
    }
    model.total_examples_ = 0;
    for (const auto n : model.class_examples_) model.total_examples_ += n;
    return model;
  }

 private:
  std::shared_ptr<const ClassIndex> classes_;
  double alpha_ = 1.0;
  std::set<std::string> stopwords_;
  std::map<std::string, std::vector<std::uint64_t>> token_counts_;
  std::vector<std::uint64_t> class_examples_;
  std::vector<std::uint64_t> class_token_totals_;
  std::uint64_t total_examples_ = 0;
};

}  // namespace lotnorm
