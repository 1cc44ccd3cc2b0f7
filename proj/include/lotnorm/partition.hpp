#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lotnorm/corpus.hpp"
#include "lotnorm/resolution.hpp"
#include "lotnorm/rng.hpp"

#include "json.hpp"

namespace lotnorm {

// Closed-world classes bucket as Many/Medium/Few; open-set (zero-shot)
// classes use Frequent/MediumOpen/Rare at the same frequency cuts.
enum class FrequencyBucket {
  kMany,
  kMedium,
  kFew,
  kFrequent,
  kMediumOpen,
  kRare,
};

inline const char* bucket_name(FrequencyBucket b) {
  switch (b) {
    case FrequencyBucket::kMany:
      return "many";
    case FrequencyBucket::kMedium:
      return "medium";
    case FrequencyBucket::kFew:
      return "few";
    case FrequencyBucket::kFrequent:
      return "frequent";
    case FrequencyBucket::kMediumOpen:
      return "medium_open";
    case FrequencyBucket::kRare:
      return "rare";
  }
  return "unknown";
}

struct BucketThresholds {
  std::uint64_t few_max = 5;     // count <= few_max   -> Few / Rare
  std::uint64_t medium_max = 20; // count <= medium_max -> Medium / MediumOpen
};

// Few if count <= 5, Medium if 5 < count <= 20, Many if count > 20.
inline FrequencyBucket assign_bucket(std::uint64_t global_count,
                                     bool open_set = false,
                                     BucketThresholds t = {}) {
  if (global_count <= t.few_max) {
    return open_set ? FrequencyBucket::kRare : FrequencyBucket::kFew;
  }
  if (global_count <= t.medium_max) {
    return open_set ? FrequencyBucket::kMediumOpen : FrequencyBucket::kMedium;
  }
  return open_set ? FrequencyBucket::kFrequent : FrequencyBucket::kMany;
}

struct DatasetSplits {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> valid;
  std::vector<LabeledExample> close_test;
  std::vector<LabeledExample> open_test;
  std::map<ClassId, FrequencyBucket> bucket_of;
  std::map<ClassId, std::uint64_t> global_freq;
};

struct SplitFractions {
  double open_class_frac = 0.02;
  double test_frac = 0.02;
  double valid_frac = 0.02;
};

namespace detail {

inline std::size_t ceil_frac(double frac, std::size_t n) {
  return static_cast<std::size_t>(
      std::ceil(static_cast<long double>(frac) * n - 1e-9L));
}

// Splits `universe` into (kept, carved) by sampling round(frac*N) examples,
// then applies the two repair passes from the partitioning procedure:
//  a) a class entirely in `kept` moves one random example to `carved`;
//  b) a class entirely in `carved` moves one random example back.
// Classes are visited in sorted id order; candidates are drawn uniformly.
inline void carve(const std::vector<LabeledExample>& universe,
                  double frac, Rng& rng,
                  std::vector<LabeledExample>& kept,
                  std::vector<LabeledExample>& carved) {
  const std::size_t n = universe.size();
  const std::size_t want =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac));
  std::vector<bool> in_carved(n, false);
  for (const std::size_t i : rng.sample_indices(n, want)) in_carved[i] = true;

  std::map<ClassId, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) {
    members[universe[i].class_id].push_back(i);
  }

  for (auto& [cls, idx] : members) {
    const bool any_carved =
        std::any_of(idx.begin(), idx.end(),
                    [&](std::size_t i) { return in_carved[i]; });
    if (!any_carved) {
      in_carved[idx[rng.below(idx.size())]] = true;
    }
  }
  for (auto& [cls, idx] : members) {
    const bool all_carved =
        std::all_of(idx.begin(), idx.end(),
                    [&](std::size_t i) { return in_carved[i]; });
    if (all_carved) {
      in_carved[idx[rng.below(idx.size())]] = false;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    (in_carved[i] ? carved : kept).push_back(universe[i]);
  }
}

}  // namespace detail

// Produces train/valid/close-test/open-test splits. Examples are first
// canonicalized to (class, name) order so the result is a pure function of
// (corpus, fractions, seed).
inline DatasetSplits split(const ResolvedCorpus& corpus,
                           SplitFractions fractions, std::uint64_t seed,
                           BucketThresholds thresholds = {}) {
  std::vector<LabeledExample> all = corpus.examples;
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::tie(a.class_id, a.name) < std::tie(b.class_id, b.name);
  });

  DatasetSplits splits;
  for (const auto& ex : all) ++splits.global_freq[ex.class_id];

  std::vector<ClassId> classes;
  for (const auto& [cls, freq] : splits.global_freq) classes.push_back(cls);
  if (classes.size() < 2) {
    throw parameter_error("split needs at least 2 classes");
  }

  // 1. Open set: ceil(open_class_frac * C) whole classes.
  const std::size_t open_count =
      detail::ceil_frac(fractions.open_class_frac, classes.size());
  Rng open_rng = substream(seed, "split/open");
  std::set<ClassId> open_classes;
  for (const std::size_t i :
       open_rng.sample_indices(classes.size(), open_count)) {
    open_classes.insert(classes[i]);
  }

  std::vector<LabeledExample> closed_universe;
  for (const auto& ex : all) {
    if (open_classes.count(ex.class_id)) {
      splits.open_test.push_back(ex);
    } else {
      closed_universe.push_back(ex);
    }
  }

  // 2-4. Carve the close test set out of the closed universe, with repairs.
  Rng test_rng = substream(seed, "split/test");
  std::vector<LabeledExample> provisional_train;
  detail::carve(closed_universe, fractions.test_frac, test_rng,
                provisional_train, splits.close_test);

  // 5. Same procedure carves valid out of the remaining train set.
  Rng valid_rng = substream(seed, "split/valid");
  detail::carve(provisional_train, fractions.valid_frac, valid_rng,
                splits.train, splits.valid);

  for (const auto& [cls, freq] : splits.global_freq) {
    splits.bucket_of[cls] =
        assign_bucket(freq, open_classes.count(cls) != 0, thresholds);
  }
  return splits;
}

struct VerificationPair {
  CleanedName name_a;
  CleanedName name_b;
  bool same_class = false;
};

// Samples a balanced, duplicate-free set of verification pairs from the
// given examples (typically the open test set). Positives draw an eligible
// class uniformly, then two of its names; negatives draw two examples of
// different classes.
inline std::vector<VerificationPair> sample_verification_pairs(
    const std::vector<LabeledExample>& examples, std::size_t n_pairs,
    std::uint64_t seed, std::string_view stream_name = "pairs") {
  if (n_pairs == 0 || n_pairs % 2 != 0) {
    throw parameter_error("n_pairs must be even and positive");
  }
  std::map<ClassId, std::vector<const CleanedName*>> by_class;
  for (const auto& ex : examples) by_class[ex.class_id].push_back(&ex.name);
  if (by_class.size() < 2) {
    throw parameter_error(
        "verification pairs need >= 2 classes in the example set");
  }
  std::vector<const std::vector<const CleanedName*>*> eligible;
  std::uint64_t positive_capacity = 0;
  for (const auto& [cls, names] : by_class) {
    if (names.size() >= 2) {
      eligible.push_back(&names);
      positive_capacity += names.size() * (names.size() - 1) / 2;
    }
  }
  const std::size_t half = n_pairs / 2;
  if (eligible.empty()) {
    throw parameter_error("no class with 2+ examples; positives infeasible");
  }
  if (positive_capacity < half) {
    throw parameter_error("not enough distinct positive pairs available");
  }

  Rng rng = substream(seed, stream_name);
  std::set<std::pair<std::string_view, std::string_view>> used;
  auto key = [](const CleanedName& a, const CleanedName& b) {
    return a < b ? std::make_pair(std::string_view(a), std::string_view(b))
                 : std::make_pair(std::string_view(b), std::string_view(a));
  };

  std::vector<VerificationPair> pairs;
  pairs.reserve(n_pairs);
  std::size_t guard = 0;
  const std::size_t guard_limit = 1000 + 200 * n_pairs;
  while (pairs.size() < half) {
    if (++guard > guard_limit) {
      // Rejection has stalled: enumerate every remaining positive pair.
      std::vector<VerificationPair> rest;
      for (const auto* names : eligible) {
        for (std::size_t i = 0; i < names->size(); ++i) {
          for (std::size_t j = i + 1; j < names->size(); ++j) {
            if (!used.count(key(*(*names)[i], *(*names)[j]))) {
              rest.push_back({*(*names)[i], *(*names)[j], true});
            }
          }
        }
      }
      rng.shuffle(rest);
      for (auto& p : rest) {
        if (pairs.size() >= half) break;
        used.insert(key(p.name_a, p.name_b));
        pairs.push_back(std::move(p));
      }
      break;
    }
    const auto* names = eligible[rng.below(eligible.size())];
    const std::size_t i = rng.below(names->size());
    std::size_t j = rng.below(names->size() - 1);
    if (j >= i) ++j;
    if (used.insert(key(*(*names)[i], *(*names)[j])).second) {
      pairs.push_back({*(*names)[i], *(*names)[j], true});
    }
  }
  if (pairs.size() < half) {
    throw parameter_error("not enough distinct positive pairs available");
  }

  std::vector<const LabeledExample*> flat;
  flat.reserve(examples.size());
  for (const auto& ex : examples) flat.push_back(&ex);
  guard = 0;
  while (pairs.size() < n_pairs) {
    if (++guard > guard_limit) {
      throw parameter_error("negative pair sampling stalled; example set too small");
    }
    const auto* a = flat[rng.below(flat.size())];
    const auto* b = flat[rng.below(flat.size())];
    if (a->class_id == b->class_id) continue;
    if (used.insert(key(a->name, b->name)).second) {
      pairs.push_back({a->name, b->name, false});
    }
  }
  return pairs;
}

// ---- split / pairs file formats (JSONL) ----

inline void write_split_jsonl(const std::string& path,
                              const std::vector<LabeledExample>& examples,
                              const std::map<ClassId, FrequencyBucket>& buckets) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write split file: " + path);
  for (const auto& ex : examples) {
    nlohmann::json row;
    row["name"] = ex.name;
    row["class"] = ex.class_id;
    row["bucket"] = bucket_name(buckets.at(ex.class_id));
    out << row.dump() << '\n';
  }
}

struct SplitFileRow {
  LabeledExample example;
  std::string bucket;
};

inline std::vector<SplitFileRow> read_split_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open split file: " + path);
  std::vector<SplitFileRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json row = nlohmann::json::parse(line);
    rows.push_back({{row.at("name").get<std::string>(),
                     row.at("class").get<std::string>()},
                    row.value("bucket", std::string())});
  }
  return rows;
}

inline void write_pairs_jsonl(const std::string& path,
                              const std::vector<VerificationPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write pairs file: " + path);
  for (const auto& p : pairs) {
    nlohmann::json row;
    row["a"] = p.name_a;
    row["b"] = p.name_b;
    row["same"] = p.same_class;
    out << row.dump() << '\n';
  }
}

inline std::vector<VerificationPair> read_pairs_jsonl(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open pairs file: " + path);
  std::vector<VerificationPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json row = nlohmann::json::parse(line);
    pairs.push_back({row.at("a").get<std::string>(),
                     row.at("b").get<std::string>(),
                     row.at("same").get<bool>()});
  }
  return pairs;
}

}  // namespace lotnorm
