#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotnorm/cleaning.hpp"
#include "lotnorm/corpus.hpp"

namespace lotnorm {

// Per cleaned name: occurrence count of each class it was mapped to.
// Mergeable (commutative-monoid) so tallies can be built per input shard.
class MappingTally {
 public:
  using ClassCounts = std::map<ClassId, std::uint64_t>;

  void add(const CleanedName& name, const ClassId& cls,
           std::uint64_t count = 1) {
    counts_[name][cls] += count;
  }

  void merge(const MappingTally& other) {
    for (const auto& [name, per_class] : other.counts_) {
      auto& mine = counts_[name];
      for (const auto& [cls, n] : per_class) mine[cls] += n;
    }
  }

  bool contains(const CleanedName& name) const {
    return counts_.count(name) != 0;
  }

  const ClassCounts& of(const CleanedName& name) const {
    const auto it = counts_.find(name);
    if (it == counts_.end()) {
      throw std::out_of_range("name not present in tally: " + name);
    }
    return it->second;
  }

  const std::map<CleanedName, ClassCounts>& all() const { return counts_; }

  std::size_t name_count() const { return counts_.size(); }

 private:
  std::map<CleanedName, ClassCounts> counts_;
};

struct TallyStats {
  std::size_t records_in = 0;
  std::size_t rejected_names = 0;
};

// Cleans and redirects raw records into a tally. Records whose name is
// rejected by normalize_name are dropped and counted.
inline MappingTally tally(const std::vector<RawAffiliationRecord>& records,
                          const IdRedirect& redirect,
                          TallyStats* stats = nullptr) {
  MappingTally t;
  TallyStats local;
  local.records_in = records.size();
  for (const auto& rec : records) {
    const NormalizeResult norm = normalize_name(rec.raw_name);
    if (!norm.accepted()) {
      ++local.rejected_names;
      continue;
    }
    t.add(norm.text(), redirect.apply(rec.institution_id));
  }
  if (stats) *stats = local;
  return t;
}

// confidence(b, i) = N_bi / sum_j N_bj
inline double confidence(const MappingTally& t, const CleanedName& name,
                         const ClassId& cls) {
  const auto& per_class = t.of(name);
  std::uint64_t total = 0;
  for (const auto& [c, n] : per_class) total += n;
  const auto it = per_class.find(cls);
  const std::uint64_t hits = it == per_class.end() ? 0 : it->second;
  return static_cast<double>(hits) / static_cast<double>(total);
}

struct DiscardedName {
  CleanedName name;
  ClassId top_class;
  double top_confidence = 0.0;
  std::uint64_t total_count = 0;
};

struct ResolvedCorpus {
  std::vector<LabeledExample> examples;           // one per surviving name
  std::vector<double> winning_confidence;         // parallel to examples
  std::vector<DiscardedName> discarded;
};

// Keeps a name iff its most frequent class holds a strict majority of the
// occurrences. The majority test is exact integer arithmetic: 2*max > total.
inline ResolvedCorpus resolve(const MappingTally& t) {
  ResolvedCorpus out;
  for (const auto& [name, per_class] : t.all()) {
    std::uint64_t total = 0;
    std::uint64_t best = 0;
    const ClassId* best_class = nullptr;
    for (const auto& [cls, n] : per_class) {
      total += n;
      if (n > best) {
        best = n;
        best_class = &cls;
      }
    }
    if (2 * best > total) {
      out.examples.push_back({name, *best_class});
      out.winning_confidence.push_back(static_cast<double>(best) /
                                       static_cast<double>(total));
    } else {
      out.discarded.push_back({name, best_class ? *best_class : ClassId(),
                               static_cast<double>(best) /
                                   static_cast<double>(total),
                               total});
    }
  }
  return out;
}

}  // namespace lotnorm
