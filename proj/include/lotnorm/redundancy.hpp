#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "lotnorm/cleaning.hpp"
#include "lotnorm/corpus.hpp"
#include "lotnorm/resolution.hpp"
#include "lotnorm/rng.hpp"

namespace lotnorm {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
  }

  bool same(std::size_t a, std::size_t b) { return find(a) == find(b); }

  std::size_t component_count() const { return components_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t components_;
};

// Members of each component, grouped. Canonical form: components ordered by
// their smallest member index, members ascending. Survivor selection and the
// brute-force test oracle both consume this form, so partitions compare and
// draw identically regardless of how they were computed.
using ComponentPartition = std::vector<std::vector<std::size_t>>;

inline ComponentPartition components_of(UnionFind& uf, std::size_t n) {
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
  // Keyed by root, but emitted in order of smallest member; members were
  // appended in ascending order already.
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> items;
  items.reserve(by_root.size());
  for (auto& [root, members] : by_root) {
    items.emplace_back(members.front(), std::move(members));
  }
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  ComponentPartition out;
  out.reserve(items.size());
  for (auto& [first, members] : items) out.push_back(std::move(members));
  return out;
}

namespace detail {

// Aho-Corasick automaton over the 54-symbol cleaned-name alphabet.
// Patterns are the distinct names of one class; scanning each name and
// following dictionary suffix links reports every full-pattern containment.
class SubstringAutomaton {
 public:
  explicit SubstringAutomaton(const std::vector<CleanedName>& patterns) {
    nodes_.push_back({});
    for (std::size_t p = 0; p < patterns.size(); ++p) {
      std::int32_t cur = 0;
      for (char c : patterns[p]) {
        const int sym = retained_char_index(c);
        std::int32_t next = child(cur, sym);
        if (next < 0) {
          next = static_cast<std::int32_t>(nodes_.size());
          nodes_.push_back({});
          nodes_[cur].children.emplace_back(static_cast<std::uint8_t>(sym),
                                            next);
        }
        cur = next;
      }
      nodes_[cur].pattern = static_cast<std::int32_t>(p);
    }
    build_links();
  }

  // Invokes cb(pattern_index) for every pattern occurring in text as a
  // contiguous substring, once per occurrence.
  template <typename Callback>
  void scan(const CleanedName& text, Callback&& cb) const {
    std::int32_t state = 0;
    for (char c : text) {
      const int sym = retained_char_index(c);
      state = step(state, sym);
      for (std::int32_t hit = hit_state(state); hit != 0;
           hit = nodes_[hit].dict) {
        cb(nodes_[hit].pattern);
      }
    }
  }

 private:
  struct Node {
    std::vector<std::pair<std::uint8_t, std::int32_t>> children;
    std::int32_t fail = 0;
    std::int32_t dict = 0;  // nearest suffix state that ends a pattern
    std::int32_t pattern = -1;
  };

  std::int32_t child(std::int32_t node, int sym) const {
    for (const auto& [s, n] : nodes_[node].children) {
      if (s == sym) return n;
    }
    return -1;
  }

  std::int32_t step(std::int32_t state, int sym) const {
    while (true) {
      const std::int32_t next = child(state, sym);
      if (next >= 0) return next;
      if (state == 0) return 0;
      state = nodes_[state].fail;
    }
  }

  std::int32_t hit_state(std::int32_t state) const {
    return nodes_[state].pattern >= 0 ? state : nodes_[state].dict;
  }

  void build_links() {
    std::vector<std::int32_t> queue;
    queue.reserve(nodes_.size());
    for (const auto& [sym, c] : nodes_[0].children) queue.push_back(c);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::int32_t u = queue[qi];
      for (const auto& [sym, v] : nodes_[u].children) {
        nodes_[v].fail = step(nodes_[u].fail, sym);
        nodes_[v].dict = hit_state(nodes_[v].fail);
        queue.push_back(v);
      }
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace detail

// Edge list of the per-class substring graph: (u, v) with u < v iff one
// name contains the other. Exposed for tests and reports; the filter itself
// unions on match without materializing edges.
inline std::vector<std::pair<std::size_t, std::size_t>> build_substring_edges(
    const std::vector<CleanedName>& names) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  const detail::SubstringAutomaton ac(names);
  for (std::size_t i = 0; i < names.size(); ++i) {
    ac.scan(names[i], [&](std::int32_t p) {
      const auto j = static_cast<std::size_t>(p);
      if (j != i) edges.emplace_back(std::min(i, j), std::max(i, j));
    });
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

// Containment-connected components of one class's names.
inline ComponentPartition connected_components(
    const std::vector<CleanedName>& names) {
  UnionFind uf(names.size());
  const detail::SubstringAutomaton ac(names);
  for (std::size_t i = 0; i < names.size(); ++i) {
    ac.scan(names[i], [&](std::int32_t p) {
      const auto j = static_cast<std::size_t>(p);
      if (j != i) uf.unite(i, j);
    });
  }
  return components_of(uf, names.size());
}

// One uniform draw per component, in canonical component order. Shared by
// the fast path and the brute-force oracle so identical partitions retain
// identical names under the same sub-seed.
inline std::vector<std::size_t> select_survivors(
    const ComponentPartition& partition, Rng& rng) {
  std::vector<std::size_t> survivors;
  survivors.reserve(partition.size());
  for (const auto& members : partition) {
    survivors.push_back(members[rng.below(members.size())]);
  }
  return survivors;
}

// Retains one name per containment component, chosen uniformly at random.
// Output is sorted.
inline std::vector<CleanedName> filter_class(
    const std::vector<CleanedName>& names, Rng& rng) {
  std::vector<CleanedName> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  const ComponentPartition partition = connected_components(sorted);
  std::vector<CleanedName> kept;
  kept.reserve(partition.size());
  for (const std::size_t idx : select_survivors(partition, rng)) {
    kept.push_back(sorted[idx]);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

struct FilterClassReport {
  ClassId class_id;
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

struct FilterResult {
  ResolvedCorpus corpus;
  std::vector<FilterClassReport> report;
};

// Applies filter_class independently per class. Per-class rng sub-streams
// keyed by class id make the result deterministic for any thread count.
inline FilterResult filter_corpus(const ResolvedCorpus& corpus,
                                  std::uint64_t seed, unsigned threads = 1) {
  std::map<ClassId, std::vector<CleanedName>> by_class;
  std::map<std::pair<ClassId, CleanedName>, double> conf_of;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    const auto& ex = corpus.examples[i];
    by_class[ex.class_id].push_back(ex.name);
    conf_of[{ex.class_id, ex.name}] = corpus.winning_confidence[i];
  }

  std::vector<const ClassId*> class_order;
  std::vector<const std::vector<CleanedName>*> class_names;
  for (const auto& [cls, names] : by_class) {
    class_order.push_back(&cls);
    class_names.push_back(&names);
  }

  std::vector<std::vector<CleanedName>> kept(class_order.size());
  auto work = [&](std::size_t c) {
    Rng rng = substream(seed, "filter/class/" + *class_order[c]);
    kept[c] = filter_class(*class_names[c], rng);
  };

  if (threads > 1 && class_order.size() > 1) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t c = next.fetch_add(1); c < class_order.size();
           c = next.fetch_add(1)) {
        work(c);
      }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(
        threads, static_cast<unsigned>(class_order.size()));
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t c = 0; c < class_order.size(); ++c) work(c);
  }

  FilterResult result;
  for (std::size_t c = 0; c < class_order.size(); ++c) {
    const ClassId& cls = *class_order[c];
    for (const auto& name : kept[c]) {
      result.corpus.examples.push_back({name, cls});
      result.corpus.winning_confidence.push_back(conf_of[{cls, name}]);
    }
    result.report.push_back(
        {cls, kept[c].size(), class_names[c]->size() - kept[c].size()});
  }
  return result;
}

}  // namespace lotnorm
