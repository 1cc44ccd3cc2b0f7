#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lotnorm/rng.hpp"

namespace lotnorm {

using ClassId = std::string;

// A normalized variant string; see cleaning.hpp for the invariants
// (retained charset, trimmed, single spaces, 2..254 letters, <= 63 words).
using CleanedName = std::string;

struct InstitutionRecord {
  ClassId institution_id;
  std::string standard_name;
  std::string display_name;  // optional third column
};

struct RawAffiliationRecord {
  std::string raw_name;
  ClassId institution_id;
};

struct LabeledExample {
  CleanedName name;
  ClassId class_id;

  friend bool operator==(const LabeledExample&, const LabeledExample&) =
      default;
  friend auto operator<=>(const LabeledExample&, const LabeledExample&) =
      default;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class empty_input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Record>
struct LoadResult {
  std::vector<Record> records;
  std::size_t total_rows = 0;
  std::size_t skipped = 0;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

inline void chomp_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

// institutions.tsv: institution_id<TAB>standard_name[<TAB>display_name]
inline LoadResult<InstitutionRecord> load_institutions(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open institutions file: " + path);
  LoadResult<InstitutionRecord> result;
  std::string line;
  while (std::getline(in, line)) {
    detail::chomp_cr(line);
    if (line.empty()) continue;
    ++result.total_rows;
    const auto cols = detail::split_tabs(line);
    if (cols.size() < 2 || cols.size() > 3 || cols[0].empty() ||
        cols[1].empty()) {
      ++result.skipped;
      continue;
    }
    InstitutionRecord rec;
    rec.institution_id = std::string(cols[0]);
    rec.standard_name = std::string(cols[1]);
    if (cols.size() == 3) rec.display_name = std::string(cols[2]);
    result.records.push_back(std::move(rec));
  }
  if (result.records.empty()) {
    throw empty_input_error("no well-formed rows in " + path);
  }
  return result;
}

// affiliations.tsv: raw_name<TAB>institution_id. File order is preserved;
// downstream seeding depends on it.
inline LoadResult<RawAffiliationRecord> load_affiliations(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open affiliations file: " + path);
  LoadResult<RawAffiliationRecord> result;
  std::string line;
  while (std::getline(in, line)) {
    detail::chomp_cr(line);
    if (line.empty()) continue;
    ++result.total_rows;
    const auto cols = detail::split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      ++result.skipped;
      continue;
    }
    result.records.push_back(
        {std::string(cols[0]), std::string(cols[1])});
  }
  if (result.records.empty()) {
    throw empty_input_error("no well-formed rows in " + path);
  }
  return result;
}

inline void write_institutions(const std::string& path,
                               const std::vector<InstitutionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write institutions file: " + path);
  for (const auto& rec : records) {
    out << rec.institution_id << '\t' << rec.standard_name;
    if (!rec.display_name.empty()) out << '\t' << rec.display_name;
    out << '\n';
  }
}

inline void write_affiliations(
    const std::string& path,
    const std::vector<RawAffiliationRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write affiliations file: " + path);
  for (const auto& rec : records) {
    out << rec.raw_name << '\t' << rec.institution_id << '\n';
  }
}

enum class VariantOp : unsigned {
  kSuffixAppend = 1u << 0,
  kAbbreviation = 1u << 1,
  kTypo = 1u << 2,
  kWhitespaceNoise = 1u << 3,
};

inline constexpr unsigned kAllVariantOps =
    static_cast<unsigned>(VariantOp::kSuffixAppend) |
    static_cast<unsigned>(VariantOp::kAbbreviation) |
    static_cast<unsigned>(VariantOp::kTypo) |
    static_cast<unsigned>(VariantOp::kWhitespaceNoise);

struct SyntheticSpec {
  std::size_t class_count = 100;
  double zipf_exponent = 1.0;
  std::size_t total_records = 0;  // 0 -> 20 * class_count
  unsigned variant_ops = kAllVariantOps;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<InstitutionRecord> institutions;
  std::vector<RawAffiliationRecord> affiliations;
  // Raw record count per class rank (1-based rank k at index k-1).
  std::vector<std::size_t> class_counts;
};

namespace detail {

inline std::string synth_word(Rng& rng) {
  static constexpr const char* kOnsets[] = {
      "b", "br", "c", "cr", "d", "dr", "f", "g", "gr", "h", "j", "k", "l",
      "m", "n", "p", "pr", "qu", "r", "s", "st", "t", "tr", "v", "w", "z"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ia",
                                            "ea", "ai", "ou"};
  static constexpr const char* kCodas[] = {"", "n", "r", "l", "s", "m", "x",
                                           "th", "nd", "rk"};
  const int syllables = 2 + static_cast<int>(rng.below(2));
  std::string w;
  for (int i = 0; i < syllables; ++i) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
    if (i + 1 == syllables) w += kCodas[rng.below(std::size(kCodas))];
  }
  return w;
}

inline std::string synth_base_name(Rng& rng) {
  // Two distinctive words per name, as real institution names carry
  // several content words ("rowan college at burlington county").
  const std::string a = synth_word(rng);
  const std::string b = synth_word(rng);
  switch (rng.below(6)) {
    case 0:
      return "university of " + a + " " + b;
    case 1:
      return a + " " + b + " university";
    case 2:
      return a + " institute of " + b;
    case 3:
      return a + " " + b + " college";
    case 4:
      return a + " national laboratory of " + b;
    default:
      return a + " academy of " + b + " sciences";
  }
}

inline std::string title_case(std::string s) {
  bool start = true;
  for (char& c : s) {
    if (c == ' ') {
      start = true;
    } else {
      if (start && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      start = false;
    }
  }
  return s;
}

inline bool has_op(unsigned ops, VariantOp op) {
  return (ops & static_cast<unsigned>(op)) != 0;
}

// Perturbs a base name into one raw variant. Cleaning later reverses the
// cosmetic noise; abbreviations, typos and appended locations survive it.
// The per-class city word mirrors how affiliation strings usually attach
// the institution's location.
inline std::string synth_variant(const std::string& base,
                                 const std::string& city, unsigned ops,
                                 Rng& rng) {
  static constexpr const char* kSuffixes[] = {
      " usa",          " 1",
      ", dept. of physics", ", school of medicine",
      " (main campus)", ", po box 217"};
  std::vector<std::string> words;
  {
    std::size_t start = 0;
    while (start <= base.size()) {
      const std::size_t sp = base.find(' ', start);
      if (sp == std::string::npos) {
        words.push_back(base.substr(start));
        break;
      }
      words.push_back(base.substr(start, sp - start));
      start = sp + 1;
    }
  }
  if (has_op(ops, VariantOp::kAbbreviation) && rng.below(100) < 25) {
    // Shorten one long word: "university" -> "univ" or "u."
    std::vector<std::size_t> longw;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i].size() >= 6) longw.push_back(i);
    }
    if (!longw.empty()) {
      std::string& w = words[longw[rng.below(longw.size())]];
      w = rng.below(2) == 0 ? w.substr(0, 4) : (w.substr(0, 1) + ".");
    }
  }
  std::string v;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) v += ' ';
    v += words[i];
  }
  if (has_op(ops, VariantOp::kTypo) && rng.below(100) < 20) {
    const std::size_t pos = rng.below(v.size());
    switch (rng.below(3)) {
      case 0:  // substitute
        if (v[pos] != ' ') v[pos] = static_cast<char>('a' + rng.below(26));
        break;
      case 1:  // insert
        v.insert(v.begin() + static_cast<std::ptrdiff_t>(pos),
                 static_cast<char>('a' + rng.below(26)));
        break;
      default:  // delete
        if (v.size() > 4 && v[pos] != ' ')
          v.erase(v.begin() + static_cast<std::ptrdiff_t>(pos));
        break;
    }
  }
  if (has_op(ops, VariantOp::kSuffixAppend) && rng.below(100) < 60) {
    switch (rng.below(4)) {
      case 0:
        v += ", " + city;
        break;
      case 1:
        v += ", " + city + ", usa";
        break;
      default:
        v += kSuffixes[rng.below(std::size(kSuffixes))];
        break;
    }
    if (rng.below(100) < 15) v += kSuffixes[rng.below(std::size(kSuffixes))];
  }
  if (has_op(ops, VariantOp::kWhitespaceNoise) && rng.below(100) < 25) {
    const std::size_t pos = v.find(' ');
    if (pos != std::string::npos) {
      v.insert(pos, rng.below(2) == 0 ? "   " : "#N#  ");
    }
  }
  if (rng.below(100) < 30) v = title_case(v);
  return v;
}

}  // namespace detail

// Generates a long-tailed corpus: class at 1-based rank k receives
// max(1, round(total * k^-s / H)) raw records, H the normalizing sum.
// Pure function of the spec; repeated calls are byte-identical.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.class_count < 2) {
    throw parameter_error("synthetic corpus needs class_count >= 2");
  }
  if (!(spec.zipf_exponent > 0.0)) {
    throw parameter_error("zipf_exponent must be positive");
  }
  const std::size_t total =
      spec.total_records ? spec.total_records : 20 * spec.class_count;

  double harmonic = 0.0;
  for (std::size_t k = 1; k <= spec.class_count; ++k) {
    harmonic += std::pow(static_cast<double>(k), -spec.zipf_exponent);
  }

  SyntheticCorpus corpus;
  corpus.class_counts.resize(spec.class_count);
  Rng name_rng = substream(spec.seed, "synth/names");
  std::set<std::string> used_names;
  std::vector<std::string> base_names(spec.class_count);
  std::vector<std::string> cities(spec.class_count);
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    std::string base = detail::synth_base_name(name_rng);
    while (!used_names.insert(base).second) {
      base += " " + detail::synth_word(name_rng);
    }
    base_names[k] = base;
    cities[k] = detail::synth_word(name_rng);

    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "i%06zu", k + 1);
    corpus.institutions.push_back(
        {idbuf, detail::title_case(base), std::string()});
    // Occasionally a duplicate institution row under a second id, so the
    // id-dedup stage has real work to do.
    if (name_rng.below(40) == 0) {
      std::snprintf(idbuf, sizeof(idbuf), "d%06zu", k + 1);
      corpus.institutions.push_back(
          {idbuf, detail::title_case(base), std::string()});
    }
  }

  for (std::size_t k = 0; k < spec.class_count; ++k) {
    const double expected =
        static_cast<double>(total) *
        std::pow(static_cast<double>(k + 1), -spec.zipf_exponent) / harmonic;
    const std::size_t count =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(expected)));
    corpus.class_counts[k] = count;

    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "i%06zu", k + 1);
    Rng rng = substream(spec.seed, "synth/class/" + std::string(idbuf));
    for (std::size_t r = 0; r < count; ++r) {
      corpus.affiliations.push_back(
          {detail::synth_variant(base_names[k], cities[k], spec.variant_ops,
                                 rng),
           idbuf});
    }
  }
  return corpus;
}

}  // namespace lotnorm
