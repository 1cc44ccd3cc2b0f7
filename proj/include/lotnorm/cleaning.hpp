#pragma once

#include <array>
#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lotnorm/corpus.hpp"

namespace lotnorm {

// The 54 characters a cleaned name may contain: 26 lowercase letters,
// 10 digits, 1 space and 17 punctuation marks. Indices into this string
// double as symbol ids for the tokenizer and the substring automaton.
inline constexpr std::string_view kRetainedChars =
    "abcdefghijklmnopqrstuvwxyz0123456789 \"#&'()*,-.:;@\\_{}";

inline constexpr int kRetainedCharCount = 54;
static_assert(kRetainedChars.size() == kRetainedCharCount);

inline constexpr int kMaxLetters = 254;
inline constexpr int kMinLetters = 2;
inline constexpr int kMaxWords = 63;

namespace detail {

// Symbol id per byte, -1 for bytes outside the retained set.
inline const std::array<std::int8_t, 256>& retained_index_table() {
  static const std::array<std::int8_t, 256> table = [] {
    std::array<std::int8_t, 256> t{};
    t.fill(-1);
    for (std::size_t i = 0; i < kRetainedChars.size(); ++i) {
      t[static_cast<unsigned char>(kRetainedChars[i])] =
          static_cast<std::int8_t>(i);
    }
    return t;
  }();
  return table;
}

struct FoldEntry {
  std::uint32_t cp;
  const char* ascii;
};

// ASCII folding of accented and typographic characters, derived from the
// Unicode NFKD decompositions of Latin-1 Supplement, Latin Extended-A/B
// and General Punctuation, with combining marks stripped. Code points not
// listed here fold to a space downstream.
inline const FoldEntry* fold_table(std::size_t& count) {
  static const FoldEntry table[] = {
#include "lotnorm/detail/ascii_fold_table.inc"
  };
  count = sizeof(table) / sizeof(table[0]);
  return table;
}

inline const char* fold_codepoint(std::uint32_t cp) {
  std::size_t n = 0;
  const FoldEntry* t = fold_table(n);
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (t[mid].cp < cp) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < n && t[lo].cp == cp) return t[lo].ascii;
  return nullptr;
}

// Decodes one UTF-8 code point starting at i; advances i past it.
// Malformed sequences consume a single byte and yield U+FFFD.
inline std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra = 0;
  std::uint32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + extra >= s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const unsigned char b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += extra + 1;
  return cp;
}

}  // namespace detail

inline bool is_retained_char(char c) {
  return detail::retained_index_table()[static_cast<unsigned char>(c)] >= 0;
}

// Symbol id in [0, 54) for a retained character, -1 otherwise.
inline int retained_char_index(char c) {
  return detail::retained_index_table()[static_cast<unsigned char>(c)];
}

enum class RejectReason {
  kTooFewLetters,
  kTooManyLetters,
  kTooManyWords,
};

inline const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::kTooFewLetters:
      return "too-few-letters";
    case RejectReason::kTooManyLetters:
      return "too-many-letters";
    case RejectReason::kTooManyWords:
      return "too-many-words";
  }
  return "unknown";
}

struct NormalizeResult {
  std::optional<CleanedName> name;
  RejectReason reason = RejectReason::kTooFewLetters;

  bool accepted() const { return name.has_value(); }
  const std::string& text() const { return *name; }
};

// Normalizes a raw name. Applied in order: ASCII-fold accented characters,
// lowercase, non-printable ASCII to space, strip HTML tags, map characters
// outside the retained set to space, collapse space runs, trim. Rejection
// (too few/many letters, too many words) is a typed outcome, not a fault.
inline NormalizeResult normalize_name(std::string_view raw) {
  std::string folded;
  folded.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    const std::uint32_t cp = detail::decode_utf8(raw, i);
    if (cp < 0x80) {
      folded.push_back(static_cast<char>(cp));
    } else if (const char* ascii = detail::fold_codepoint(cp)) {
      folded.append(ascii);
    } else {
      folded.push_back(' ');
    }
  }

  for (char& c : folded) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  for (char& c : folded) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u < 0x20 || u == 0x7F) c = ' ';
  }

  // Strip maximal <...> spans (no nesting; scraped names only carry simple
  // tags). An unclosed '<' is left for the charset filter below.
  std::string untagged;
  untagged.reserve(folded.size());
  for (std::size_t i = 0; i < folded.size();) {
    if (folded[i] == '<') {
      const std::size_t close = folded.find('>', i + 1);
      if (close != std::string::npos) {
        untagged.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    untagged.push_back(folded[i]);
    ++i;
  }

  std::string out;
  out.reserve(untagged.size());
  int letters = 0;
  for (char c : untagged) {
    if (!is_retained_char(c)) c = ' ';
    if (c == ' ') {
      if (out.empty() || out.back() == ' ') continue;
      out.push_back(' ');
    } else {
      if (c >= 'a' && c <= 'z') ++letters;
      out.push_back(c);
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();

  NormalizeResult res;
  if (letters < kMinLetters) {
    res.reason = RejectReason::kTooFewLetters;
    return res;
  }
  if (letters > kMaxLetters) {
    res.reason = RejectReason::kTooManyLetters;
    return res;
  }
  int words = out.empty() ? 0 : 1;
  for (char c : out) {
    if (c == ' ') ++words;
  }
  if (words > kMaxWords) {
    res.reason = RejectReason::kTooManyWords;
    return res;
  }
  res.name = std::move(out);
  return res;
}

// True iff `s` satisfies every CleanedName invariant.
inline bool satisfies_cleaned_invariants(std::string_view s) {
  if (s.empty() || s.front() == ' ' || s.back() == ' ') return false;
  int letters = 0;
  int words = 1;
  char prev = '\0';
  for (char c : s) {
    if (!is_retained_char(c)) return false;
    if (c == ' ') {
      if (prev == ' ') return false;
      ++words;
    } else if (c >= 'a' && c <= 'z') {
      ++letters;
    }
    prev = c;
  }
  return letters >= kMinLetters && letters <= kMaxLetters &&
         words <= kMaxWords;
}

// Redirect from original institution ids to canonical ids. Identity for
// unknown ids; idempotent by construction.
class IdRedirect {
 public:
  IdRedirect() = default;

  void add(const ClassId& from, const ClassId& to) {
    if (from != to) mapping_[from] = to;
  }

  const ClassId& apply(const ClassId& id) const {
    const auto it = mapping_.find(id);
    return it == mapping_.end() ? id : it->second;
  }

  std::size_t redirected_count() const { return mapping_.size(); }

  const std::map<ClassId, ClassId>& mapping() const { return mapping_; }

 private:
  std::map<ClassId, ClassId> mapping_;
};

struct DedupResult {
  IdRedirect redirect;
  // Institutions whose standard name was rejected by normalize_name.
  std::vector<std::pair<ClassId, RejectReason>> rejected;
  // Canonical id -> normalized standard name, for every retained group.
  std::map<ClassId, std::string> canonical_names;
};

// Groups institution ids by normalized standard name and redirects every
// group member to its lexicographically smallest id.
inline DedupResult dedup_institution_ids(
    const std::vector<InstitutionRecord>& records) {
  DedupResult result;
  std::map<std::string, std::vector<ClassId>> groups;
  for (const auto& rec : records) {
    const NormalizeResult norm = normalize_name(rec.standard_name);
    if (!norm.accepted()) {
      result.rejected.emplace_back(rec.institution_id, norm.reason);
      continue;
    }
    groups[norm.text()].push_back(rec.institution_id);
  }
  for (auto& [name, ids] : groups) {
    const ClassId canonical = *std::min_element(ids.begin(), ids.end());
    result.canonical_names[canonical] = name;
    for (const auto& id : ids) {
      result.redirect.add(id, canonical);
    }
  }
  return result;
}

}  // namespace lotnorm
