#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lotnorm/cleaning.hpp"
#include "lotnorm/corpus.hpp"

namespace lotnorm {

// Character vocabulary: the 54 retained characters plus 4 special marks.
inline constexpr int kCharVocabSize = 58;
inline constexpr int kClsId = 54;
inline constexpr int kEosId = 55;
inline constexpr int kPadId = 56;
inline constexpr int kMaskId = 57;

inline constexpr int kMaxCharPositions = 256;
inline constexpr int kMaxWordPositions = 64;

// Character-level tokenization with character and word position tracks.
// The sequence is CLS + characters + EOS; the word position increments at
// each space, so a space belongs to the span of the word it introduces.
struct CharTokenization {
  std::vector<std::uint16_t> char_ids;
  std::vector<std::uint16_t> char_positions;
  std::vector<std::uint16_t> word_positions;

  std::size_t size() const { return char_ids.size(); }
};

inline CharTokenization tokenize_chars(const CleanedName& name) {
  // Cleaning bounds names well below the position capacities; truncate
  // anyway so CLS/EOS always fit.
  const std::size_t max_chars =
      static_cast<std::size_t>(kMaxCharPositions - 2);
  const std::size_t len = std::min(name.size(), max_chars);

  CharTokenization tok;
  tok.char_ids.reserve(len + 2);
  tok.char_positions.reserve(len + 2);
  tok.word_positions.reserve(len + 2);

  tok.char_ids.push_back(kClsId);
  tok.char_positions.push_back(0);
  tok.word_positions.push_back(0);

  std::uint16_t word = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const int sym = retained_char_index(name[i]);
    if (name[i] == ' ' && word + 1 < kMaxWordPositions) ++word;
    tok.char_ids.push_back(static_cast<std::uint16_t>(sym));
    tok.char_positions.push_back(static_cast<std::uint16_t>(i + 1));
    tok.word_positions.push_back(word);
  }

  tok.char_ids.push_back(kEosId);
  tok.char_positions.push_back(static_cast<std::uint16_t>(len + 1));
  tok.word_positions.push_back(word);
  return tok;
}

// Inverse of tokenize_chars for the character track: drops CLS/EOS and maps
// ids back to characters.
inline std::string detokenize_chars(const CharTokenization& tok) {
  std::string out;
  for (const std::uint16_t id : tok.char_ids) {
    if (id < kRetainedChars.size()) out.push_back(kRetainedChars[id]);
  }
  return out;
}

}  // namespace lotnorm
