#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "swincap/decoder.hpp"

namespace swincap {

/// Lowercases and splits on anything outside [a-z0-9].
std::vector<std::string> split_words(const std::string& text);

/// Word/id bijection with the reserved ids 0..3 up front. Non-special words
/// are sorted, so the mapping depends only on the word set.
struct Vocabulary {
  std::vector<std::string> words;  // id -> word
  std::unordered_map<std::string, i64> index;

  static Vocabulary build(const std::vector<std::string>& texts);
  static Vocabulary from_words(std::vector<std::string> sorted_words);

  i64 size() const { return static_cast<i64>(words.size()); }
  i64 id(const std::string& word) const;  // unk when absent
  std::vector<i64> encode(const std::string& text) const;  // no bos/eos
  std::string decode(const std::vector<i64>& ids) const;   // skips specials
};

}  // namespace swincap
