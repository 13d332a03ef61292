#include "swincap/vocab.hpp"

#include <algorithm>
#include <set>

#include "swincap/common.hpp"

namespace swincap {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : text) {
    char c = raw;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::set<std::string> seen;
  for (const std::string& t : texts)
    for (std::string& w : split_words(t)) seen.insert(std::move(w));
  return from_words({seen.begin(), seen.end()});
}

Vocabulary Vocabulary::from_words(std::vector<std::string> sorted_words) {
  if (!std::is_sorted(sorted_words.begin(), sorted_words.end()))
    throw ConfigError("vocabulary words must arrive sorted");
  Vocabulary v;
  v.words = {"<bos>", "<eos>", "<pad>", "<unk>"};
  v.words.insert(v.words.end(), sorted_words.begin(), sorted_words.end());
  for (size_t i = 0; i < v.words.size(); ++i) {
    if (i >= 4 && v.words[i] == v.words[i - 1])
      throw ConfigError("duplicate vocabulary word: " + v.words[i]);
    v.index.emplace(v.words[i], static_cast<i64>(i));
  }
  return v;
}

i64 Vocabulary::id(const std::string& word) const {
  auto it = index.find(word);
  return it == index.end() ? kUnk : it->second;
}

std::vector<i64> Vocabulary::encode(const std::string& text) const {
  std::vector<i64> ids;
  for (const std::string& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocabulary::decode(const std::vector<i64>& ids) const {
  std::string out;
  for (i64 id : ids) {
    if (id < 0 || id >= size()) throw ShapeError("decode: vocab id out of range");
    if (id < 4) continue;
    if (!out.empty()) out.push_back(' ');
    out += words[static_cast<size_t>(id)];
  }
  return out;
}

}  // namespace swincap
