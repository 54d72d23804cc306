#include "nngrams/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace nngrams {

const std::string& Vocabulary::bos_token() {
  static const std::string t = "<s>";
  return t;
}
const std::string& Vocabulary::eos_token() {
  static const std::string t = "</s>";
  return t;
}
const std::string& Vocabulary::unk_token() {
  static const std::string t = "<unk>";
  return t;
}

Vocabulary::Vocabulary() {
  id_to_word_ = {bos_token(), eos_token(), unk_token()};
  for (WordId i = 0; i < 3; ++i) {
    word_to_id_[id_to_word_[i]] = i;
  }
}

WordId Vocabulary::add_word(const std::string& word) {
  auto [it, inserted] = word_to_id_.emplace(word, size());
  if (!inserted) {
    throw ValidationError("duplicate vocabulary word: " + word);
  }
  id_to_word_.push_back(word);
  return it->second;
}

WordId Vocabulary::id_or_unk(const std::string& word) const {
  auto it = word_to_id_.find(word);
  return it == word_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::find(const std::string& word, WordId* id) const {
  auto it = word_to_id_.find(word);
  if (it == word_to_id_.end()) {
    return false;
  }
  *id = it->second;
  return true;
}

const std::string& Vocabulary::word(WordId id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("word id out of range: " + std::to_string(id));
  }
  return id_to_word_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ostringstream out;
  for (const auto& w : id_to_word_) {
    out << w << '\n';
  }
  atomic_write_file(path, out.str());
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open vocabulary file: " + path);
  }
  std::string line;
  std::vector<std::string> words;
  while (std::getline(in, line)) {
    words.push_back(line);
  }
  if (words.size() < 3 || words[0] != bos_token() || words[1] != eos_token() ||
      words[2] != unk_token()) {
    throw DataError("vocabulary file missing special tokens on lines 0-2: " + path);
  }
  Vocabulary vocab;
  for (std::size_t i = 3; i < words.size(); ++i) {
    vocab.add_word(words[i]);
  }
  return vocab;
}

void merge_frequency_maps(std::unordered_map<std::string, std::uint64_t>* into,
                          const std::unordered_map<std::string, std::uint64_t>& from) {
  for (const auto& [word, count] : from) {
    (*into)[word] += count;
  }
}

std::unordered_map<std::string, std::uint64_t> count_word_frequencies(
    const std::string& corpus_path) {
  std::ifstream in(corpus_path);
  if (!in) {
    throw DataError("cannot open corpus file: " + corpus_path);
  }
  std::unordered_map<std::string, std::uint64_t> freq;
  std::string line, tok;
  while (std::getline(in, line)) {
    std::istringstream iss(line);
    while (iss >> tok) {
      ++freq[tok];
    }
  }
  return freq;
}

Vocabulary build_vocabulary_from_counts(
    const std::unordered_map<std::string, std::uint64_t>& freq,
    WordId max_size, std::uint64_t min_count) {
  if (max_size < 3) {
    throw ValidationError("max_size must be at least 3 to hold special tokens");
  }
  std::vector<std::pair<std::string, std::uint64_t>> items;
  items.reserve(freq.size());
  for (const auto& [word, count] : freq) {
    if (count >= min_count && count > 0) {
      items.emplace_back(word, count);
    }
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (const auto& [word, count] : items) {
    if (vocab.size() >= max_size) {
      break;
    }
    // Literal special tokens in the text collapse onto the built-in ids.
    WordId existing;
    if (vocab.find(word, &existing)) {
      continue;
    }
    vocab.add_word(word);
  }
  return vocab;
}

Vocabulary build_vocabulary(const std::string& corpus_path, WordId max_size,
                            std::uint64_t min_count) {
  return build_vocabulary_from_counts(count_word_frequencies(corpus_path),
                                      max_size, min_count);
}

}  // namespace nngrams
