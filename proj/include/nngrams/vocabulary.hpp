#ifndef NNGRAMS_VOCABULARY_HPP
#define NNGRAMS_VOCABULARY_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "nngrams/common.hpp"

namespace nngrams {

// Word <-> id table. Ids 0..2 are fixed to <s>, </s>, <unk>; content words
// follow in descending-frequency order. Immutable after construction and
// safe for concurrent reads.
class Vocabulary {
 public:
  static constexpr WordId kBos = 0;  // <s>, context only, never predicted
  static constexpr WordId kEos = 1;  // </s>, a predicted token
  static constexpr WordId kUnk = 2;

  static const std::string& bos_token();
  static const std::string& eos_token();
  static const std::string& unk_token();

  Vocabulary();

  // Appends a content word. Throws ValidationError on duplicates.
  WordId add_word(const std::string& word);

  // Id for `word`, or kUnk when absent.
  WordId id_or_unk(const std::string& word) const;

  // True id lookup; returns false when absent.
  bool find(const std::string& word, WordId* id) const;

  const std::string& word(WordId id) const;
  WordId size() const { return static_cast<WordId>(id_to_word_.size()); }

  // One word per line, line number = id, specials on lines 0-2.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::unordered_map<std::string, WordId> word_to_id_;
  std::vector<std::string> id_to_word_;
};

// Most frequent words meeting min_count, truncated to max_size entries
// total (specials included). Frequency ties break by ascending word order.
// Throws DataError on unreadable files, ValidationError when max_size < 3.
Vocabulary build_vocabulary(const std::string& corpus_path, WordId max_size,
                            std::uint64_t min_count);

// Same construction from a pre-counted frequency map (shard merging path).
Vocabulary build_vocabulary_from_counts(
    const std::unordered_map<std::string, std::uint64_t>& freq,
    WordId max_size, std::uint64_t min_count);

// Shard frequency maps merge associatively: counts add.
void merge_frequency_maps(std::unordered_map<std::string, std::uint64_t>* into,
                          const std::unordered_map<std::string, std::uint64_t>& from);

std::unordered_map<std::string, std::uint64_t> count_word_frequencies(
    const std::string& corpus_path);

}  // namespace nngrams

#endif
