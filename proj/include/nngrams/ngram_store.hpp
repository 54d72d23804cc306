#ifndef NNGRAMS_NGRAM_STORE_HPP
#define NNGRAMS_NGRAM_STORE_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nngrams/common.hpp"
#include "nngrams/corpus.hpp"

namespace nngrams {

// Counts for all n-gram orders 1..max_order over a boundary-framed corpus.
// Keys are id sequences in text order. Every position of the framed
// sentence contributes a unigram event (<s> included, so padded count
// lookups resolve), and n-grams never cross sentence boundaries.
// Immutable once built; concurrent reads are safe.
class NGramStore {
 public:
  explicit NGramStore(int max_order);

  int max_order() const { return max_order_; }
  std::uint64_t total_tokens() const { return total_tokens_; }

  void add_sentence(const TokenizedSentence& sentence);

  // Shard counts merge associatively.
  void merge(const NGramStore& other);

  // Stored count, 0 if absent. Throws ValidationError when the length is
  // outside 1..max_order.
  std::uint64_t lookup(const IdSeq& gram) const;

  // All stored grams of one order, sorted by id sequence.
  std::vector<std::pair<IdSeq, std::uint64_t>> grams_of_order(int order) const;

  std::uint64_t distinct_grams(int order) const;

  // Text format: header `NGRAMSTORE v1 <max_order> <total_tokens>`, then
  // `<count> <id> <id> ...` lines sorted by order then id sequence.
  void save(const std::string& path) const;
  static NGramStore load(const std::string& path);

 private:
  int max_order_;
  std::uint64_t total_tokens_ = 0;
  std::unordered_map<IdSeq, std::uint64_t, IdSeqHash> counts_;
};

NGramStore count_ngrams(const std::vector<TokenizedSentence>& corpus,
                        int max_order);

// Raw count matrix for one prediction window, shape (K+1) x N row-major.
// `window` lists the current word first, then the history nearest-first.
// Row j holds the counts of the 1..N-grams ending at word j of the window;
// context needed beyond the window is treated as <s>. Flattened row-major
// this is the length-(K+1)N count feature vector.
std::vector<std::uint64_t> count_matrix(const NGramStore& store,
                                        const IdSeq& window, int n);

}  // namespace nngrams

#endif
