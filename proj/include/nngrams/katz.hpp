#ifndef NNGRAMS_KATZ_HPP
#define NNGRAMS_KATZ_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "nngrams/common.hpp"
#include "nngrams/ngram_store.hpp"
#include "nngrams/vocabulary.hpp"

namespace nngrams {

// Katz-backoff n-gram model.
//
// Seen n-grams carry Good-Turing-discounted relative frequencies (raw above
// the cutoff); the reserved mass goes to unseen continuations through the
// backoff weight alpha of the history, and the chain terminates in a
// floor-smoothed unigram so every conditional is strictly positive.
// Conditionals sum to exactly 1 over the vocabulary for every history.
//
// Histories passed to the query API follow the codebase convention:
// nearest previous word first. Internally grams are keyed in text order.
class KatzLM {
 public:
  int order() const { return order_; }
  WordId vocab_size() const { return vocab_size_; }
  int gt_cutoff() const { return gt_cutoff_; }

  // P(word | history). `history` must carry at least order-1 ids,
  // nearest-first (callers pad with <s>); entries beyond order-1 are
  // ignored. Strictly positive.
  double cond_prob(WordId word, const IdSeq& history) const;

  // The full conditional over the vocabulary for one history.
  std::vector<double> conditional_distribution(const IdSeq& history) const;

  // Draws a word from the exact conditional.
  WordId sample_conditional(const IdSeq& history, Rng& rng) const;

  // Stored histories of one level (2..order), text order, for audits.
  std::vector<IdSeq> stored_histories(int level) const;

  double backoff_weight(int level, const IdSeq& history_text) const;

  // ARPA text export (log10 probabilities and backoffs).
  void export_arpa(const std::string& path, const Vocabulary& vocab) const;

  friend KatzLM estimate_katz(const NGramStore& store, WordId vocab_size,
                              int order, int gt_cutoff);

 private:
  struct Level {
    // gram (text order, length = level) -> conditional probability
    std::unordered_map<IdSeq, double, IdSeqHash> probs;
    // history (text order, length = level-1) -> backoff weight
    std::unordered_map<IdSeq, double, IdSeqHash> alphas;
  };

  double cond_level(int level, WordId word, const WordId* hist_text,
                    int len) const;

  int order_ = 1;
  WordId vocab_size_ = 0;
  int gt_cutoff_ = 5;
  std::vector<double> unigram_;    // floored, normalized
  std::vector<Level> levels_;      // index l -> level l+2
};

// Standard Katz estimation. Good-Turing discounts apply to counts
// 1..gt_cutoff; when the count-of-count table of an order is degenerate the
// order falls back to absolute discounting with D = 0.5. Unseen words get
// unigram mass eps_u = 1/(V*total_tokens + V), renormalized. When a
// history's seen continuations would leave no leftover mass, the seen
// probabilities are rescaled so exactly kLeftoverFloor remains for backoff,
// keeping every conditional positive.
inline constexpr double kKatzLeftoverFloor = 1e-6;

KatzLM estimate_katz(const NGramStore& store, WordId vocab_size, int order,
                     int gt_cutoff = 5);

}  // namespace nngrams

#endif
