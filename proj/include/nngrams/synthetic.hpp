#ifndef NNGRAMS_SYNTHETIC_HPP
#define NNGRAMS_SYNTHETIC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nngrams/corpus.hpp"
#include "nngrams/model.hpp"
#include "nngrams/training.hpp"

namespace nngrams {

// Ground-truth bigram generator over a small closed vocabulary. Histories
// are <s> plus the content words; predicted tokens are the content words
// plus </s>. All conditionals are strictly positive.
class BigramWorld {
 public:
  BigramWorld(int num_words, std::uint64_t seed);

  const Vocabulary& vocab() const { return vocab_; }
  int num_words() const { return num_words_; }

  double cond_prob(WordId word, WordId history) const;
  double log_cond_prob(WordId word, WordId history) const;

  TokenizedSentence sample_sentence(Rng& rng, std::size_t max_len = 50) const;
  std::vector<TokenizedSentence> sample_corpus(std::size_t n, Rng& rng) const;

  // All scored (history, word) pairs: history in {<s>, words},
  // word in {words, </s>}.
  std::vector<std::pair<WordId, WordId>> eval_pairs() const;

 private:
  int num_words_;
  Vocabulary vocab_;
  Eigen::MatrixXd trans_;  // row: history id, col: word id (dense V x V, zero rows for </s>, <unk>)
};

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct SyntheticEvalConfig {
  std::size_t sentences = 200000;
  int num_words = 5;
  int f = 25;
  InputMode mode = InputMode::kFull;
  std::int64_t steps = 2500;
  double lr = 0.05;
  int batch_size = 200;
  std::uint64_t seed = 0;
  std::uint64_t world_seed = 12345;
};

struct SyntheticEvalResult {
  double spearman = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::int64_t steps = 0;
  std::size_t pairs = 0;
};

// Generates a corpus from the bigram world, trains NN-grams against text
// noise from a Katz bigram fit of the same corpus, and reports the
// Spearman correlation between model scores and the true log-conditionals
// over all (history, word) pairs.
SyntheticEvalResult run_synthetic_eval(const SyntheticEvalConfig& config);

}  // namespace nngrams

#endif
