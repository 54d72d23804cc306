#ifndef NNGRAMS_NOISE_HPP
#define NNGRAMS_NOISE_HPP

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nngrams/common.hpp"
#include "nngrams/katz.hpp"
#include "nngrams/lattice.hpp"
#include "nngrams/vocabulary.hpp"

namespace nngrams {

struct NoiseSample {
  WordId word = 0;
  double log_prob = 0.0;  // natural log of P_noise(word | context)
};

// Noise attached to one training token: f samples plus the noise
// log-probability of the data word itself (the logit needs both).
struct NoiseDraw {
  std::vector<NoiseSample> samples;
  double data_log_noise_prob = 0.0;
};

// Supplies noise for the token at (utterance, position) predicting `word`
// after `history` (nearest-first). nullopt means the token yields no
// training example and the caller skips it.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual std::optional<NoiseDraw> draw(const std::string& utt_id,
                                        std::size_t position, WordId word,
                                        const IdSeq& history, int f,
                                        Rng& rng) = 0;
};

// f independent draws from the Katz conditional, with replacement, each
// paired with its exact conditional log-probability.
std::vector<NoiseSample> text_noise(const KatzLM& lm, const IdSeq& history,
                                    int f, Rng& rng);

// Text noise with a per-history distribution cache.
class TextNoiseSource : public NoiseSource {
 public:
  explicit TextNoiseSource(const KatzLM& lm) : lm_(lm) {}

  std::optional<NoiseDraw> draw(const std::string& utt_id,
                                std::size_t position, WordId word,
                                const IdSeq& history, int f,
                                Rng& rng) override;

 private:
  struct Dist {
    std::vector<double> log_prob;
    std::vector<double> cdf;
  };
  const Dist& distribution(const IdSeq& history);

  const KatzLM& lm_;
  std::unordered_map<IdSeq, Dist, IdSeqHash> cache_;
};

// Word-level confusions extracted from pinched lattices. Positions map
// 1:1 onto 1-best words that survived both exclusion rules; alternative
// posteriors are renormalized over the alternatives (1-best mass removed).
class SpeechNoiseTable {
 public:
  struct Alternative {
    std::string word;
    WordId id = Vocabulary::kUnk;
    double posterior = 0.0;  // renormalized over alternatives
  };
  struct Position {
    std::string best_word;
    WordId best_id = Vocabulary::kUnk;
    double best_posterior = 0.0;  // original within-segment posterior
    std::vector<Alternative> alternatives;
  };

  void add(const std::string& utt_id, std::size_t position, Position pos);
  const Position* find(const std::string& utt_id, std::size_t position) const;
  std::size_t size() const { return entries_.size(); }
  std::uint64_t skipped_lattices() const { return skipped_lattices_; }
  void note_skipped_lattice() { ++skipped_lattices_; }

  // Text lines `<utt_id> <position> <1best_word>:<posterior>
  // <alt_word>:<posterior> ...`; the 1-best field carries its original
  // posterior so reloaded tables keep the data-word noise probability.
  void save(const std::string& path) const;
  static SpeechNoiseTable load(const std::string& path,
                               const Vocabulary& vocab);

  const std::map<std::pair<std::string, std::size_t>, Position>& entries()
      const {
    return entries_;
  }

 private:
  std::map<std::pair<std::string, std::size_t>, Position> entries_;
  std::uint64_t skipped_lattices_ = 0;
};

// Runs pinching over each lattice whose 1-best confidence (geometric mean
// of 1-best edge posteriors) meets the threshold, drops excluded
// positions, and renormalizes the surviving alternatives. Lattices below
// the threshold are skipped and counted.
SpeechNoiseTable build_speech_noise(
    const std::vector<std::pair<std::string, Lattice>>& lattices,
    double confidence_threshold, const Vocabulary& vocab);

// f draws from the position's alternative distribution; nullopt when the
// position is absent or when every draw collides with the data word
// (100 attempts), meaning the caller skips the token.
std::optional<std::vector<NoiseSample>> speech_noise(
    const SpeechNoiseTable& table, const std::string& utt_id,
    std::size_t position, int f, Rng& rng);

class SpeechNoiseSource : public NoiseSource {
 public:
  explicit SpeechNoiseSource(const SpeechNoiseTable& table) : table_(table) {}

  std::optional<NoiseDraw> draw(const std::string& utt_id,
                                std::size_t position, WordId word,
                                const IdSeq& history, int f,
                                Rng& rng) override;

 private:
  const SpeechNoiseTable& table_;
};

// Data-word noise probability floor for speech noise.
inline constexpr double kSpeechDataProbFloor = 1e-6;

}  // namespace nngrams

#endif
