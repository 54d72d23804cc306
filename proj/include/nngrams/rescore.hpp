#ifndef NNGRAMS_RESCORE_HPP
#define NNGRAMS_RESCORE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nngrams/katz.hpp"
#include "nngrams/model.hpp"
#include "nngrams/vocabulary.hpp"

namespace nngrams {

struct Hypothesis {
  std::vector<std::string> words;
  double base_score = 0.0;     // first-pass total log score
  double rescore_lm = 0.0;     // log score under the rescoring model
  double combined = 0.0;
};

struct RescoreConfig {
  double lambda = 0.5;                  // weight on the rescoring model
  std::string model = "nngrams";        // katz6 | nngrams
  int nbest = 150;
  void validate() const;
};

// Sum of NN-grams forward scores over every position of the sentence,
// </s> included, histories padded with <s>.
double score_hypothesis_nngrams(const ModelParams& params,
                                const NGramStore& store,
                                const Vocabulary& vocab,
                                const std::vector<std::string>& words);

// Same with the single-precision scorer.
double score_hypothesis_nngrams_f32(const ScorerF32& scorer,
                                    const ModelConfig& config,
                                    const NGramStore& store,
                                    const Vocabulary& vocab,
                                    const std::vector<std::string>& words);

// Sum of ln Katz conditionals over every position, </s> included.
double score_hypothesis_katz(const KatzLM& lm, const Vocabulary& vocab,
                             const std::vector<std::string>& words);

// combined = (1-lambda)*base + lambda*rescore_lm; stable descending sort,
// so score ties keep the first-pass order.
std::vector<Hypothesis> rescore(std::vector<Hypothesis> nbest, double lambda);

struct WerCounts {
  std::uint64_t substitutions = 0;
  std::uint64_t deletions = 0;
  std::uint64_t insertions = 0;
  std::uint64_t reference_len = 0;
  bool rate_defined = true;  // false for empty reference vs non-empty hyp

  std::uint64_t errors() const {
    return substitutions + deletions + insertions;
  }
  double rate() const {
    return reference_len == 0
               ? 0.0
               : 100.0 * static_cast<double>(errors()) /
                     static_cast<double>(reference_len);
  }
};

// Minimum-edit-distance alignment with unit costs; alignment ties prefer
// substitutions over insert+delete pairs.
WerCounts wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis);

struct Utterance {
  std::string utt_id;
  std::vector<std::string> reference;
  std::vector<Hypothesis> nbest;  // empty when the n-best list is missing
};

struct EvalReport {
  WerCounts corpus;             // accumulated S,D,I over total ref words
  std::size_t missing_nbest = 0;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, WerCounts>> per_utterance;
};

// Rescoring model hook: fills rescore_lm for one hypothesis.
using HypothesisScorer =
    std::function<double(const std::vector<std::string>&)>;

// Rescores every utterance's n-best with the scorer at the given lambda,
// takes the top hypothesis, and accumulates corpus-level WER (total errors
// over total reference words). Missing n-best lists count their reference
// as deletions and emit a warning.
EvalReport evaluate(const std::vector<Utterance>& testset,
                    const HypothesisScorer& scorer, double lambda);

std::string format_report_line(const WerCounts& counts);

}  // namespace nngrams

#endif
