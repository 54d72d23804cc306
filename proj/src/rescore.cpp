#include "nngrams/rescore.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nngrams/corpus.hpp"

namespace nngrams {

void RescoreConfig::validate() const {
  if (lambda < 0.0 || lambda > 1.0) {
    throw ValidationError("rescore.lambda must lie in [0, 1]");
  }
  if (model != "katz6" && model != "nngrams") {
    throw ValidationError("rescore.model must be katz6 or nngrams");
  }
  if (nbest < 1) {
    throw ValidationError("rescore.n must be positive");
  }
}

namespace {

// Framed id sequence for a hypothesis; OOV words map to <unk>.
IdSeq frame_ids(const Vocabulary& vocab, const std::vector<std::string>& words) {
  IdSeq ids;
  ids.reserve(words.size() + 2);
  ids.push_back(Vocabulary::kBos);
  for (const auto& w : words) {
    ids.push_back(vocab.id_or_unk(w));
  }
  ids.push_back(Vocabulary::kEos);
  return ids;
}

template <class ScoreFn>
double sum_window_scores(const ModelConfig& config, const NGramStore& store,
                         const IdSeq& ids, const ScoreFn& score) {
  IdSeq window(static_cast<std::size_t>(config.k_history) + 1);
  double total = 0.0;
  for (std::size_t pos = 1; pos < ids.size(); ++pos) {
    window[0] = ids[pos];
    for (int j = 1; j <= config.k_history; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos) - j;
      window[static_cast<std::size_t>(j)] =
          src >= 0 ? ids[static_cast<std::size_t>(src)] : Vocabulary::kBos;
    }
    total += score(make_feature(store, window, config));
  }
  return total;
}

}  // namespace

double score_hypothesis_nngrams(const ModelParams& params,
                                const NGramStore& store,
                                const Vocabulary& vocab,
                                const std::vector<std::string>& words) {
  if (vocab.size() != params.config.vocab_size) {
    throw ValidationError("model and vocabulary sizes disagree");
  }
  return sum_window_scores(params.config, store, frame_ids(vocab, words),
                           [&](const FeatureVector& feat) {
                             return forward(params, feat);
                           });
}

double score_hypothesis_nngrams_f32(const ScorerF32& scorer,
                                    const ModelConfig& config,
                                    const NGramStore& store,
                                    const Vocabulary& vocab,
                                    const std::vector<std::string>& words) {
  return sum_window_scores(config, store, frame_ids(vocab, words),
                           [&](const FeatureVector& feat) {
                             return scorer.score(feat);
                           });
}

double score_hypothesis_katz(const KatzLM& lm, const Vocabulary& vocab,
                             const std::vector<std::string>& words) {
  const IdSeq ids = frame_ids(vocab, words);
  const int hist_len = lm.order() - 1;
  double total = 0.0;
  IdSeq history(static_cast<std::size_t>(std::max(hist_len, 1)));
  for (std::size_t pos = 1; pos < ids.size(); ++pos) {
    history.assign(static_cast<std::size_t>(std::max(hist_len, 1)),
                   Vocabulary::kBos);
    for (int j = 0; j < hist_len; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos) - 1 - j;
      if (src >= 0) {
        history[static_cast<std::size_t>(j)] = ids[static_cast<std::size_t>(src)];
      }
    }
    total += std::log(lm.cond_prob(ids[pos], history));
  }
  return total;
}

std::vector<Hypothesis> rescore(std::vector<Hypothesis> nbest, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw ValidationError("lambda must lie in [0, 1]");
  }
  for (auto& h : nbest) {
    h.combined = (1.0 - lambda) * h.base_score + lambda * h.rescore_lm;
  }
  std::stable_sort(nbest.begin(), nbest.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     return a.combined > b.combined;
                   });
  return nbest;
}

WerCounts wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis) {
  const std::size_t n = reference.size(), m = hypothesis.size();
  WerCounts counts;
  counts.reference_len = n;
  if (n == 0 && m > 0) {
    counts.rate_defined = false;
    counts.insertions = m;
    return counts;
  }

  // dp[i][j] = min edits aligning reference[0..i) to hypothesis[0..j).
  std::vector<std::vector<std::uint32_t>> dp(n + 1,
                                             std::vector<std::uint32_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t sub =
          dp[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      dp[i][j] = std::min({sub, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
    }
  }

  // Backtrace, preferring diagonal moves (match/substitution) on ties.
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const std::uint32_t sub_cost =
          reference[i - 1] == hypothesis[j - 1] ? 0 : 1;
      if (dp[i][j] == dp[i - 1][j - 1] + sub_cost) {
        counts.substitutions += sub_cost;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      ++counts.deletions;
      --i;
      continue;
    }
    ++counts.insertions;
    --j;
  }
  return counts;
}

EvalReport evaluate(const std::vector<Utterance>& testset,
                    const HypothesisScorer& scorer, double lambda) {
  EvalReport report;
  for (const Utterance& utt : testset) {
    WerCounts counts;
    if (utt.nbest.empty()) {
      counts.reference_len = utt.reference.size();
      counts.deletions = utt.reference.size();
      ++report.missing_nbest;
      report.warnings.push_back("missing n-best for utterance " + utt.utt_id +
                                ": counted as deletions");
    } else {
      std::vector<Hypothesis> scored = utt.nbest;
      for (auto& h : scored) {
        h.rescore_lm = scorer(h.words);
      }
      const std::vector<Hypothesis> ranked = rescore(std::move(scored), lambda);
      counts = wer(utt.reference, ranked.front().words);
    }
    report.corpus.substitutions += counts.substitutions;
    report.corpus.deletions += counts.deletions;
    report.corpus.insertions += counts.insertions;
    report.corpus.reference_len += counts.reference_len;
    report.per_utterance.emplace_back(utt.utt_id, counts);
  }
  return report;
}

std::string format_report_line(const WerCounts& counts) {
  std::ostringstream out;
  out.precision(6);
  out << "WER=" << counts.rate() << " S=" << counts.substitutions
      << " D=" << counts.deletions << " I=" << counts.insertions
      << " N=" << counts.reference_len;
  return out.str();
}

}  // namespace nngrams
