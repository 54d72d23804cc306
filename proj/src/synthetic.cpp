#include "nngrams/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nngrams/katz.hpp"
#include "nngrams/noise.hpp"

namespace nngrams {

BigramWorld::BigramWorld(int num_words, std::uint64_t seed)
    : num_words_(num_words) {
  if (num_words < 2) {
    throw ValidationError("bigram world needs at least 2 words");
  }
  for (int i = 1; i <= num_words; ++i) {
    vocab_.add_word("w" + std::to_string(i));
  }
  const WordId v = vocab_.size();
  trans_ = Eigen::MatrixXd::Zero(v, v);
  Rng rng(seed);
  auto fill_row = [&](WordId h) {
    double total = 0.0;
    // Content-word weights plus a solid </s> share keeps sentences short.
    for (int i = 0; i < num_words_; ++i) {
      const double w = rng.uniform(0.1, 1.0);
      trans_(h, 3 + i) = w;
      total += w;
    }
    const double eos = rng.uniform(0.2, 0.6) * total;
    trans_(h, Vocabulary::kEos) = eos;
    total += eos;
    trans_.row(h) /= total;
  };
  fill_row(Vocabulary::kBos);
  for (int i = 0; i < num_words_; ++i) {
    fill_row(3 + i);
  }
}

double BigramWorld::cond_prob(WordId word, WordId history) const {
  return trans_(history, word);
}

double BigramWorld::log_cond_prob(WordId word, WordId history) const {
  return std::log(trans_(history, word));
}

TokenizedSentence BigramWorld::sample_sentence(Rng& rng,
                                               std::size_t max_len) const {
  TokenizedSentence sent;
  sent.ids.push_back(Vocabulary::kBos);
  WordId h = Vocabulary::kBos;
  while (sent.ids.size() < max_len + 1) {
    std::vector<double> cdf(static_cast<std::size_t>(vocab_.size()));
    double acc = 0.0;
    for (WordId w = 0; w < vocab_.size(); ++w) {
      acc += trans_(h, w);
      cdf[static_cast<std::size_t>(w)] = acc;
    }
    const auto w = static_cast<WordId>(rng.categorical_cdf(cdf));
    sent.ids.push_back(w);
    if (w == Vocabulary::kEos) {
      return sent;
    }
    h = w;
  }
  sent.ids.push_back(Vocabulary::kEos);
  return sent;
}

std::vector<TokenizedSentence> BigramWorld::sample_corpus(std::size_t n,
                                                          Rng& rng) const {
  std::vector<TokenizedSentence> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.push_back(sample_sentence(rng));
  }
  return corpus;
}

std::vector<std::pair<WordId, WordId>> BigramWorld::eval_pairs() const {
  std::vector<std::pair<WordId, WordId>> pairs;
  std::vector<WordId> histories{Vocabulary::kBos};
  std::vector<WordId> words;
  for (int i = 0; i < num_words_; ++i) {
    histories.push_back(3 + i);
    words.push_back(3 + i);
  }
  words.push_back(Vocabulary::kEos);
  for (WordId h : histories) {
    for (WordId w : words) {
      pairs.emplace_back(h, w);
    }
  }
  return pairs;
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) {
      ++j;
    }
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      rank[idx[k]] = avg;
    }
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ValidationError("spearman needs two equal-length series, n >= 2");
  }
  const std::vector<double> ra = ranks_with_ties(a), rb = ranks_with_ties(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

SyntheticEvalResult run_synthetic_eval(const SyntheticEvalConfig& config) {
  BigramWorld world(config.num_words, config.world_seed);
  Rng corpus_rng(config.seed * 2654435761ull + 1);
  const std::vector<TokenizedSentence> corpus =
      world.sample_corpus(config.sentences, corpus_rng);

  const NGramStore store = count_ngrams(corpus, 2);
  const KatzLM katz = estimate_katz(store, world.vocab().size(), 2);
  TextNoiseSource noise(katz);

  ModelConfig model_config;
  model_config.vocab_size = world.vocab().size();
  model_config.embedding_dim = 8;
  model_config.k_history = 1;
  model_config.n_counts = 2;
  model_config.hidden_a = 16;
  model_config.hidden_b = 16;
  model_config.hidden_c = 16;
  model_config.input_mode = config.mode;

  TrainConfig train_config;
  train_config.lr = config.lr;
  train_config.batch_size = config.batch_size;
  train_config.f = config.f;
  train_config.max_steps = config.steps;
  train_config.seed = config.seed;
  train_config.eval_interval = 100;

  std::vector<TrainSentence> data;
  data.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    data.push_back({std::to_string(i), corpus[i]});
  }

  double initial_loss = 0.0;
  bool have_initial = false;
  const TrainResult trained = train(
      train_config, model_config, data, store, noise,
      [&](std::int64_t, double loss, const ModelParams&) {
        if (!have_initial) {
          initial_loss = loss;
          have_initial = true;
        }
      });

  std::vector<double> model_scores, true_logs;
  IdSeq window(static_cast<std::size_t>(model_config.k_history) + 1,
               Vocabulary::kBos);
  for (const auto& [h, w] : world.eval_pairs()) {
    window[0] = w;
    window[1] = h;
    const FeatureVector feat = make_feature(store, window, model_config);
    model_scores.push_back(forward(trained.params, feat));
    true_logs.push_back(world.log_cond_prob(w, h));
  }

  SyntheticEvalResult result;
  result.spearman = spearman(model_scores, true_logs);
  result.initial_loss = initial_loss;
  result.final_loss = trained.final_interval_loss;
  result.steps = trained.steps;
  result.pairs = model_scores.size();
  return result;
}

}  // namespace nngrams
