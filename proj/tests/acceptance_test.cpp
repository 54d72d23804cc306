// Acceptance suite: runs every criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exits non-zero if any fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "nngrams/katz.hpp"
#include "nngrams/lattice.hpp"
#include "nngrams/noise.hpp"
#include "nngrams/rescore.hpp"
#include "nngrams/synthetic.hpp"
#include "nngrams/training.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace nngrams;

namespace {

struct Criterion {
  int number;
  std::string name;
  double limit_seconds;
  std::function<bool(std::string*)> body;
};

std::vector<TokenizedSentence> frame(const std::vector<IdSeq>& bodies) {
  std::vector<TokenizedSentence> out;
  for (const IdSeq& body : bodies) {
    TokenizedSentence s;
    s.ids.push_back(Vocabulary::kBos);
    s.ids.insert(s.ids.end(), body.begin(), body.end());
    s.ids.push_back(Vocabulary::kEos);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- C1
bool parameter_accounting(std::string* detail) {
  ModelConfig paper;
  paper.vocab_size = 2000000;
  paper.embedding_dim = 256;
  paper.k_history = 9;
  paper.n_counts = 6;
  paper.hidden_a = 1024;
  paper.hidden_b = 256;
  paper.hidden_c = 1024;
  const std::int64_t total = parameter_count(paper);
  const double deviation =
      std::abs(static_cast<double>(total) - 517e6) / 517e6;

  // The CLI path must report the same number.
  testutil::TempDir dir;
  const std::string out_path = dir.path("pc.out");
  const std::string cmd = std::string(NNGRAMS_BIN) + " param-count --config " +
                          CONFIGS_DIR + "/paper.cfg > " + out_path;
  const bool cli_ok = std::system(cmd.c_str()) == 0;
  const std::string output = testutil::read_file(out_path);

  std::ostringstream d;
  d << "total=" << total << " deviation=" << deviation * 100 << "%";
  *detail = d.str();
  return total == 515950849 && deviation < 0.01 && cli_ok &&
         output.find("param_count=515950849") != std::string::npos;
}

// ---------------------------------------------------------------- C2
bool gradient_correctness(std::string* detail) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 7919 + 3);
    ModelConfig config;
    config.vocab_size = 6 + static_cast<WordId>(rng.next_u64() % 8);
    config.embedding_dim = 2 + static_cast<int>(rng.next_u64() % 3);
    config.k_history = 1 + static_cast<int>(rng.next_u64() % 3);
    config.n_counts = 1 + static_cast<int>(rng.next_u64() % 3);
    config.hidden_a = 3 + static_cast<int>(rng.next_u64() % 4);
    config.hidden_b = 2 + static_cast<int>(rng.next_u64() % 4);
    config.hidden_c = 3 + static_cast<int>(rng.next_u64() % 4);
    const InputMode modes[] = {InputMode::kFull, InputMode::kEmbeddingsOnly,
                               InputMode::kCountsOnly};
    config.input_mode = modes[seed % 3];
    worst = std::max(worst, gradient_check(config, seed, 1e-5));
  }
  std::ostringstream d;
  d << "max_rel_err=" << worst << " over 20 configs";
  *detail = d.str();
  return worst < 1e-4;
}

// ---------------------------------------------------------------- C3
bool nce_distribution_recovery(std::string* detail) {
  SyntheticEvalConfig base;
  base.sentences = 200000;
  base.steps = 800;
  base.lr = 0.05;
  base.seed = 0;

  SyntheticEvalConfig counts = base;
  counts.f = 25;
  counts.mode = InputMode::kCountsOnly;
  const double rho_counts = run_synthetic_eval(counts).spearman;

  SyntheticEvalConfig full25 = base;
  full25.f = 25;
  full25.mode = InputMode::kFull;
  const double rho_full25 = run_synthetic_eval(full25).spearman;

  SyntheticEvalConfig full1 = base;
  full1.f = 1;
  full1.mode = InputMode::kFull;
  const double rho_full1 = run_synthetic_eval(full1).spearman;

  std::ostringstream d;
  d << "spearman counts_only/f25=" << rho_counts << " full/f25=" << rho_full25
    << " full/f1=" << rho_full1;
  *detail = d.str();
  return rho_counts >= 0.9 && rho_full25 >= 0.9 && rho_full25 >= rho_full1;
}

// ---------------------------------------------------------------- C4
bool katz_oracle_equivalence(std::string* detail) {
  Rng rng(4242);
  double worst_gap = 0.0, worst_sum = 0.0;
  for (int corpus_idx = 0; corpus_idx < 50; ++corpus_idx) {
    const WordId v = 6 + static_cast<WordId>(rng.next_u64() % 3);
    std::vector<IdSeq> bodies;
    std::size_t total = 0;
    const std::size_t budget = 10 + rng.next_u64() % 41;  // <= 50 tokens
    while (total < budget) {
      IdSeq body;
      const std::size_t len = 1 + rng.next_u64() % 5;
      for (std::size_t i = 0; i < len && total < budget; ++i) {
        body.push_back(3 + static_cast<WordId>(rng.next_u64() % (v - 3)));
        ++total;
      }
      bodies.push_back(body);
    }
    const auto corpus = frame(bodies);
    std::vector<IdSeq> framed;
    for (const auto& s : corpus) framed.push_back(s.ids);

    for (int order : {2, 3}) {
      const NGramStore store = count_ngrams(corpus, order);
      const KatzLM lm = estimate_katz(store, v, order);
      const oracles::BruteForceKatz oracle(framed, v, order);

      // Exhaustive: every possible history of length order-1, every word.
      std::vector<IdSeq> histories{{}};
      for (int i = 0; i < order - 1; ++i) {
        std::vector<IdSeq> next;
        for (const IdSeq& h : histories) {
          for (WordId w = 0; w < v; ++w) {
            IdSeq ext = h;
            ext.push_back(w);
            next.push_back(std::move(ext));
          }
        }
        histories = std::move(next);
      }
      for (const IdSeq& hist_text : histories) {
        IdSeq nearest(hist_text.rbegin(), hist_text.rend());
        double sum = 0.0;
        for (WordId w = 0; w < v; ++w) {
          const double got = lm.cond_prob(w, nearest);
          const double want = oracle.cond_prob(w, hist_text);
          worst_gap = std::max(worst_gap, std::abs(got - want));
          sum += got;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
      }
    }
  }
  std::ostringstream d;
  d << "max |model-oracle|=" << worst_gap << " max |sum-1|=" << worst_sum;
  *detail = d.str();
  return worst_gap <= 1e-9 && worst_sum <= 1e-6;
}

// ---------------------------------------------------------------- C5
bool count_rescaling(std::string* detail) {
  const double at_e10 = rescale_count(22026);  // round(e^10)
  std::ostringstream d;
  d << "r(0)=" << rescale_count(0) << " r(1)=" << rescale_count(1)
    << " r(e^10)=" << at_e10;
  *detail = d.str();
  return rescale_count(0) == -1.0 && rescale_count(1) == 0.0 &&
         std::abs(at_e10 - 1.0) <= 1e-5;
}

// ---------------------------------------------------------------- C6
bool pinching_reproduces_figure(std::string* detail) {
  const Lattice lat = Lattice::parse_text(testutil::hello_lattice_text());
  const PinchedAlignment alignment = pinch(lat, lat.one_best());
  if (alignment.positions.size() != 4) {
    *detail = "expected 4 positions";
    return false;
  }
  const auto& hello = alignment.positions[0];
  const auto& how = alignment.positions[1];
  const auto& are = alignment.positions[2];
  const auto& you = alignment.positions[3];
  bool ok = hello.word == "Hello" &&
            hello.excluded == ExcludeReason::kMultiwordAlignment &&
            are.word == "are" &&
            are.excluded == ExcludeReason::kNoConfusions &&
            you.word == "you" &&
            you.excluded == ExcludeReason::kNoConfusions &&
            how.excluded == ExcludeReason::kNone && !how.confusions.empty();
  double mass = how.best_posterior;
  for (const auto& [words, p] : how.confusions) {
    mass += p;
  }
  ok = ok && std::abs(mass - 1.0) <= 1e-6;
  std::ostringstream d;
  d << "positions=4 how-segment mass=" << mass;
  *detail = d.str();
  return ok;
}

// ---------------------------------------------------------------- C7
bool sampler_fidelity(std::string* detail) {
  // Toy corpus over 9 content words: histories are <s> plus each word.
  Rng gen(515);
  std::vector<IdSeq> bodies;
  for (int s = 0; s < 400; ++s) {
    IdSeq body;
    const std::size_t len = 1 + gen.next_u64() % 6;
    for (std::size_t i = 0; i < len; ++i) {
      body.push_back(3 + static_cast<WordId>(gen.next_u64() % 9));
    }
    bodies.push_back(body);
  }
  const auto corpus = frame(bodies);
  const WordId v = 12;
  const NGramStore store = count_ngrams(corpus, 2);
  const KatzLM lm = estimate_katz(store, v, 2);
  TextNoiseSource source(lm);

  std::vector<IdSeq> histories{{Vocabulary::kBos}};
  for (WordId w = 3; w < 12; ++w) {
    histories.push_back({w});
  }

  double min_p = 1.0;
  bool reproducible = true;
  for (std::size_t h = 0; h < histories.size(); ++h) {
    const std::vector<double> dist = lm.conditional_distribution(histories[h]);
    const int draws = 100000;
    Rng rng(1000 + h);
    std::vector<int> observed(static_cast<std::size_t>(v), 0);
    NoiseDraw nd = *source.draw("utt", h, 3, histories[h], draws, rng);
    for (const NoiseSample& s : nd.samples) {
      ++observed[static_cast<std::size_t>(s.word)];
    }
    // Chi-square with low-expectation bins pooled (E < 5).
    double stat = 0.0;
    int bins = 0;
    double pooled_e = 0.0;
    int pooled_o = 0;
    for (WordId w = 0; w < v; ++w) {
      const double e = draws * dist[static_cast<std::size_t>(w)];
      if (e < 5.0) {
        pooled_e += e;
        pooled_o += observed[static_cast<std::size_t>(w)];
        continue;
      }
      const double diff = observed[static_cast<std::size_t>(w)] - e;
      stat += diff * diff / e;
      ++bins;
    }
    if (pooled_e >= 5.0) {
      const double diff = pooled_o - pooled_e;
      stat += diff * diff / pooled_e;
      ++bins;
    }
    const double p = oracles::chi_square_p_value(stat, bins - 1);
    min_p = std::min(min_p, p);

    // Byte-identical streams with a fixed seed.
    Rng r1(77 + h), r2(77 + h);
    const auto a = text_noise(lm, histories[h], 2000, r1);
    const auto b = text_noise(lm, histories[h], 2000, r2);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].word != b[i].word || a[i].log_prob != b[i].log_prob) {
        reproducible = false;
      }
    }
  }
  std::ostringstream d;
  d << "min chi-square p=" << min_p << " reproducible=" << reproducible;
  *detail = d.str();
  return min_p > 0.01 && reproducible;
}

// ---------------------------------------------------------------- C8
bool rescoring_end_to_end(std::string* detail) {
  // References and a strong LM from the same generator.
  BigramWorld world(5, 2026);
  Rng rng(808);
  const auto train_corpus = world.sample_corpus(20000, rng);
  const NGramStore store = count_ngrams(train_corpus, 2);
  const KatzLM strong = estimate_katz(store, world.vocab().size(), 2);
  const Vocabulary& vocab = world.vocab();

  auto words_of = [&](const TokenizedSentence& s) {
    std::vector<std::string> words;
    for (std::size_t i = 1; i + 1 < s.ids.size(); ++i) {
      words.push_back(vocab.word(s.ids[i]));
    }
    return words;
  };

  std::vector<Utterance> testset;
  for (int u = 0; u < 100; ++u) {
    TokenizedSentence ref = world.sample_sentence(rng);
    while (ref.ids.size() < 4) {  // at least two content words
      ref = world.sample_sentence(rng);
    }
    const std::vector<std::string> ref_words = words_of(ref);

    std::vector<std::vector<std::string>> hyps;
    hyps.push_back(ref_words);
    for (int h = 0; h < 4; ++h) {
      std::vector<std::string> corrupted = ref_words;
      bool changed = false;
      for (auto& w : corrupted) {
        if (rng.uniform() < 0.35) {
          w = "w" + std::to_string(1 + rng.next_u64() % 5);
          changed = true;
        }
      }
      if (changed) {
        hyps.push_back(corrupted);
      }
    }
    // First-pass scores: a random hypothesis wins the first pass.
    const std::size_t winner = rng.next_u64() % hyps.size();
    Utterance utt;
    utt.utt_id = "u" + std::to_string(u);
    utt.reference = ref_words;
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      Hypothesis hyp;
      hyp.words = hyps[h];
      hyp.base_score = (h == winner ? 0.0 : -0.05 - 0.01 * h);
      utt.nbest.push_back(std::move(hyp));
    }
    testset.push_back(std::move(utt));
  }

  const HypothesisScorer scorer = [&](const std::vector<std::string>& words) {
    return score_hypothesis_katz(strong, vocab, words);
  };

  // First pass, computed independently of rescore().
  WerCounts first_pass;
  for (const Utterance& utt : testset) {
    std::size_t best = 0;
    for (std::size_t h = 1; h < utt.nbest.size(); ++h) {
      if (utt.nbest[h].base_score > utt.nbest[best].base_score) {
        best = h;
      }
    }
    const WerCounts c = wer(utt.reference, utt.nbest[best].words);
    first_pass.substitutions += c.substitutions;
    first_pass.deletions += c.deletions;
    first_pass.insertions += c.insertions;
    first_pass.reference_len += c.reference_len;
  }

  const EvalReport at_zero = evaluate(testset, scorer, 0.0);
  const EvalReport at_half = evaluate(testset, scorer, 0.5);

  std::ostringstream d;
  d << "first-pass WER=" << first_pass.rate()
    << " lambda0 WER=" << at_zero.corpus.rate()
    << " lambda0.5 WER=" << at_half.corpus.rate();
  *detail = d.str();
  const bool zero_matches = at_zero.corpus.substitutions == first_pass.substitutions &&
                            at_zero.corpus.deletions == first_pass.deletions &&
                            at_zero.corpus.insertions == first_pass.insertions;
  return zero_matches && first_pass.errors() > 0 &&
         at_half.corpus.rate() < first_pass.rate();
}

// ---------------------------------------------------------------- C9
bool nbest_posterior_oracles(std::string* detail) {
  int tested = 0;
  double worst_cut = 0.0;
  for (std::uint64_t seed = 0; tested < 50 && seed < 400; ++seed) {
    const std::string text = oracles::random_lattice_text(
        seed, 3 + static_cast<int>(seed % 4), 3, 2);
    const Lattice lat = Lattice::parse_text(text);
    const auto oracle = oracles::enumerate_paths(lat);
    if (oracle.size() > 100) {
      continue;
    }
    ++tested;
    const auto mine = lat.n_best(oracle.size() + 5);
    if (mine.size() != oracle.size()) {
      *detail = "path-set size mismatch at seed " + std::to_string(seed);
      return false;
    }
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (mine[i].words != oracle[i].words ||
          std::abs(mine[i].log_score - oracle[i].log_score) > 1e-9) {
        *detail = "path mismatch at seed " + std::to_string(seed);
        return false;
      }
    }
    const auto post = lat.edge_posteriors();
    const auto& topo = lat.topo_order();
    for (std::size_t i = 1; i < topo.size(); ++i) {
      const std::set<int> prefix(topo.begin(),
                                 topo.begin() + static_cast<std::ptrdiff_t>(i));
      double cut = 0.0;
      for (std::size_t e = 0; e < lat.edges().size(); ++e) {
        if (prefix.count(lat.edges()[e].from) &&
            !prefix.count(lat.edges()[e].to)) {
          cut += post[e];
        }
      }
      worst_cut = std::max(worst_cut, std::abs(cut - 1.0));
    }
  }
  std::ostringstream d;
  d << "lattices=" << tested << " max |cut-1|=" << worst_cut;
  *detail = d.str();
  return tested == 50 && worst_cut <= 1e-6;
}

// ---------------------------------------------------------------- C10
bool embedding_neighbors(std::string* detail) {
  Rng rng(31337);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig config;
    config.vocab_size = 8 + static_cast<WordId>(rng.next_u64() % 20);
    config.embedding_dim = 2 + static_cast<int>(rng.next_u64() % 4);
    config.k_history = 1;
    config.n_counts = 1;
    config.hidden_a = 2;
    config.hidden_b = 2;
    config.hidden_c = 2;
    ModelParams p = init_params(config, trial);
    // Inject duplicate rows so the tie rule is exercised.
    if (trial % 3 == 0 && config.vocab_size > 4) {
      p.embeddings.row(4) = p.embeddings.row(1);
    }
    const WordId query =
        static_cast<WordId>(rng.next_u64() %
                            static_cast<std::uint64_t>(config.vocab_size));
    const WordId k = 1 + static_cast<WordId>(
                             rng.next_u64() %
                             static_cast<std::uint64_t>(config.vocab_size - 1));
    const auto got = nearest_neighbors(p, query, k);
    // Brute force with the same tie rule (distance, then id).
    std::vector<std::pair<double, WordId>> all;
    for (WordId w = 0; w < config.vocab_size; ++w) {
      if (w == query) continue;
      all.emplace_back((p.embeddings.row(w) - p.embeddings.row(query)).norm(),
                       w);
    }
    std::sort(all.begin(), all.end());
    for (WordId i = 0; i < k; ++i) {
      if (got[static_cast<std::size_t>(i)].first !=
              all[static_cast<std::size_t>(i)].second ||
          std::abs(got[static_cast<std::size_t>(i)].second -
                   all[static_cast<std::size_t>(i)].first) > 1e-12) {
        *detail = "mismatch at trial " + std::to_string(trial);
        return false;
      }
    }
  }

  // Structural check of the word/distance table via the CLI.
  testutil::TempDir dir;
  ModelConfig config;
  config.vocab_size = 6;
  config.embedding_dim = 3;
  config.k_history = 1;
  config.n_counts = 1;
  config.hidden_a = 2;
  config.hidden_b = 2;
  config.hidden_c = 2;
  const ModelParams p = init_params(config, 5);
  save_checkpoint(p, dir.path("m.ckpt"));
  Vocabulary vocab;
  vocab.add_word("roma");
  vocab.add_word("bologna");
  vocab.add_word("milano");
  vocab.save(dir.path("v.txt"));
  const std::string out_path = dir.path("nn.out");
  const std::string cmd = std::string(NNGRAMS_BIN) + " neighbors --checkpoint " +
                          dir.path("m.ckpt") + " --vocab " + dir.path("v.txt") +
                          " --word roma --k 2 > " + out_path;
  if (std::system(cmd.c_str()) != 0) {
    *detail = "neighbors CLI failed";
    return false;
  }
  const std::string output = testutil::read_file(out_path);
  std::istringstream lines(output);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream iss(line);
    std::string word;
    double dist;
    if (!(iss >> word >> dist) || dist < 0.0) {
      *detail = "bad neighbor row: " + line;
      return false;
    }
    ++rows;
  }
  std::ostringstream d;
  d << "20 random tables exact; CLI rows=" << rows;
  *detail = d.str();
  return rows == 2;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "parameter accounting (within 1% of 517M)", 1.0, parameter_accounting},
      {2, "gradient correctness on 20 random configs", 30.0, gradient_correctness},
      {3, "NCE distribution recovery (Spearman >= 0.9, f sweep)", 600.0,
       nce_distribution_recovery},
      {4, "Katz oracle equivalence to 1e-9 on 50 corpora", 60.0,
       katz_oracle_equivalence},
      {5, "count rescaling fixed points", 1.0, count_rescaling},
      {6, "lattice pinching exclusion rules", 1.0, pinching_reproduces_figure},
      {7, "text-noise sampler chi-square fidelity", 60.0, sampler_fidelity},
      {8, "rescoring end-to-end improves first-pass WER", 60.0,
       rescoring_end_to_end},
      {9, "n-best and posterior oracles on 50 lattices", 60.0,
       nbest_posterior_oracles},
      {10, "embedding nearest neighbors exact", 1.0, embedding_neighbors},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.body(&detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (seconds > c.limit_seconds) {
      ok = false;
      detail += " [exceeded " + std::to_string(c.limit_seconds) + "s budget]";
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.number
              << ": " << c.name << " — " << detail << " (" << seconds
              << "s)\n";
    failures += ok ? 0 : 1;
  }
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED"
                              : std::to_string(failures) + " CRITERIA FAILED")
            << '\n';
  return failures == 0 ? 0 : 1;
}
