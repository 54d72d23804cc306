#include "nngrams/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "nngrams/katz.hpp"
#include "nngrams/lattice.hpp"
#include "nngrams/noise.hpp"
#include "nngrams/rescore.hpp"
#include "nngrams/run_config.hpp"
#include "nngrams/synthetic.hpp"
#include "nngrams/training.hpp"

namespace nngrams {

namespace {

int resolve_order(int requested, const NGramStore& store) {
  const int order = requested == 0 ? store.max_order() : requested;
  if (order < 1 || order > store.max_order()) {
    throw ValidationError("order exceeds the store's max_order");
  }
  return order;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
  }
  return lines;
}

std::vector<Hypothesis> read_nbest_file(const std::string& path) {
  std::vector<Hypothesis> out;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    int rank = 0;
    Hypothesis h;
    if (!(iss >> rank >> h.base_score)) {
      throw DataError("bad n-best line in " + path + ": " + line);
    }
    std::string w;
    while (iss >> w) {
      h.words.push_back(w);
    }
    out.push_back(std::move(h));
  }
  return out;
}

std::string format_nbest(const std::vector<LatticePath>& paths) {
  std::ostringstream out;
  out.precision(17);
  int rank = 1;
  for (const auto& p : paths) {
    out << rank++ << ' ' << p.log_score;
    for (const auto& w : p.words) {
      out << ' ' << w;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Utterance> read_testset(const std::string& testset_path,
                                    const std::string& nbest_dir) {
  std::vector<Utterance> testset;
  for (const std::string& line : read_lines(testset_path)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("testset line lacks <utt_id>\\t<reference>: " + line);
    }
    Utterance utt;
    utt.utt_id = line.substr(0, tab);
    utt.reference = split_ws(line.substr(tab + 1));
    const std::string nbest_path = nbest_dir + "/" + utt.utt_id + ".nbest";
    if (std::filesystem::exists(nbest_path)) {
      utt.nbest = read_nbest_file(nbest_path);
    }
    testset.push_back(std::move(utt));
  }
  return testset;
}

const char* exclude_name(ExcludeReason r) {
  switch (r) {
    case ExcludeReason::kNone: return "ok";
    case ExcludeReason::kNoConfusions: return "no_confusions";
    case ExcludeReason::kMultiwordAlignment: return "multiword_alignment";
  }
  return "?";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"NN-grams language-modeling toolkit"};
  app.require_subcommand(1);
  std::ostream& out = std::cout;

  // ---- vocab ----
  auto* vocab_cmd = app.add_subcommand(
      "vocab", "Build a vocabulary from a one-sentence-per-line corpus");
  struct {
    std::string corpus, out;
    WordId max_size = 2000000;
    std::uint64_t min_count = 1;
  } vo;
  vocab_cmd->add_option("--corpus", vo.corpus, "corpus text file")->required();
  vocab_cmd->add_option("--out", vo.out, "vocabulary file to write")->required();
  vocab_cmd->add_option("--max-size", vo.max_size, "maximum vocabulary size");
  vocab_cmd->add_option("--min-count", vo.min_count, "minimum word frequency");
  vocab_cmd->callback([&] {
    const Vocabulary vocab = build_vocabulary(vo.corpus, vo.max_size, vo.min_count);
    vocab.save(vo.out);
    out << "vocab_size=" << vocab.size() << '\n';
  });

  // ---- count ----
  auto* count_cmd =
      app.add_subcommand("count", "Count n-grams over a tokenized corpus");
  struct {
    std::string corpus, vocab, out;
    int max_order = 6;
  } co;
  count_cmd->add_option("--corpus", co.corpus, "corpus text file")->required();
  count_cmd->add_option("--vocab", co.vocab, "vocabulary file")->required();
  count_cmd->add_option("--out", co.out, "ngram store file to write")->required();
  count_cmd->add_option("--max-order", co.max_order, "highest n-gram order");
  count_cmd->callback([&] {
    const Vocabulary vocab = Vocabulary::load(co.vocab);
    const auto corpus = read_corpus(co.corpus, vocab);
    const NGramStore store = count_ngrams(corpus, co.max_order);
    store.save(co.out);
    out << "total_tokens=" << store.total_tokens() << '\n';
  });

  // ---- katz ----
  auto* katz_cmd = app.add_subcommand("katz", "Katz-backoff language model");
  katz_cmd->require_subcommand(1);
  struct {
    std::string store, vocab, out, text;
    int order = 0;  // 0 = store max_order
    int gt_cutoff = 5;
  } ka;
  auto add_katz_common = [&](CLI::App* sub) {
    sub->add_option("--store", ka.store, "ngram store file")->required();
    sub->add_option("--vocab", ka.vocab, "vocabulary file")->required();
    sub->add_option("--order", ka.order, "model order (default: store max)");
    sub->add_option("--gt-cutoff", ka.gt_cutoff, "Good-Turing cutoff");
  };
  auto* katz_train =
      katz_cmd->add_subcommand("train", "Estimate the model and print stats");
  add_katz_common(katz_train);
  katz_train->callback([&] {
    const Vocabulary vocab = Vocabulary::load(ka.vocab);
    const NGramStore store = NGramStore::load(ka.store);
    const int order = resolve_order(ka.order, store);
    const KatzLM lm = estimate_katz(store, vocab.size(), order, ka.gt_cutoff);
    out << "order=" << lm.order() << " vocab=" << lm.vocab_size() << '\n';
    for (int n = 2; n <= lm.order(); ++n) {
      out << "histories[" << n << "]=" << lm.stored_histories(n).size() << '\n';
    }
  });
  auto* katz_export =
      katz_cmd->add_subcommand("export", "Write the model in ARPA format");
  add_katz_common(katz_export);
  katz_export->add_option("--out", ka.out, "ARPA file to write")->required();
  katz_export->callback([&] {
    const Vocabulary vocab = Vocabulary::load(ka.vocab);
    const NGramStore store = NGramStore::load(ka.store);
    const KatzLM lm =
        estimate_katz(store, vocab.size(), resolve_order(ka.order, store), ka.gt_cutoff);
    lm.export_arpa(ka.out, vocab);
    out << "arpa_written=" << ka.out << '\n';
  });
  auto* katz_score =
      katz_cmd->add_subcommand("score", "Log-probability of text, per line");
  add_katz_common(katz_score);
  katz_score->add_option("--text", ka.text, "sentences to score")->required();
  katz_score->callback([&] {
    const Vocabulary vocab = Vocabulary::load(ka.vocab);
    const NGramStore store = NGramStore::load(ka.store);
    const KatzLM lm =
        estimate_katz(store, vocab.size(), resolve_order(ka.order, store), ka.gt_cutoff);
    double total = 0.0;
    out.precision(10);
    for (const std::string& line : read_lines(ka.text)) {
      const double s = score_hypothesis_katz(lm, vocab, split_ws(line));
      total += s;
      out << s << '\n';
    }
    out << "total=" << total << '\n';
  });

  // ---- noise-text ----
  auto* ntext_cmd = app.add_subcommand(
      "noise-text", "Sample text noise from the Katz conditional");
  struct {
    std::string store, vocab, history;
    int order = 0, gt_cutoff = 5, f = 1;
    std::uint64_t seed = 0;
  } nt;
  ntext_cmd->add_option("--store", nt.store, "ngram store file")->required();
  ntext_cmd->add_option("--vocab", nt.vocab, "vocabulary file")->required();
  ntext_cmd->add_option("--order", nt.order, "model order (default: store max)");
  ntext_cmd->add_option("--gt-cutoff", nt.gt_cutoff, "Good-Turing cutoff");
  ntext_cmd
      ->add_option("--history", nt.history,
                   "preceding words in sentence order, e.g. 'please set an'")
      ->required();
  ntext_cmd->add_option("--f", nt.f, "number of samples");
  ntext_cmd->add_option("--seed", nt.seed, "random seed")->required();
  ntext_cmd->callback([&] {
    const Vocabulary vocab = Vocabulary::load(nt.vocab);
    const NGramStore store = NGramStore::load(nt.store);
    const KatzLM lm =
        estimate_katz(store, vocab.size(), resolve_order(nt.order, store), nt.gt_cutoff);
    IdSeq history;  // nearest-first
    const auto words = split_ws(nt.history);
    for (auto it = words.rbegin(); it != words.rend(); ++it) {
      history.push_back(vocab.id_or_unk(*it));
    }
    while (static_cast<int>(history.size()) < lm.order() - 1) {
      history.push_back(Vocabulary::kBos);
    }
    Rng rng(nt.seed);
    out.precision(10);
    for (const NoiseSample& s : text_noise(lm, history, nt.f, rng)) {
      out << vocab.word(s.word) << ' ' << s.log_prob << '\n';
    }
  });

  // ---- pinch ----
  auto* pinch_cmd = app.add_subcommand(
      "pinch", "Align a lattice against its 1-best hypothesis");
  struct {
    std::string lattice;
  } pi;
  pinch_cmd->add_option("--lattice", pi.lattice, "lattice file")->required();
  pinch_cmd->callback([&] {
    const Lattice lattice = Lattice::parse_file(pi.lattice);
    const PinchedAlignment alignment = pinch(lattice, lattice.one_best());
    out.precision(10);
    for (std::size_t p = 0; p < alignment.positions.size(); ++p) {
      const PinchPosition& pos = alignment.positions[p];
      out << p << ' ' << pos.word << ' ' << exclude_name(pos.excluded);
      if (pos.excluded == ExcludeReason::kNone) {
        out << " best:" << pos.best_posterior;
        for (const auto& [words, mass] : pos.confusions) {
          out << ' ';
          for (std::size_t i = 0; i < words.size(); ++i) {
            out << (i ? "_" : "") << words[i];
          }
          out << ':' << mass;
        }
      }
      out << '\n';
    }
  });

  // ---- noise-speech ----
  auto* nspeech_cmd =
      app.add_subcommand("noise-speech", "Speech noise from pinched lattices");
  nspeech_cmd->require_subcommand(1);
  struct {
    std::vector<std::string> lattices;
    std::string vocab, out, table, utt;
    double threshold = 0.8;
    std::size_t position = 0;
    int f = 1;
    std::uint64_t seed = 0;
  } ns;
  auto* ns_build = nspeech_cmd->add_subcommand(
      "build", "Extract confusion tables from lattices");
  ns_build->add_option("--lattices", ns.lattices, "lattice files")
      ->required()
      ->expected(-1);
  ns_build->add_option("--vocab", ns.vocab, "vocabulary file")->required();
  ns_build->add_option("--threshold", ns.threshold, "1-best confidence threshold");
  ns_build->add_option("--out", ns.out, "table file to write")->required();
  ns_build->callback([&] {
    const Vocabulary vocab = Vocabulary::load(ns.vocab);
    std::vector<std::pair<std::string, Lattice>> lattices;
    for (const std::string& path : ns.lattices) {
      lattices.emplace_back(std::filesystem::path(path).stem().string(),
                            Lattice::parse_file(path));
    }
    const SpeechNoiseTable table =
        build_speech_noise(lattices, ns.threshold, vocab);
    table.save(ns.out);
    out << "positions=" << table.size()
        << " skipped_lattices=" << table.skipped_lattices() << '\n';
  });
  auto* ns_sample =
      nspeech_cmd->add_subcommand("sample", "Draw noise for one position");
  ns_sample->add_option("--table", ns.table, "speech noise table")->required();
  ns_sample->add_option("--vocab", ns.vocab, "vocabulary file")->required();
  ns_sample->add_option("--utt", ns.utt, "utterance id")->required();
  ns_sample->add_option("--position", ns.position, "0-based 1-best position")
      ->required();
  ns_sample->add_option("--f", ns.f, "number of samples");
  ns_sample->add_option("--seed", ns.seed, "random seed")->required();
  ns_sample->callback([&] {
    const Vocabulary vocab = Vocabulary::load(ns.vocab);
    const SpeechNoiseTable table = SpeechNoiseTable::load(ns.table, vocab);
    Rng rng(ns.seed);
    auto samples = speech_noise(table, ns.utt, ns.position, ns.f, rng);
    if (!samples.has_value()) {
      out << "skip_token\n";
      return;
    }
    out.precision(10);
    for (const NoiseSample& s : *samples) {
      out << vocab.word(s.word) << ' ' << s.log_prob << '\n';
    }
  });

  // ---- nbest ----
  auto* nbest_cmd =
      app.add_subcommand("nbest", "Extract the n best lattice hypotheses");
  struct {
    std::string lattice, out;
    std::size_t n = 150;
  } nb;
  nbest_cmd->add_option("--lattice", nb.lattice, "lattice file")->required();
  nbest_cmd->add_option("--n", nb.n, "number of hypotheses");
  nbest_cmd->add_option("--out", nb.out, "output file (default stdout)");
  nbest_cmd->callback([&] {
    const Lattice lattice = Lattice::parse_file(nb.lattice);
    const std::string text = format_nbest(lattice.n_best(nb.n));
    if (nb.out.empty()) {
      out << text;
    } else {
      atomic_write_file(nb.out, text);
    }
  });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train the NN-grams model");
  struct {
    std::string config, corpus, vocab, store, out, log;
    std::string noise = "text";
    std::string speech_table, speech_text;
    int katz_order = 0, gt_cutoff = 5;
    std::int64_t checkpoint_every = 0;
    std::uint64_t seed = 0;
    std::int64_t steps = -1;
    int f = -1;
    double lr = -1.0;
    int batch_size = -1;
  } tr;
  train_cmd->add_option("--config", tr.config, "run config file")->required();
  train_cmd->add_option("--corpus", tr.corpus, "training text (text noise)");
  train_cmd->add_option("--vocab", tr.vocab, "vocabulary file")->required();
  train_cmd->add_option("--store", tr.store, "ngram store for count features")
      ->required();
  train_cmd->add_option("--out", tr.out, "checkpoint file to write")->required();
  train_cmd->add_option("--log", tr.log, "training log file");
  train_cmd->add_option("--noise", tr.noise, "text | speech");
  train_cmd->add_option("--speech-table", tr.speech_table, "speech noise table");
  train_cmd->add_option("--speech-text", tr.speech_text,
                        "1-best text, lines '<utt_id> <words...>'");
  train_cmd->add_option("--katz-order", tr.katz_order,
                        "text-noise model order (default: store max)");
  train_cmd->add_option("--gt-cutoff", tr.gt_cutoff, "Good-Turing cutoff");
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every,
                        "checkpoint cadence in steps (0 = final only)");
  train_cmd->add_option("--seed", tr.seed, "random seed")->required();
  train_cmd->add_option("--steps", tr.steps, "override train.max_steps");
  train_cmd->add_option("--f", tr.f, "override train.f");
  train_cmd->add_option("--lr", tr.lr, "override train.lr");
  train_cmd->add_option("--batch-size", tr.batch_size, "override train.batch_size");
  train_cmd->callback([&] {
    RunConfig config = RunConfig::load(tr.config);
    config.train.seed = tr.seed;
    if (tr.steps >= 0) config.train.max_steps = tr.steps;
    if (tr.f > 0) config.train.f = tr.f;
    if (tr.lr > 0) config.train.lr = tr.lr;
    if (tr.batch_size > 0) config.train.batch_size = tr.batch_size;

    const Vocabulary vocab = Vocabulary::load(tr.vocab);
    if (config.model.vocab_size != vocab.size()) {
      throw ValidationError("model.V does not match the vocabulary size");
    }
    const NGramStore store = NGramStore::load(tr.store);

    std::vector<TrainSentence> data;
    std::unique_ptr<NoiseSource> noise;
    std::unique_ptr<KatzLM> katz;           // owns the text-noise model
    std::unique_ptr<SpeechNoiseTable> table;
    if (tr.noise == "text") {
      if (tr.corpus.empty()) {
        throw ValidationError("--corpus is required for text noise");
      }
      std::size_t lineno = 0;
      for (const std::string& line : read_lines(tr.corpus)) {
        data.push_back({std::to_string(lineno++), tokenize(line, vocab)});
      }
      katz = std::make_unique<KatzLM>(estimate_katz(
          store, vocab.size(), resolve_order(tr.katz_order, store), tr.gt_cutoff));
      noise = std::make_unique<TextNoiseSource>(*katz);
    } else if (tr.noise == "speech") {
      if (tr.speech_table.empty() || tr.speech_text.empty()) {
        throw ValidationError(
            "--speech-table and --speech-text are required for speech noise");
      }
      table = std::make_unique<SpeechNoiseTable>(
          SpeechNoiseTable::load(tr.speech_table, vocab));
      for (const std::string& line : read_lines(tr.speech_text)) {
        if (line.empty()) continue;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        std::string rest;
        for (std::size_t i = 1; i < toks.size(); ++i) {
          rest += (i > 1 ? " " : "") + toks[i];
        }
        data.push_back({toks[0], tokenize(rest, vocab)});
      }
      noise = std::make_unique<SpeechNoiseSource>(*table);
    } else {
      throw ValidationError("--noise must be text or speech");
    }

    const TrainResult result =
        train(config.train, config.model, data, store, *noise,
              [&](std::int64_t step, double, const ModelParams& params) {
                if (tr.checkpoint_every > 0 && step % tr.checkpoint_every == 0) {
                  save_checkpoint(params,
                                  tr.out + ".step" + std::to_string(step));
                }
              });
    save_checkpoint(result.params, tr.out);
    std::string log_text;
    for (const std::string& line : result.log_lines) {
      out << line << '\n';
      log_text += line;
      log_text += '\n';
    }
    if (!tr.log.empty()) {
      atomic_write_file(tr.log, log_text);
    }
    out << "steps=" << result.steps << " examples=" << result.examples
        << " skipped_tokens=" << result.skipped_tokens
        << " converged=" << (result.converged ? 1 : 0) << '\n';
  });

  // ---- score ----
  auto* score_cmd =
      app.add_subcommand("score", "NN-grams log score of text, per line");
  struct {
    std::string checkpoint, store, vocab, text;
    bool f32 = false;
  } sc;
  score_cmd->add_option("--checkpoint", sc.checkpoint, "model checkpoint")
      ->required();
  score_cmd->add_option("--store", sc.store, "ngram store")->required();
  score_cmd->add_option("--vocab", sc.vocab, "vocabulary file")->required();
  score_cmd->add_option("--text", sc.text, "sentences to score")->required();
  score_cmd->add_flag("--f32", sc.f32, "use the single-precision scorer");
  score_cmd->callback([&] {
    const Vocabulary vocab = Vocabulary::load(sc.vocab);
    const NGramStore store = NGramStore::load(sc.store);
    const ModelParams params = load_checkpoint(sc.checkpoint);
    std::unique_ptr<ScorerF32> f32;
    if (sc.f32) {
      f32 = std::make_unique<ScorerF32>(params);
    }
    out.precision(10);
    double total = 0.0;
    for (const std::string& line : read_lines(sc.text)) {
      const auto words = split_ws(line);
      const double s =
          sc.f32 ? score_hypothesis_nngrams_f32(*f32, params.config, store,
                                                vocab, words)
                 : score_hypothesis_nngrams(params, store, vocab, words);
      total += s;
      out << s << '\n';
    }
    out << "total=" << total << '\n';
  });

  // ---- rescore ----
  auto* rescore_cmd = app.add_subcommand(
      "rescore", "Rescore n-best lists and report corpus WER");
  struct {
    std::string testset, nbest_dir, model = "nngrams";
    std::string checkpoint, store, vocab;
    int order = 0, gt_cutoff = 5;
    double lambda = 0.5;
    bool f32 = false;
  } re;
  rescore_cmd->add_option("--testset", re.testset, "utt_id<TAB>reference lines")
      ->required();
  rescore_cmd
      ->add_option("--nbest-dir", re.nbest_dir, "directory of <utt_id>.nbest")
      ->required();
  rescore_cmd->add_option("--model", re.model, "katz6 | nngrams");
  rescore_cmd->add_option("--checkpoint", re.checkpoint, "NN-grams checkpoint");
  rescore_cmd->add_option("--store", re.store, "ngram store")->required();
  rescore_cmd->add_option("--vocab", re.vocab, "vocabulary file")->required();
  rescore_cmd->add_option("--order", re.order, "katz6 model order");
  rescore_cmd->add_option("--gt-cutoff", re.gt_cutoff, "Good-Turing cutoff");
  rescore_cmd->add_option("--lambda", re.lambda, "rescoring weight");
  rescore_cmd->add_flag("--f32", re.f32, "single-precision NN scorer");
  rescore_cmd->callback([&] {
    const Vocabulary vocab = Vocabulary::load(re.vocab);
    const NGramStore store = NGramStore::load(re.store);
    const std::vector<Utterance> testset =
        read_testset(re.testset, re.nbest_dir);

    std::unique_ptr<KatzLM> katz;
    std::unique_ptr<ModelParams> params;
    std::unique_ptr<ScorerF32> f32;
    HypothesisScorer scorer;
    if (re.model == "katz6") {
      katz = std::make_unique<KatzLM>(estimate_katz(
          store, vocab.size(), resolve_order(re.order, store), re.gt_cutoff));
      scorer = [&](const std::vector<std::string>& words) {
        return score_hypothesis_katz(*katz, vocab, words);
      };
    } else if (re.model == "nngrams") {
      if (re.checkpoint.empty()) {
        throw ValidationError("--checkpoint is required for nngrams rescoring");
      }
      params = std::make_unique<ModelParams>(load_checkpoint(re.checkpoint));
      if (re.f32) {
        f32 = std::make_unique<ScorerF32>(*params);
        scorer = [&](const std::vector<std::string>& words) {
          return score_hypothesis_nngrams_f32(*f32, params->config, store,
                                              vocab, words);
        };
      } else {
        scorer = [&](const std::vector<std::string>& words) {
          return score_hypothesis_nngrams(*params, store, vocab, words);
        };
      }
    } else {
      throw ValidationError("--model must be katz6 or nngrams");
    }

    const EvalReport report = evaluate(testset, scorer, re.lambda);
    for (const std::string& w : report.warnings) {
      std::cerr << "warning: " << w << '\n';
    }
    for (const auto& [utt, counts] : report.per_utterance) {
      out << utt << ' ' << format_report_line(counts) << '\n';
    }
    out << format_report_line(report.corpus) << '\n';
  });

  // ---- wer ----
  auto* wer_cmd = app.add_subcommand(
      "wer", "Word error rate between line-paired reference and hypothesis");
  struct {
    std::string ref, hyp;
  } we;
  wer_cmd->add_option("--ref", we.ref, "reference file")->required();
  wer_cmd->add_option("--hyp", we.hyp, "hypothesis file")->required();
  wer_cmd->callback([&] {
    const auto refs = read_lines(we.ref);
    const auto hyps = read_lines(we.hyp);
    if (refs.size() != hyps.size()) {
      throw DataError("--ref and --hyp line counts differ");
    }
    WerCounts corpus;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const WerCounts c = wer(split_ws(refs[i]), split_ws(hyps[i]));
      if (!c.rate_defined) {
        std::cerr << "warning: empty reference with non-empty hypothesis on line "
                  << i + 1 << '\n';
      }
      corpus.substitutions += c.substitutions;
      corpus.deletions += c.deletions;
      corpus.insertions += c.insertions;
      corpus.reference_len += c.reference_len;
    }
    out << format_report_line(corpus) << '\n';
  });

  // ---- neighbors ----
  auto* nn_cmd = app.add_subcommand(
      "neighbors", "Nearest embedding neighbors by Euclidean distance");
  struct {
    std::string checkpoint, vocab, word;
    WordId k = 5;
  } ne;
  nn_cmd->add_option("--checkpoint", ne.checkpoint, "model checkpoint")
      ->required();
  nn_cmd->add_option("--vocab", ne.vocab, "vocabulary file")->required();
  nn_cmd->add_option("--word", ne.word, "query word")->required();
  nn_cmd->add_option("--k", ne.k, "neighbor count");
  nn_cmd->callback([&] {
    const Vocabulary vocab = Vocabulary::load(ne.vocab);
    const ModelParams params = load_checkpoint(ne.checkpoint);
    WordId id;
    if (!vocab.find(ne.word, &id)) {
      throw DataError("word not in vocabulary: " + ne.word);
    }
    out.precision(6);
    for (const auto& [w, dist] : nearest_neighbors(params, id, ne.k)) {
      out << vocab.word(w) << '\t' << dist << '\n';
    }
  });

  // ---- param-count ----
  auto* pc_cmd = app.add_subcommand(
      "param-count", "Exact parameter total for a model configuration");
  struct {
    std::string config;
    std::int64_t reference = 517000000;
  } pc;
  pc_cmd->add_option("--config", pc.config, "run config file")->required();
  pc_cmd->add_option("--reference", pc.reference,
                     "reference total to compare against (0 = none)");
  pc_cmd->callback([&] {
    const RunConfig config = RunConfig::load(pc.config);
    const std::int64_t total = parameter_count(config.model);
    out << "param_count=" << total << '\n';
    if (pc.reference > 0) {
      const double dev = std::abs(static_cast<double>(total - pc.reference)) /
                         static_cast<double>(pc.reference);
      out << "within 1% of " << pc.reference << ": "
          << (dev <= 0.01 ? "yes" : "no") << " (deviation "
          << dev * 100.0 << "%)\n";
    }
  });

  // ---- gradcheck ----
  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "Analytic vs central-difference gradients on a tiny model");
  struct {
    std::uint64_t seed = 0;
    double epsilon = 1e-5;
    std::string mode = "full";
  } gc;
  gc_cmd->add_option("--seed", gc.seed, "random seed")->required();
  gc_cmd->add_option("--epsilon", gc.epsilon, "finite-difference step");
  gc_cmd->add_option("--mode", gc.mode, "full | embeddings_only | counts_only");
  gc_cmd->callback([&] {
    ModelConfig config;
    config.vocab_size = 12;
    config.embedding_dim = 3;
    config.k_history = 2;
    config.n_counts = 2;
    config.hidden_a = 5;
    config.hidden_b = 4;
    config.hidden_c = 6;
    config.input_mode = input_mode_from_string(gc.mode);
    const double err = gradient_check(config, gc.seed, gc.epsilon);
    out.precision(6);
    out << "max_rel_err=" << err << '\n';
    out << (err < 1e-4 ? "PASS" : "FAIL") << '\n';
    if (err >= 1e-4) {
      throw ValidationError("gradient check failed");
    }
  });

  // ---- synthetic-eval ----
  auto* se_cmd = app.add_subcommand(
      "synthetic-eval",
      "Train on a synthetic bigram corpus and report rank recovery");
  struct {
    std::uint64_t seed = 0;
    std::size_t sentences = 200000;
    int f = 25;
    std::string mode = "full";
    std::int64_t steps = 2500;
    double lr = 0.05;
  } se;
  se_cmd->add_option("--seed", se.seed, "random seed")->required();
  se_cmd->add_option("--sentences", se.sentences, "corpus size");
  se_cmd->add_option("--f", se.f, "noise samples per token");
  se_cmd->add_option("--mode", se.mode, "full | embeddings_only | counts_only");
  se_cmd->add_option("--steps", se.steps, "training steps");
  se_cmd->add_option("--lr", se.lr, "learning rate");
  se_cmd->callback([&] {
    SyntheticEvalConfig config;
    config.seed = se.seed;
    config.sentences = se.sentences;
    config.f = se.f;
    config.mode = input_mode_from_string(se.mode);
    config.steps = se.steps;
    config.lr = se.lr;
    const SyntheticEvalResult result = run_synthetic_eval(config);
    out.precision(6);
    out << "spearman=" << result.spearman << " pairs=" << result.pairs
        << " initial_loss=" << result.initial_loss
        << " final_loss=" << result.final_loss << " steps=" << result.steps
        << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace nngrams
