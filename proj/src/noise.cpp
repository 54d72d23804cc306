#include "nngrams/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nngrams {

std::vector<NoiseSample> text_noise(const KatzLM& lm, const IdSeq& history,
                                    int f, Rng& rng) {
  if (f < 1) {
    throw ValidationError("noise sample count f must be >= 1");
  }
  std::vector<double> dist = lm.conditional_distribution(history);
  std::vector<double> cdf(dist);
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    cdf[i] += cdf[i - 1];
  }
  std::vector<NoiseSample> out(static_cast<std::size_t>(f));
  for (auto& s : out) {
    const auto w = static_cast<WordId>(rng.categorical_cdf(cdf));
    s.word = w;
    s.log_prob = std::log(dist[static_cast<std::size_t>(w)]);
  }
  return out;
}

const TextNoiseSource::Dist& TextNoiseSource::distribution(
    const IdSeq& history) {
  IdSeq key(history.begin(),
            history.begin() + std::min<std::size_t>(history.size(),
                                                    static_cast<std::size_t>(
                                                        lm_.order() - 1)));
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    return it->second;
  }
  Dist d;
  std::vector<double> dist = lm_.conditional_distribution(key);
  d.log_prob.resize(dist.size());
  d.cdf.resize(dist.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    d.log_prob[i] = std::log(dist[i]);
    acc += dist[i];
    d.cdf[i] = acc;
  }
  return cache_.emplace(std::move(key), std::move(d)).first->second;
}

std::optional<NoiseDraw> TextNoiseSource::draw(const std::string&,
                                               std::size_t, WordId word,
                                               const IdSeq& history, int f,
                                               Rng& rng) {
  const Dist& d = distribution(history);
  NoiseDraw out;
  out.samples.resize(static_cast<std::size_t>(f));
  for (auto& s : out.samples) {
    const auto w = static_cast<WordId>(rng.categorical_cdf(d.cdf));
    s.word = w;
    s.log_prob = d.log_prob[static_cast<std::size_t>(w)];
  }
  out.data_log_noise_prob = d.log_prob[static_cast<std::size_t>(word)];
  return out;
}

void SpeechNoiseTable::add(const std::string& utt_id, std::size_t position,
                           Position pos) {
  entries_[{utt_id, position}] = std::move(pos);
}

const SpeechNoiseTable::Position* SpeechNoiseTable::find(
    const std::string& utt_id, std::size_t position) const {
  auto it = entries_.find({utt_id, position});
  return it == entries_.end() ? nullptr : &it->second;
}

void SpeechNoiseTable::save(const std::string& path) const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [key, pos] : entries_) {
    out << key.first << ' ' << key.second << ' ' << pos.best_word << ':'
        << pos.best_posterior;
    for (const auto& alt : pos.alternatives) {
      out << ' ' << alt.word << ':' << alt.posterior;
    }
    out << '\n';
  }
  atomic_write_file(path, out.str());
}

namespace {

std::pair<std::string, double> split_word_posterior(const std::string& tok) {
  const auto colon = tok.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
    throw DataError("bad word:posterior token: " + tok);
  }
  return {tok.substr(0, colon), std::stod(tok.substr(colon + 1))};
}

}  // namespace

SpeechNoiseTable SpeechNoiseTable::load(const std::string& path,
                                        const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open speech noise table: " + path);
  }
  SpeechNoiseTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string utt, best_tok;
    std::size_t position = 0;
    if (!(iss >> utt >> position >> best_tok)) {
      throw DataError("bad speech noise line: " + line);
    }
    Position pos;
    auto [best_word, best_post] = split_word_posterior(best_tok);
    pos.best_word = best_word;
    pos.best_id = vocab.id_or_unk(best_word);
    pos.best_posterior = best_post;
    std::string tok;
    while (iss >> tok) {
      auto [word, p] = split_word_posterior(tok);
      Alternative alt;
      alt.word = word;
      alt.id = vocab.id_or_unk(word);
      alt.posterior = p;
      pos.alternatives.push_back(std::move(alt));
    }
    if (pos.alternatives.empty()) {
      throw DataError("speech noise position without alternatives: " + line);
    }
    table.add(utt, position, std::move(pos));
  }
  return table;
}

SpeechNoiseTable build_speech_noise(
    const std::vector<std::pair<std::string, Lattice>>& lattices,
    double confidence_threshold, const Vocabulary& vocab) {
  SpeechNoiseTable table;
  for (const auto& [utt_id, lattice] : lattices) {
    const std::vector<int> best = lattice.one_best();
    const std::vector<double> post = lattice.edge_posteriors();
    double log_conf = 0.0;
    for (int ei : best) {
      log_conf += std::log(std::max(post[static_cast<std::size_t>(ei)],
                                    1e-300));
    }
    const double confidence =
        std::exp(log_conf / static_cast<double>(best.size()));
    if (confidence < confidence_threshold) {
      table.note_skipped_lattice();
      continue;
    }
    const PinchedAlignment alignment = pinch(lattice, best);
    for (std::size_t p = 0; p < alignment.positions.size(); ++p) {
      const PinchPosition& pin = alignment.positions[p];
      if (pin.excluded != ExcludeReason::kNone) {
        continue;
      }
      SpeechNoiseTable::Position pos;
      pos.best_word = pin.word;
      pos.best_id = vocab.id_or_unk(pin.word);
      pos.best_posterior = pin.best_posterior;
      double alt_mass = 0.0;
      for (const auto& [words, mass] : pin.confusions) {
        alt_mass += mass;
      }
      for (const auto& [words, mass] : pin.confusions) {
        SpeechNoiseTable::Alternative alt;
        alt.word = words.front();  // single word: rule b already applied
        alt.id = vocab.id_or_unk(alt.word);
        alt.posterior = mass / alt_mass;
        pos.alternatives.push_back(std::move(alt));
      }
      table.add(utt_id, p, std::move(pos));
    }
  }
  return table;
}

std::optional<std::vector<NoiseSample>> speech_noise(
    const SpeechNoiseTable& table, const std::string& utt_id,
    std::size_t position, int f, Rng& rng) {
  const SpeechNoiseTable::Position* pos = table.find(utt_id, position);
  if (pos == nullptr) {
    return std::nullopt;
  }
  std::vector<double> cdf(pos->alternatives.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += pos->alternatives[i].posterior;
    cdf[i] = acc;
  }
  std::vector<NoiseSample> out;
  out.reserve(static_cast<std::size_t>(f));
  for (int i = 0; i < f; ++i) {
    bool drew = false;
    for (int attempt = 0; attempt < 100 && !drew; ++attempt) {
      const auto& alt = pos->alternatives[rng.categorical_cdf(cdf)];
      // Vocabulary mapping can collide an alternative with the data word
      // (<unk> vs <unk>); such draws are rejected.
      if (alt.id == pos->best_id) {
        continue;
      }
      out.push_back({alt.id, std::log(alt.posterior)});
      drew = true;
    }
    if (!drew) {
      return std::nullopt;  // skip token
    }
  }
  return out;
}

std::optional<NoiseDraw> SpeechNoiseSource::draw(const std::string& utt_id,
                                                 std::size_t position,
                                                 WordId word,
                                                 const IdSeq& history, int f,
                                                 Rng& rng) {
  auto samples = speech_noise(table_, utt_id, position, f, rng);
  if (!samples.has_value()) {
    return std::nullopt;
  }
  const SpeechNoiseTable::Position* pos = table_.find(utt_id, position);
  NoiseDraw out;
  out.samples = std::move(*samples);
  out.data_log_noise_prob =
      std::log(std::max(pos->best_posterior, kSpeechDataProbFloor));
  return out;
}

}  // namespace nngrams
