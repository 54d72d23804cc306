#include "nngrams/corpus.hpp"

#include <fstream>
#include <sstream>

namespace nngrams {

TokenizedSentence tokenize(const std::string& line, const Vocabulary& vocab) {
  TokenizedSentence sent;
  sent.ids.push_back(Vocabulary::kBos);
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) {
    sent.ids.push_back(vocab.id_or_unk(tok));
  }
  sent.ids.push_back(Vocabulary::kEos);
  return sent;
}

void for_each_window(const TokenizedSentence& sentence, int k,
                     const std::function<void(const Window&)>& fn) {
  if (k < 1) {
    throw ValidationError("window history length K must be >= 1");
  }
  const IdSeq& ids = sentence.ids;
  Window w;
  w.history.resize(static_cast<std::size_t>(k));
  for (std::size_t pos = 1; pos < ids.size(); ++pos) {
    w.word = ids[pos];
    for (int j = 0; j < k; ++j) {
      std::ptrdiff_t src = static_cast<std::ptrdiff_t>(pos) - 1 - j;
      w.history[static_cast<std::size_t>(j)] =
          src >= 0 ? ids[static_cast<std::size_t>(src)] : Vocabulary::kBos;
    }
    fn(w);
  }
}

std::vector<Window> iter_windows(const TokenizedSentence& sentence, int k) {
  std::vector<Window> out;
  for_each_window(sentence, k, [&](const Window& w) { out.push_back(w); });
  return out;
}

std::vector<TokenizedSentence> read_corpus(const std::string& path,
                                           const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open corpus file: " + path);
  }
  std::vector<TokenizedSentence> out;
  std::string line;
  while (std::getline(in, line)) {
    out.push_back(tokenize(line, vocab));
  }
  return out;
}

}  // namespace nngrams
