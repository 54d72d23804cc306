#include "nngrams/ngram_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "nngrams/vocabulary.hpp"

namespace nngrams {

NGramStore::NGramStore(int max_order) : max_order_(max_order) {
  if (max_order < 1) {
    throw ValidationError("max_order must be >= 1");
  }
}

void NGramStore::add_sentence(const TokenizedSentence& sentence) {
  const IdSeq& ids = sentence.ids;
  total_tokens_ += ids.size();
  IdSeq gram;
  for (std::size_t start = 0; start < ids.size(); ++start) {
    gram.clear();
    std::size_t max_len =
        std::min<std::size_t>(static_cast<std::size_t>(max_order_),
                              ids.size() - start);
    for (std::size_t len = 1; len <= max_len; ++len) {
      gram.push_back(ids[start + len - 1]);
      ++counts_[gram];
    }
  }
}

void NGramStore::merge(const NGramStore& other) {
  if (other.max_order_ != max_order_) {
    throw ValidationError("cannot merge stores of different max_order");
  }
  total_tokens_ += other.total_tokens_;
  for (const auto& [gram, count] : other.counts_) {
    counts_[gram] += count;
  }
}

std::uint64_t NGramStore::lookup(const IdSeq& gram) const {
  if (gram.empty() || gram.size() > static_cast<std::size_t>(max_order_)) {
    throw ValidationError("lookup length out of range 1.." +
                          std::to_string(max_order_));
  }
  auto it = counts_.find(gram);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::pair<IdSeq, std::uint64_t>> NGramStore::grams_of_order(
    int order) const {
  std::vector<std::pair<IdSeq, std::uint64_t>> out;
  for (const auto& [gram, count] : counts_) {
    if (static_cast<int>(gram.size()) == order) {
      out.emplace_back(gram, count);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::uint64_t NGramStore::distinct_grams(int order) const {
  std::uint64_t n = 0;
  for (const auto& [gram, count] : counts_) {
    if (static_cast<int>(gram.size()) == order) {
      ++n;
    }
  }
  return n;
}

void NGramStore::save(const std::string& path) const {
  std::ostringstream out;
  out << "NGRAMSTORE v1 " << max_order_ << ' ' << total_tokens_ << '\n';
  for (int order = 1; order <= max_order_; ++order) {
    for (const auto& [gram, count] : grams_of_order(order)) {
      out << count;
      for (WordId id : gram) {
        out << ' ' << id;
      }
      out << '\n';
    }
  }
  atomic_write_file(path, out.str());
}

NGramStore NGramStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open ngram store file: " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("empty ngram store file: " + path);
  }
  std::istringstream header(line);
  std::string magic, version;
  int max_order = 0;
  std::uint64_t total_tokens = 0;
  header >> magic >> version >> max_order >> total_tokens;
  if (magic != "NGRAMSTORE" || version != "v1" || !header) {
    throw DataError("bad ngram store header: " + path);
  }
  NGramStore store(max_order);
  store.total_tokens_ = total_tokens;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream iss(line);
    std::uint64_t count = 0;
    if (!(iss >> count)) {
      throw DataError("bad ngram store line: " + line);
    }
    IdSeq gram;
    WordId id;
    while (iss >> id) {
      gram.push_back(id);
    }
    if (gram.empty() || gram.size() > static_cast<std::size_t>(max_order)) {
      throw DataError("ngram order out of range in line: " + line);
    }
    store.counts_[gram] = count;
  }
  return store;
}

NGramStore count_ngrams(const std::vector<TokenizedSentence>& corpus,
                        int max_order) {
  NGramStore store(max_order);
  for (const auto& sentence : corpus) {
    store.add_sentence(sentence);
  }
  return store;
}

std::vector<std::uint64_t> count_matrix(const NGramStore& store,
                                        const IdSeq& window, int n) {
  if (n < 1 || n > store.max_order()) {
    throw ValidationError("count order N out of range 1..max_order");
  }
  const std::size_t rows = window.size();
  std::vector<std::uint64_t> matrix(rows * static_cast<std::size_t>(n));
  // window[j] is w_{i-j}; the order-m gram ending there reads, in text
  // order, window[j+m-1] .. window[j], with <s> past the window edge.
  IdSeq gram;
  for (std::size_t j = 0; j < rows; ++j) {
    for (int m = 1; m <= n; ++m) {
      gram.clear();
      for (int p = m - 1; p >= 0; --p) {
        std::size_t idx = j + static_cast<std::size_t>(p);
        gram.push_back(idx < rows ? window[idx] : Vocabulary::kBos);
      }
      matrix[j * static_cast<std::size_t>(n) + static_cast<std::size_t>(m - 1)] =
          store.lookup(gram);
    }
  }
  return matrix;
}

}  // namespace nngrams
