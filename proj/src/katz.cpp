#include "nngrams/katz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace nngrams {

namespace {

// Discount factors d_r for r = 1..k (index r-1); 1.0 beyond the cutoff.
std::vector<double> order_discounts(const NGramStore& store, int order,
                                    int k) {
  std::vector<std::uint64_t> cc(static_cast<std::size_t>(k) + 2, 0);
  bool any = false;
  for (const auto& [gram, count] : store.grams_of_order(order)) {
    any = true;
    if (count <= static_cast<std::uint64_t>(k) + 1) {
      ++cc[count];
    }
  }
  std::vector<double> d(static_cast<std::size_t>(k), 0.5);
  if (!any) {
    return d;  // unused: no grams at this order
  }
  bool gt_ok = true;
  for (int r = 1; r <= k + 1; ++r) {
    if (cc[static_cast<std::size_t>(r)] == 0) {
      gt_ok = false;
    }
  }
  if (gt_ok) {
    const double a = (k + 1.0) * static_cast<double>(cc[static_cast<std::size_t>(k) + 1]) /
                     static_cast<double>(cc[1]);
    if (a >= 1.0) {
      gt_ok = false;
    } else {
      for (int r = 1; r <= k && gt_ok; ++r) {
        const double rstar = (r + 1.0) *
                             static_cast<double>(cc[static_cast<std::size_t>(r) + 1]) /
                             static_cast<double>(cc[static_cast<std::size_t>(r)]);
        const double dr = (rstar / r - a) / (1.0 - a);
        if (!(dr > 0.0) || dr > 1.0) {
          gt_ok = false;
        } else {
          d[static_cast<std::size_t>(r) - 1] = dr;
        }
      }
    }
  }
  if (!gt_ok) {
    // Absolute discounting: subtract 0.5 from each discounted count.
    for (int r = 1; r <= k; ++r) {
      d[static_cast<std::size_t>(r) - 1] = (r - 0.5) / r;
    }
  }
  return d;
}

}  // namespace

double KatzLM::cond_level(int level, WordId word, const WordId* hist_text,
                          int len) const {
  if (level == 1) {
    return unigram_[static_cast<std::size_t>(word)];
  }
  const Level& lv = levels_[static_cast<std::size_t>(level) - 2];
  IdSeq key(hist_text, hist_text + len);
  auto hit = lv.alphas.find(key);
  if (hit == lv.alphas.end()) {
    // Unseen history: conditional is the lower-order distribution exactly.
    return cond_level(level - 1, word, hist_text + 1, len - 1);
  }
  key.push_back(word);
  auto pit = lv.probs.find(key);
  if (pit != lv.probs.end()) {
    return pit->second;
  }
  return hit->second * cond_level(level - 1, word, hist_text + 1, len - 1);
}

double KatzLM::cond_prob(WordId word, const IdSeq& history) const {
  if (word < 0 || word >= vocab_size_) {
    throw ValidationError("word id out of range");
  }
  const int hist_len = order_ - 1;
  if (static_cast<int>(history.size()) < hist_len) {
    throw ValidationError("history shorter than order-1; pad with <s>");
  }
  // Nearest-first -> text order: reverse the first order-1 entries.
  IdSeq text(history.begin(), history.begin() + hist_len);
  std::reverse(text.begin(), text.end());
  return cond_level(order_, word, text.data(), hist_len);
}

std::vector<double> KatzLM::conditional_distribution(const IdSeq& history) const {
  std::vector<double> dist(static_cast<std::size_t>(vocab_size_));
  for (WordId w = 0; w < vocab_size_; ++w) {
    dist[static_cast<std::size_t>(w)] = cond_prob(w, history);
  }
  return dist;
}

WordId KatzLM::sample_conditional(const IdSeq& history, Rng& rng) const {
  std::vector<double> cdf = conditional_distribution(history);
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    cdf[i] += cdf[i - 1];
  }
  return static_cast<WordId>(rng.categorical_cdf(cdf));
}

std::vector<IdSeq> KatzLM::stored_histories(int level) const {
  if (level < 2 || level > order_) {
    throw ValidationError("level out of range 2..order");
  }
  std::vector<IdSeq> out;
  for (const auto& [hist, alpha] : levels_[static_cast<std::size_t>(level) - 2].alphas) {
    out.push_back(hist);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double KatzLM::backoff_weight(int level, const IdSeq& history_text) const {
  if (level < 2 || level > order_) {
    throw ValidationError("level out of range 2..order");
  }
  const auto& alphas = levels_[static_cast<std::size_t>(level) - 2].alphas;
  auto it = alphas.find(history_text);
  return it == alphas.end() ? 1.0 : it->second;
}

KatzLM estimate_katz(const NGramStore& store, WordId vocab_size, int order,
                     int gt_cutoff) {
  if (order < 1 || order > store.max_order()) {
    throw ValidationError("katz order out of range 1..store.max_order");
  }
  if (vocab_size < 3) {
    throw ValidationError("vocabulary too small");
  }
  if (gt_cutoff < 1) {
    throw ValidationError("gt_cutoff must be >= 1");
  }
  KatzLM lm;
  lm.order_ = order;
  lm.vocab_size_ = vocab_size;
  lm.gt_cutoff_ = gt_cutoff;

  // Unigram level: relative frequency with an eps floor on unseen words,
  // renormalized so the level sums to 1.
  const std::uint64_t total = store.total_tokens();
  const double eps_u =
      1.0 / (static_cast<double>(vocab_size) * (static_cast<double>(total) + 1.0));
  lm.unigram_.assign(static_cast<std::size_t>(vocab_size), 0.0);
  double mass = 0.0;
  for (WordId w = 0; w < vocab_size; ++w) {
    const std::uint64_t c = store.lookup({w});
    const double q =
        (c > 0 && total > 0) ? static_cast<double>(c) / static_cast<double>(total)
                             : eps_u;
    lm.unigram_[static_cast<std::size_t>(w)] = q;
    mass += q;
  }
  for (double& p : lm.unigram_) {
    p /= mass;
  }

  lm.levels_.resize(order >= 2 ? static_cast<std::size_t>(order) - 1 : 0);
  for (int n = 2; n <= order; ++n) {
    const std::vector<double> d = order_discounts(store, n, gt_cutoff);
    auto discount = [&](std::uint64_t r) {
      return r <= static_cast<std::uint64_t>(gt_cutoff)
                 ? d[static_cast<std::size_t>(r) - 1]
                 : 1.0;
    };

    // Group grams of this order by history prefix.
    std::map<IdSeq, std::vector<std::pair<WordId, std::uint64_t>>> by_hist;
    for (const auto& [gram, count] : store.grams_of_order(n)) {
      IdSeq hist(gram.begin(), gram.end() - 1);
      by_hist[hist].emplace_back(gram.back(), count);
    }

    KatzLM::Level& lv = lm.levels_[static_cast<std::size_t>(n) - 2];
    for (const auto& [hist, conts] : by_hist) {
      double cont_total = 0.0;
      for (const auto& [w, c] : conts) {
        cont_total += static_cast<double>(c);
      }
      std::vector<double> praw(conts.size());
      double seen_sum = 0.0;
      for (std::size_t i = 0; i < conts.size(); ++i) {
        praw[i] = discount(conts[i].second) *
                  static_cast<double>(conts[i].second) / cont_total;
        seen_sum += praw[i];
      }
      // Lower-order mass of the seen continuation set, via the already
      // built level n-1 (drop the oldest history word).
      double seen_lower = 0.0;
      for (const auto& [w, c] : conts) {
        seen_lower += lm.cond_level(n - 1, w, hist.data() + 1,
                                    static_cast<int>(hist.size()) - 1);
      }
      const double lower_rest = 1.0 - seen_lower;

      double alpha;
      if (lower_rest <= 1e-12) {
        // Seen continuations cover the whole vocabulary; nothing to back
        // off to. Renormalize the seen mass. Unreachable in framed corpora
        // (no n-gram ever ends in <s>) but kept for safety.
        for (double& p : praw) {
          p /= seen_sum;
        }
        alpha = 0.0;
      } else {
        double leftover = 1.0 - seen_sum;
        if (leftover < kKatzLeftoverFloor) {
          const double scale = (1.0 - kKatzLeftoverFloor) / seen_sum;
          for (double& p : praw) {
            p *= scale;
          }
          leftover = kKatzLeftoverFloor;
        }
        alpha = leftover / lower_rest;
      }

      IdSeq gram(hist);
      gram.push_back(0);
      for (std::size_t i = 0; i < conts.size(); ++i) {
        gram.back() = conts[i].first;
        lv.probs[gram] = praw[i];
      }
      lv.alphas[hist] = alpha;
    }
  }
  return lm;
}

void KatzLM::export_arpa(const std::string& path,
                         const Vocabulary& vocab) const {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "\\data\\\n";
  out << "ngram 1=" << vocab_size_ << '\n';
  for (int n = 2; n <= order_; ++n) {
    out << "ngram " << n << '='
        << levels_[static_cast<std::size_t>(n) - 2].probs.size() << '\n';
  }
  out << '\n';

  auto log10p = [](double p) { return std::log10(p); };

  out << "\\1-grams:\n";
  for (WordId w = 0; w < vocab_size_; ++w) {
    out << log10p(unigram_[static_cast<std::size_t>(w)]) << '\t'
        << vocab.word(w);
    if (order_ >= 2) {
      out << '\t' << log10p(backoff_weight(2, {w}));
    }
    out << '\n';
  }
  for (int n = 2; n <= order_; ++n) {
    out << "\n\\" << n << "-grams:\n";
    const Level& lv = levels_[static_cast<std::size_t>(n) - 2];
    std::vector<std::pair<IdSeq, double>> grams(lv.probs.begin(),
                                                lv.probs.end());
    std::sort(grams.begin(), grams.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [gram, p] : grams) {
      out << log10p(p);
      for (WordId id : gram) {
        out << '\t' << vocab.word(id);
      }
      if (n < order_) {
        out << '\t' << log10p(backoff_weight(n + 1, gram));
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  atomic_write_file(path, out.str());
}

}  // namespace nngrams
