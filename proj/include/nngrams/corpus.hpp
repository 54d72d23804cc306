#ifndef NNGRAMS_CORPUS_HPP
#define NNGRAMS_CORPUS_HPP

#include <functional>
#include <string>
#include <vector>

#include "nngrams/common.hpp"
#include "nngrams/vocabulary.hpp"

namespace nngrams {

// Ids framed by exactly one leading <s> and one trailing </s>.
struct TokenizedSentence {
  IdSeq ids;
};

// One prediction window: the current word plus its K-word history,
// nearest previous word first. Histories at sentence start are padded
// with <s>. <s> itself is never a predicted word.
struct Window {
  WordId word = 0;
  IdSeq history;  // size K, nearest-first
};

// Out-of-vocabulary words map to <unk>; an empty line yields <s> </s>.
TokenizedSentence tokenize(const std::string& line, const Vocabulary& vocab);

// Emits len(sentence)-1 windows, one per non-<s> token (</s> included).
void for_each_window(const TokenizedSentence& sentence, int k,
                     const std::function<void(const Window&)>& fn);

std::vector<Window> iter_windows(const TokenizedSentence& sentence, int k);

// Whole-corpus ingestion: one sentence per line, whitespace-tokenized.
std::vector<TokenizedSentence> read_corpus(const std::string& path,
                                           const Vocabulary& vocab);

}  // namespace nngrams

#endif
