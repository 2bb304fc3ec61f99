// ibasr/datagen/bias_list.h
//
// Bias lists for training (phrases drawn from the batch's own transcripts)
// and testing (an utterance's rare words padded out with distractors).
//
// Entry 0 of every list is the <no_bias> option. Real phrases are token
// sequences of whole words (words joined by the separator token) and are
// never longer than l_max tokens.

#ifndef IBASR_DATAGEN_BIAS_LIST_H_
#define IBASR_DATAGEN_BIAS_LIST_H_

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ibasr/datagen/corpus.h"
#include "ibasr/datagen/vocab.h"

namespace ibasr {

struct BiasList {
  std::vector<std::vector<int>> phrases;          // [0] = {<no_bias>}
  std::vector<std::vector<std::string>> words;    // [0] empty
  std::size_t l_max = 10;

  BiasList() = default;
  explicit BiasList(std::size_t l_max);

  std::size_t size() const { return phrases.size(); }
  // Number of real phrases.
  std::size_t M() const { return phrases.size() - 1; }

  // Appends a phrase unless an identical one is present. Returns whether it
  // was added. Throws DataError if the phrase is empty or longer than l_max.
  bool add(std::vector<int> tokens, std::vector<std::string> phrase_words);

  // Every phrase padded with the pad id to exactly l_max tokens.
  std::vector<std::vector<int>> padded() const;

  // Set of words appearing in any real phrase.
  std::vector<std::string> word_set() const;
};

// Half-open token range [begin, end) of a transcript.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct TrainingBiasOptions {
  std::size_t min_phrases = 0;       // per utterance, drawn uniformly
  std::size_t max_phrases = 2;
  std::size_t max_phrase_words = 2;  // phrase length drawn from 1..this
  std::size_t l_max = 10;
};

struct TrainingBias {
  BiasList list;
  // For each utterance, the non-overlapping transcript spans matched by
  // list phrases (leftmost, longest first), in increasing order.
  std::vector<std::vector<TokenSpan>> covered;
};

// Draws each utterance's phrases, pools and dedupes them into one list
// shared by the whole batch and reports where each utterance's transcript is
// covered by any list phrase. Throws ContractError on an empty batch.
TrainingBias sample_training_bias(std::span<const Utterance> batch,
                                  const Lexicon& lexicon, std::mt19937_64& rng,
                                  const TrainingBiasOptions& options = {});

// Covered spans of `utt` for an arbitrary list: occurrences of list phrases
// at word boundaries, chosen greedily leftmost-longest and non-overlapping.
std::vector<TokenSpan> find_covered_spans(const Utterance& utt,
                                          const BiasList& list,
                                          const Lexicon& lexicon);

// Test-time list: the utterance's rare words plus distractors sampled from
// `pool` (one phrase per entry, words separated by spaces) so that exactly M
// real phrases remain after deduplication. M = 0 gives the <no_bias>-only
// list. Throws ConfigError when M is smaller than the number of rare words
// or the pool cannot fill the list.
BiasList build_test_bias_list(const Utterance& utt,
                              std::span<const std::string> pool, std::size_t M,
                              const Lexicon& lexicon, std::mt19937_64& rng,
                              std::size_t l_max = 10);

}  // namespace ibasr

#endif  // IBASR_DATAGEN_BIAS_LIST_H_
