// ibasr/datagen/corpus.h
//
// Synthetic "speech" corpus. Every token owns a fixed D-dimensional
// embedding; an utterance's features are frames_per_token noisy copies of
// each token's embedding in transcript order.
//
// Tokens are syllables. Each acoustic unit has a base spelling ("ka") and a
// variant spelling ("kha") whose embedding differs from the base by
// `variant_offset` (0 = exact homophones). Common words are spelled with base
// syllables only; every rare word contains at least one variant syllable, so
// acoustics alone cannot tell a rare spelling from the common one and the
// recognizer needs the bias list to get it right.

#ifndef IBASR_DATAGEN_CORPUS_H_
#define IBASR_DATAGEN_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibasr/datagen/vocab.h"
#include "ibasr/numerics/tensor.h"

namespace ibasr {

struct CorpusConfig {
  std::size_t vocab_words = 240;     // common + rare words
  std::size_t rare_words = 200;      // must be < vocab_words
  std::size_t acoustic_units = 16;   // base syllables (each also has a variant)
  std::size_t max_word_tokens = 2;   // words are 1..max_word_tokens syllables
  std::size_t frames_per_token = 2;
  std::size_t feature_dim = 16;
  double noise = 0.5;                // per-frame Gaussian sigma
  double variant_offset = 0.0;
  std::size_t train_utterances = 2000;
  std::size_t test_utterances = 200;
  std::size_t min_words = 3;
  std::size_t max_words = 5;
  // Cap on the fraction of training utterances any single rare word may
  // appear in.
  double rare_rate = 0.02;
  // Fraction of training utterances that carry one rare word.
  double rare_utterance_fraction = 0.3;
  // Test utterances carry 1..max_test_rare rare words.
  std::size_t max_test_rare = 2;

  // Throws ConfigError for degenerate settings.
  void validate() const;
};

struct Utterance {
  std::string id;
  std::vector<int> transcript;         // token ids, separators included
  std::vector<std::string> words;
  Tensor features;                     // T x D
  std::vector<std::string> rare_words; // subset of words
};

struct SyntheticCorpus {
  CorpusConfig config;
  std::uint64_t seed = 0;
  Lexicon lexicon{Vocab()};
  std::vector<std::string> rare_words;  // full rare inventory
  std::vector<Utterance> train;
  std::vector<Utterance> test;

  // Test-time distractor phrases: the rare-word inventory, one word each.
  std::vector<std::string> distractor_pool() const { return rare_words; }
};

// Pure function of (config, seed).
SyntheticCorpus synth_corpus(const CorpusConfig& config, std::uint64_t seed);

// --- Files ---------------------------------------------------------------
//
// A corpus directory holds:
//   config.json        generation config and seed
//   vocab.txt          one token per line; line index = token id
//   lexicon.txt        "<word> <token id> <token id> ..." per line
//   rare_words.txt     one rare word per line
//   distractors.txt    distractor pool, one phrase per line
//   train.utt, test.utt  utterance records (see write_utterances)
//
// Utterance record layout (text, one record after another):
//   utt <id> <T> <D>
//   words <w1> <w2> ...
//   tokens <id1> <id2> ...
//   rare <w> ...            (line present, possibly with no words)
//   T lines of D space-separated features in shortest round-trip decimal
void write_utterances(std::ostream& os, const std::vector<Utterance>& utts);
std::vector<Utterance> read_utterances(std::istream& is);

void write_corpus(const std::filesystem::path& dir,
                  const SyntheticCorpus& corpus);
SyntheticCorpus read_corpus(const std::filesystem::path& dir);

std::vector<std::string> read_phrase_list(const std::filesystem::path& path);

}  // namespace ibasr

#endif  // IBASR_DATAGEN_CORPUS_H_
