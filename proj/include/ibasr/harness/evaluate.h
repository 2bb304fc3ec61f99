// ibasr/harness/evaluate.h
//
// Test-set decoding and scoring at a given bias-list size, plus the files
// that make every score reproducible: an N-best file per (system, M) and a
// reference file listing each utterance's words and bias-list words.
//
// Reference file rows:  utt_id <TAB> reference words <TAB> bias-list words

#ifndef IBASR_HARNESS_EVALUATE_H_
#define IBASR_HARNESS_EVALUATE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibasr/datagen/bias_list.h"
#include "ibasr/datagen/corpus.h"
#include "ibasr/decoding/decoding.h"
#include "ibasr/metrics/metrics.h"
#include "ibasr/model/transducer_model.h"

namespace ibasr {

// The test list of utterance `index` at size M. Depends only on (seed,
// index, M), so every system sees the same lists.
BiasList test_bias_list(const SyntheticCorpus& corpus, std::size_t index,
                        std::size_t M, std::uint64_t seed, std::size_t l_max = 10);

struct DecodedUtterance {
  std::string id;
  std::vector<std::string> ref;
  std::vector<std::string> bias_words;  // words of the test list
  std::vector<Hypothesis> nbest;
};

struct Evaluation {
  std::size_t bias_size = 0;
  std::vector<DecodedUtterance> utterances;
  ErrorBreakdown counts;
};

// Best hypothesis's words, or nothing for an empty N-best.
std::vector<std::string> best_words(const DecodedUtterance& u, const Lexicon& lexicon);

// Decodes the first `limit` test utterances (all when 0). Without biasing
// the model ignores the list, which still decides the biased words.
Evaluation evaluate(const ParameterSet& params, const ModelConfig& model,
                    const SyntheticCorpus& corpus, std::size_t M,
                    const DecodeConfig& decode, std::uint64_t list_seed,
                    std::size_t limit = 0,
                    const std::function<void(std::size_t)>& progress = {});

// Scores decoded utterances with the same attribution rules as evaluate.
ErrorBreakdown score(const std::vector<DecodedUtterance>& utts, const Lexicon& lexicon);

void write_references(std::ostream& os, const std::vector<DecodedUtterance>& utts);
void write_evaluation_nbest(std::ostream& os, const Evaluation& e, const Lexicon& lexicon);

// Recomputes corpus counts from an N-best file (rank-1 rows) and a reference
// file alone. Utterances without an N-best row count as empty hypotheses.
// Throws DataError for malformed files or unknown utterance ids.
ErrorBreakdown score_files(std::istream& nbest, std::istream& references);

}  // namespace ibasr

#endif  // IBASR_HARNESS_EVALUATE_H_
