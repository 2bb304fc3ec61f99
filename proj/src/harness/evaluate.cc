// ibasr/harness/evaluate.cc

#include "ibasr/harness/evaluate.h"

#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "ibasr/errors.h"
#include "ibasr/numerics/layers.h"

namespace ibasr {

BiasList test_bias_list(const SyntheticCorpus& corpus, std::size_t index, std::size_t M,
                        std::uint64_t seed, std::size_t l_max) {
  if (index >= corpus.test.size()) throw ContractError("test utterance index out of range");
  std::mt19937_64 rng(parameter_seed(seed, "test-list/" + std::to_string(index) + "/" +
                                               std::to_string(M)));
  const auto pool = corpus.distractor_pool();
  return build_test_bias_list(corpus.test[index], pool, M, corpus.lexicon, rng, l_max);
}

std::vector<std::string> best_words(const DecodedUtterance& u, const Lexicon& lexicon) {
  if (u.nbest.empty()) return {};
  return lexicon.detokenize(u.nbest.front().prefix);
}

ErrorBreakdown score(const std::vector<DecodedUtterance>& utts, const Lexicon& lexicon) {
  ErrorBreakdown total;
  for (const auto& u : utts) {
    const WordSet bias(u.bias_words.begin(), u.bias_words.end());
    total += wer_breakdown(u.ref, best_words(u, lexicon), bias);
  }
  return total;
}

Evaluation evaluate(const ParameterSet& params, const ModelConfig& model,
                    const SyntheticCorpus& corpus, std::size_t M,
                    const DecodeConfig& decode, std::uint64_t list_seed, std::size_t limit,
                    const std::function<void(std::size_t)>& progress) {
  const std::size_t n =
      limit == 0 ? corpus.test.size() : std::min(limit, corpus.test.size());
  Evaluation e;
  e.bias_size = M;
  for (std::size_t i = 0; i < n; ++i) {
    const Utterance& u = corpus.test[i];
    const BiasList list = test_bias_list(corpus, i, M, list_seed);
    DecodedUtterance d{u.id, u.words, list.word_set(),
                       joint_decode(params, model, u.features, list, decode)};
    e.utterances.push_back(std::move(d));
    if (progress) progress(i + 1);
  }
  e.counts = score(e.utterances, corpus.lexicon);
  return e;
}

void write_references(std::ostream& os, const std::vector<DecodedUtterance>& utts) {
  os << "utt_id\tref\tbias_words\n";
  for (const auto& u : utts) {
    os << u.id << '\t' << join_words(u.ref) << '\t' << join_words(u.bias_words) << '\n';
  }
}

void write_evaluation_nbest(std::ostream& os, const Evaluation& e, const Lexicon& lexicon) {
  write_nbest_header(os);
  for (const auto& u : e.utterances) write_nbest(os, u.id, u.nbest, lexicon);
}

ErrorBreakdown score_files(std::istream& nbest, std::istream& references) {
  std::map<std::string, std::vector<std::string>> best;
  for (auto& entry : read_nbest(nbest)) {
    if (entry.rank == 1) best[entry.utt_id] = std::move(entry.words);
  }
  ErrorBreakdown total;
  std::string line;
  bool first = true;
  std::size_t matched = 0;
  while (std::getline(references, line)) {
    if (first) {
      first = false;
      if (line.rfind("utt_id\t", 0) == 0) continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (!line.empty() && line.back() == '\t') cols.emplace_back();
    if (cols.size() != 3) throw DataError("malformed reference row '" + line + "'");
    const auto bias_list = split_words(cols[2]);
    const WordSet bias(bias_list.begin(), bias_list.end());
    auto it = best.find(cols[0]);
    std::vector<std::string> hyp;
    if (it != best.end()) {
      hyp = it->second;
      ++matched;
    }
    total += wer_breakdown(split_words(cols[1]), hyp, bias);
  }
  if (matched != best.size()) throw DataError("N-best file names utterances missing from the references");
  return total;
}

}  // namespace ibasr
