// ibasr/datagen/bias_list.cc

#include "ibasr/datagen/bias_list.h"

#include <algorithm>
#include <set>

#include "ibasr/errors.h"

namespace ibasr {
namespace {

// Token offset of each word in a separator-joined transcript.
std::vector<std::size_t> word_offsets(const Utterance& utt,
                                      const Lexicon& lexicon) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  for (const auto& w : utt.words) {
    out.push_back(pos);
    pos += lexicon.spelling(w).size() + 1;
  }
  return out;
}

}  // namespace

BiasList::BiasList(std::size_t l_max) : l_max(l_max) {
  if (l_max == 0) throw ConfigError("l_max must be positive");
  phrases.push_back({Vocab::kNoBias});
  words.emplace_back();
}

bool BiasList::add(std::vector<int> tokens,
                   std::vector<std::string> phrase_words) {
  if (tokens.empty()) throw DataError("empty bias phrase");
  if (tokens.size() > l_max) {
    throw DataError("bias phrase of " + std::to_string(tokens.size()) +
                    " tokens exceeds l_max = " + std::to_string(l_max));
  }
  if (std::find(phrases.begin(), phrases.end(), tokens) != phrases.end()) {
    return false;
  }
  phrases.push_back(std::move(tokens));
  words.push_back(std::move(phrase_words));
  return true;
}

std::vector<std::vector<int>> BiasList::padded() const {
  std::vector<std::vector<int>> out = phrases;
  for (auto& p : out) p.resize(l_max, Vocab::kPad);
  return out;
}

std::vector<std::string> BiasList::word_set() const {
  std::set<std::string> s;
  for (const auto& p : words) s.insert(p.begin(), p.end());
  return {s.begin(), s.end()};
}

std::vector<TokenSpan> find_covered_spans(const Utterance& utt,
                                          const BiasList& list,
                                          const Lexicon& lexicon) {
  std::vector<TokenSpan> spans;
  const std::size_t n = utt.words.size();
  const std::vector<std::size_t> offsets = word_offsets(utt, lexicon);
  auto word_end = [&](std::size_t w) {
    return offsets[w] + lexicon.spelling(utt.words[w]).size();
  };

  std::size_t w = 0;
  while (w < n) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < list.size(); ++p) {
      const auto& pw = list.words[p];
      if (pw.empty() || pw.size() <= best || w + pw.size() > n) continue;
      if (std::equal(pw.begin(), pw.end(), utt.words.begin() + w)) {
        best = pw.size();
      }
    }
    if (best > 0) {
      spans.push_back({offsets[w], word_end(w + best - 1)});
      w += best;
    } else {
      ++w;
    }
  }
  return spans;
}

TrainingBias sample_training_bias(std::span<const Utterance> batch,
                                  const Lexicon& lexicon, std::mt19937_64& rng,
                                  const TrainingBiasOptions& options) {
  if (batch.empty()) throw ContractError("sample_training_bias: empty batch");
  if (options.min_phrases > options.max_phrases || options.max_phrase_words < 1) {
    throw ConfigError("bad training bias options");
  }
  TrainingBias out{BiasList(options.l_max), {}};
  std::uniform_int_distribution<std::size_t> count(options.min_phrases,
                                                   options.max_phrases);
  for (const auto& utt : batch) {
    const std::size_t draws = count(rng);
    const std::size_t n = utt.words.size();
    for (std::size_t d = 0; d < draws && n > 0; ++d) {
      const std::size_t start =
          std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      std::size_t len = std::uniform_int_distribution<std::size_t>(
          1, options.max_phrase_words)(rng);
      len = std::min(len, n - start);
      std::vector<std::string> words(utt.words.begin() + start,
                                     utt.words.begin() + start + len);
      std::vector<int> tokens = lexicon.tokenize(words);
      while (tokens.size() > options.l_max && words.size() > 1) {
        words.pop_back();
        tokens = lexicon.tokenize(words);
      }
      if (tokens.size() > options.l_max) continue;
      out.list.add(std::move(tokens), std::move(words));
    }
  }
  for (const auto& utt : batch) {
    out.covered.push_back(find_covered_spans(utt, out.list, lexicon));
  }
  return out;
}

BiasList build_test_bias_list(const Utterance& utt,
                              std::span<const std::string> pool, std::size_t M,
                              const Lexicon& lexicon, std::mt19937_64& rng,
                              std::size_t l_max) {
  BiasList list(l_max);
  if (M == 0) return list;
  std::vector<std::string> rare;
  for (const auto& w : utt.rare_words) {
    if (std::find(rare.begin(), rare.end(), w) == rare.end()) rare.push_back(w);
  }
  if (M < rare.size()) {
    throw ConfigError("bias size " + std::to_string(M) + " is smaller than the " +
                      std::to_string(rare.size()) + " rare words of " + utt.id);
  }
  std::vector<std::string> candidates;
  std::set<std::string> seen(rare.begin(), rare.end());
  for (const auto& p : pool) {
    if (seen.insert(join_words(split_words(p))).second) {
      candidates.push_back(join_words(split_words(p)));
    }
  }
  const std::size_t need = M - rare.size();
  if (candidates.size() < need) {
    throw ConfigError("distractor pool of " + std::to_string(candidates.size()) +
                      " phrases cannot fill a list of " + std::to_string(M));
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::vector<std::string> entries = rare;
  entries.insert(entries.end(), candidates.begin(), candidates.begin() + need);
  std::shuffle(entries.begin(), entries.end(), rng);
  for (const auto& e : entries) {
    auto words = split_words(e);
    auto tokens = lexicon.tokenize(words);
    list.add(std::move(tokens), std::move(words));
  }
  return list;
}

}  // namespace ibasr
