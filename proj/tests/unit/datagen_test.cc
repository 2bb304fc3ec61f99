#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ibasr/datagen/bias_list.h"
#include "ibasr/datagen/corpus.h"
#include "ibasr/errors.h"

namespace ibasr {
namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.vocab_words = 30;
  c.rare_words = 10;
  c.acoustic_units = 6;
  c.train_utterances = 50;
  c.test_utterances = 10;
  return c;
}

Utterance make_utt(const Lexicon& lex, std::vector<std::string> words,
                   std::vector<std::string> rare = {}) {
  Utterance u;
  u.id = "u";
  u.words = std::move(words);
  u.transcript = lex.tokenize(u.words);
  u.rare_words = std::move(rare);
  return u;
}

// Lexicon where each letter is a token and each word is spelled by its
// letters.
Lexicon letter_lexicon(const std::vector<std::string>& words) {
  Vocab v;
  for (char c = 'a'; c <= 'z'; ++c) v.add(std::string(1, c));
  Lexicon lex(std::move(v));
  for (const auto& w : words) {
    std::vector<int> toks;
    for (char c : w) toks.push_back(lex.vocab().id(std::string(1, c)));
    lex.add_word(w, toks);
  }
  return lex;
}

}  // namespace

TEST_CASE("vocab reserved ids and lexicon round trip") {
  Vocab v;
  CHECK(v.size() == Vocab::kNumReserved);
  CHECK(v.surface(Vocab::kBlank) == "<blank>");
  CHECK(v.surface(Vocab::kDummy) == "#");
  CHECK_FALSE(v.is_emittable(Vocab::kDummy));
  CHECK_THROWS_AS(v.id("zz"), DataError);

  const Lexicon lex = letter_lexicon({"ab", "c"});
  const std::vector<std::string> words{"ab", "c", "ab"};
  const auto toks = lex.tokenize(words);
  CHECK(toks.size() == 2 + 1 + 1 + 1 + 2);
  CHECK(lex.detokenize(toks) == words);
  std::vector<int> with_reserved{Vocab::kBlank};
  with_reserved.insert(with_reserved.end(), toks.begin(), toks.end());
  with_reserved.push_back(Vocab::kDummy);
  CHECK(lex.detokenize(with_reserved) == words);
  CHECK_THROWS_AS(lex.tokenize(std::vector<std::string>{"zz"}), DataError);
  Lexicon bad = lex;
  CHECK_THROWS_AS(bad.add_word("x", {Vocab::kDummy}), DataError);
}

TEST_CASE("synth_corpus: noise-free frames copy the token embedding") {
  CorpusConfig c = small_config();
  c.noise = 0.0;
  c.frames_per_token = 3;
  const SyntheticCorpus corpus = synth_corpus(c, 11);
  std::map<int, std::vector<double>> seen;
  for (const auto& u : corpus.train) {
    REQUIRE(u.features.rows() == 3 * u.transcript.size());
    for (std::size_t i = 0; i < u.transcript.size(); ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        const auto row = u.features.row_span(3 * i + k);
        std::vector<double> v(row.begin(), row.end());
        auto [it, fresh] = seen.emplace(u.transcript[i], v);
        CHECK(it->second == v);
      }
    }
  }
}

TEST_CASE("synth_corpus: frame count and invariants") {
  CorpusConfig c = small_config();
  c.frames_per_token = 3;
  const SyntheticCorpus corpus = synth_corpus(c, 3);
  CHECK(corpus.train.size() == c.train_utterances);
  CHECK(corpus.test.size() == c.test_utterances);
  bool saw_five = false;
  std::set<std::string> rare(corpus.rare_words.begin(), corpus.rare_words.end());
  CHECK(rare.size() == c.rare_words);
  std::map<std::string, std::size_t> uses;
  for (const auto& u : corpus.train) {
    CHECK(u.features.rows() == 3 * u.transcript.size());
    CHECK(u.features.cols() == c.feature_dim);
    CHECK(u.transcript == corpus.lexicon.tokenize(u.words));
    if (u.transcript.size() == 5) {
      saw_five = true;
      CHECK(u.features.rows() == 15);
    }
    for (const auto& w : u.words) {
      if (rare.count(w)) {
        CHECK(std::count(u.rare_words.begin(), u.rare_words.end(), w) == 1);
        ++uses[w];
      }
    }
  }
  (void)saw_five;
  // Per-word cap: at most rare_rate of the training utterances, min 1.
  for (const auto& [w, n] : uses) CHECK(n <= 1);
  for (const auto& u : corpus.test) {
    CHECK(u.rare_words.size() >= 1);
    CHECK(u.rare_words.size() <= c.max_test_rare);
    for (const auto& w : u.rare_words) {
      CHECK(std::find(u.words.begin(), u.words.end(), w) != u.words.end());
    }
  }
}

TEST_CASE("synth_corpus is deterministic in the seed") {
  const CorpusConfig c = small_config();
  const SyntheticCorpus a = synth_corpus(c, 5), b = synth_corpus(c, 5);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].features == b.train[i].features);
    CHECK(a.train[i].words == b.train[i].words);
  }
  CHECK(a.rare_words == b.rare_words);
  const SyntheticCorpus other = synth_corpus(c, 6);
  CHECK_FALSE(other.train[0].features == a.train[0].features);
}

TEST_CASE("synth_corpus config errors") {
  CorpusConfig c = small_config();
  c.vocab_words = 3;
  c.rare_words = 1;
  CHECK_THROWS_AS(synth_corpus(c, 1), ConfigError);
  c = small_config();
  c.rare_words = c.vocab_words;
  CHECK_THROWS_AS(synth_corpus(c, 1), ConfigError);
  c = small_config();
  c.frames_per_token = 0;
  CHECK_THROWS_AS(synth_corpus(c, 1), ConfigError);
  c = small_config();
  c.noise = -1;
  CHECK_THROWS_AS(synth_corpus(c, 1), ConfigError);
}

TEST_CASE("corpus files round trip bit-exactly") {
  const SyntheticCorpus corpus = synth_corpus(small_config(), 9);
  const auto dir = std::filesystem::temp_directory_path() / "ibasr_corpus_rt";
  std::filesystem::remove_all(dir);
  write_corpus(dir, corpus);
  const SyntheticCorpus back = read_corpus(dir);
  CHECK(back.seed == 9);
  CHECK(back.rare_words == corpus.rare_words);
  CHECK(back.lexicon.vocab().tokens() == corpus.lexicon.vocab().tokens());
  CHECK(back.lexicon.words() == corpus.lexicon.words());
  REQUIRE(back.test.size() == corpus.test.size());
  for (std::size_t i = 0; i < corpus.test.size(); ++i) {
    CHECK(back.test[i].features == corpus.test[i].features);
    CHECK(back.test[i].transcript == corpus.test[i].transcript);
    CHECK(back.test[i].rare_words == corpus.test[i].rare_words);
  }
  CHECK(read_phrase_list(dir / "distractors.txt") == corpus.distractor_pool());
  std::filesystem::remove_all(dir);

  std::istringstream bad("utt x 1 2\nwords a\ntokens 5\nrare\n0.5\n");
  CHECK_THROWS_AS(read_utterances(bad), DataError);
}

TEST_CASE("sample_training_bias") {
  const Lexicon lex = letter_lexicon({"ab", "cd", "ef", "gh", "ij", "kl", "mn",
                                      "op", "qr", "st", "uv", "wx"});
  std::vector<Utterance> batch{
      make_utt(lex, {"ab", "cd", "ef"}), make_utt(lex, {"gh", "ij", "kl"}),
      make_utt(lex, {"mn", "op", "qr"}), make_utt(lex, {"st", "uv", "wx"})};
  std::mt19937_64 rng(1);

  SUBCASE("all draws zero") {
    TrainingBiasOptions o;
    o.max_phrases = 0;
    const auto tb = sample_training_bias(batch, lex, rng, o);
    CHECK(tb.list.M() == 0);
    REQUIRE(tb.list.size() == 1);
    CHECK(tb.list.phrases[0] == std::vector<int>{Vocab::kNoBias});
    for (const auto& c : tb.covered) CHECK(c.empty());
  }
  SUBCASE("four utterances with two distinct draws each") {
    // Single-word phrases drawn from disjoint utterances; redraw seeds until
    // the two draws inside each utterance differ.
    TrainingBiasOptions o;
    o.min_phrases = o.max_phrases = 2;
    o.max_phrase_words = 1;
    bool found = false;
    for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
      std::mt19937_64 r(seed);
      const auto tb = sample_training_bias(batch, lex, r, o);
      std::size_t total_distinct = 0;
      for (const auto& c : tb.covered) total_distinct += c.size();
      if (total_distinct == 8) {
        found = true;
        CHECK(tb.list.M() == 8);
        CHECK(tb.list.size() == 9);
      } else {
        CHECK(tb.list.M() == total_distinct);
      }
    }
    CHECK(found);
  }
  SUBCASE("l_max is never exceeded") {
    TrainingBiasOptions o;
    o.min_phrases = o.max_phrases = 2;
    o.l_max = 3;
    for (int i = 0; i < 50; ++i) {
      const auto tb = sample_training_bias(batch, lex, rng, o);
      for (const auto& p : tb.list.padded()) CHECK(p.size() == 3);
      for (const auto& p : tb.list.phrases) CHECK(p.size() <= 3);
    }
  }
  SUBCASE("no duplicates, covered spans are the phrase tokens") {
    for (int i = 0; i < 30; ++i) {
      const auto tb = sample_training_bias(batch, lex, rng);
      std::set<std::vector<int>> s(tb.list.phrases.begin(), tb.list.phrases.end());
      CHECK(s.size() == tb.list.size());
      for (std::size_t b = 0; b < batch.size(); ++b) {
        std::size_t last_end = 0;
        for (const auto& span : tb.covered[b]) {
          CHECK(span.begin >= last_end);
          CHECK(span.end > span.begin);
          last_end = span.end;
          const std::vector<int> piece(batch[b].transcript.begin() + span.begin,
                                       batch[b].transcript.begin() + span.end);
          CHECK(s.count(piece) == 1);
        }
      }
    }
  }
  CHECK_THROWS_AS(sample_training_bias(std::span<const Utterance>{}, lex, rng),
                  ContractError);
}

TEST_CASE("find_covered_spans picks leftmost longest matches") {
  const Lexicon lex = letter_lexicon({"a", "b", "c"});
  const Utterance u = make_utt(lex, {"a", "b", "c", "b"});
  // Tokens: a | b | c | b -> word offsets 0, 2, 4, 6.
  BiasList list(10);
  list.add(lex.tokenize(std::vector<std::string>{"b"}), {"b"});
  list.add(lex.tokenize(std::vector<std::string>{"b", "c"}), {"b", "c"});
  const auto spans = find_covered_spans(u, list, lex);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == TokenSpan{2, 5});
  CHECK(spans[1] == TokenSpan{6, 7});
}

TEST_CASE("build_test_bias_list") {
  std::vector<std::string> words{"x", "y", "z"};
  std::vector<std::string> pool;
  for (char c = 'a'; c <= 'p'; ++c) {
    words.push_back(std::string(1, c));
    pool.push_back(std::string(1, c));
  }
  const Lexicon lex = letter_lexicon(words);
  std::mt19937_64 rng(3);
  const Utterance u = make_utt(lex, {"x", "a", "b"}, {"a", "b"});

  CHECK(build_test_bias_list(u, pool, 0, lex, rng).size() == 1);
  const BiasList l10 = build_test_bias_list(u, pool, 10, lex, rng);
  CHECK(l10.size() == 11);
  CHECK(l10.M() == 10);
  const auto ws = l10.word_set();
  CHECK(std::count(ws.begin(), ws.end(), "a") == 1);
  CHECK(std::count(ws.begin(), ws.end(), "b") == 1);
  std::set<std::vector<int>> s(l10.phrases.begin(), l10.phrases.end());
  CHECK(s.size() == 11);
  CHECK(l10.phrases[0] == std::vector<int>{Vocab::kNoBias});

  // The whole pool: 16 entries, two of them the rare words themselves.
  CHECK(build_test_bias_list(u, pool, 16, lex, rng).M() == 16);
  CHECK_THROWS_AS(build_test_bias_list(u, pool, 17, lex, rng), ConfigError);
  CHECK_THROWS_AS(build_test_bias_list(u, pool, 1, lex, rng), ConfigError);
}

}  // namespace ibasr
