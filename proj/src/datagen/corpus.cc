// ibasr/datagen/corpus.cc

#include "ibasr/datagen/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "ibasr/config_json.h"
#include "ibasr/errors.h"

namespace ibasr {
namespace {

constexpr const char* kConsonants[] = {"k", "t", "s", "m", "n", "p", "r", "l",
                                       "b", "d", "g", "f", "v", "z", "w", "y"};
constexpr const char* kVowels[] = {"a", "i", "u", "e", "o"};
constexpr std::size_t kNumSyllables = std::size(kConsonants) * std::size(kVowels);

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DataError("cannot format feature value");
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("bad feature value '" + s + "'");
  }
  return v;
}

struct Inventory {
  std::vector<int> base;     // token id of base spelling per acoustic unit
  std::vector<int> variant;  // token id of variant spelling per acoustic unit
  int separator = 0;
};

std::string spell(const Lexicon& lex, const std::vector<int>& tokens) {
  std::string s;
  for (int t : tokens) s += lex.vocab().surface(t);
  return s;
}

}  // namespace

void CorpusConfig::validate() const {
  if (vocab_words < 4) throw ConfigError("vocab_words must be at least 4");
  if (rare_words >= vocab_words) {
    throw ConfigError("rare_words must be smaller than vocab_words");
  }
  if (acoustic_units < 2 || acoustic_units > kNumSyllables) {
    throw ConfigError("acoustic_units must lie in [2, " +
                      std::to_string(kNumSyllables) + "]");
  }
  if (max_word_tokens < 1) throw ConfigError("max_word_tokens must be >= 1");
  if (frames_per_token < 1) throw ConfigError("frames_per_token must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
  if (!(variant_offset >= 0.0)) throw ConfigError("variant_offset must be >= 0");
  if (min_words < 1 || max_words < min_words) {
    throw ConfigError("need 1 <= min_words <= max_words");
  }
  if (!(rare_rate > 0.0 && rare_rate <= 1.0)) {
    throw ConfigError("rare_rate must lie in (0, 1]");
  }
  if (!(rare_utterance_fraction >= 0.0 && rare_utterance_fraction <= 1.0)) {
    throw ConfigError("rare_utterance_fraction must lie in [0, 1]");
  }
  if (max_test_rare < 1 || max_test_rare > min_words) {
    throw ConfigError("max_test_rare must lie in [1, min_words]");
  }
  // Distinct spellings available for each word class.
  double base_words = 0, variant_words = 0, per_len = 1, all_len = 1;
  for (std::size_t l = 1; l <= max_word_tokens; ++l) {
    per_len *= static_cast<double>(acoustic_units);
    all_len *= 2.0 * static_cast<double>(acoustic_units);
    base_words += per_len;
    variant_words += all_len - per_len;
  }
  if (static_cast<double>(vocab_words - rare_words) > base_words ||
      static_cast<double>(rare_words) > variant_words) {
    throw ConfigError("not enough syllable combinations for the word counts");
  }
}

SyntheticCorpus synth_corpus(const CorpusConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticCorpus corpus;
  corpus.config = config;
  corpus.seed = seed;

  // Tokens: separator first (added by Lexicon), then base/variant pairs.
  Vocab vocab;
  Inventory inv;
  for (std::size_t u = 0; u < config.acoustic_units; ++u) {
    const std::string c = kConsonants[u % std::size(kConsonants)];
    const std::string v = kVowels[(u / std::size(kConsonants) + u) % std::size(kVowels)];
    inv.base.push_back(vocab.add(c + v));
    inv.variant.push_back(vocab.add(c + "h" + v));
  }
  corpus.lexicon = Lexicon(std::move(vocab));
  Lexicon& lex = corpus.lexicon;
  inv.separator = lex.separator();
  const std::size_t V = lex.vocab().size();
  const std::size_t D = config.feature_dim;

  Tensor embedding({V, D});
  auto fill_row = [&](int id) {
    for (std::size_t d = 0; d < D; ++d) embedding.at(id, d) = gauss(rng);
  };
  fill_row(inv.separator);
  for (std::size_t u = 0; u < config.acoustic_units; ++u) {
    fill_row(inv.base[u]);
    for (std::size_t d = 0; d < D; ++d) {
      embedding.at(inv.variant[u], d) =
          embedding.at(inv.base[u], d) + config.variant_offset * gauss(rng);
    }
  }

  std::uniform_int_distribution<std::size_t> unit(0, config.acoustic_units - 1);
  std::uniform_int_distribution<std::size_t> length(1, config.max_word_tokens);
  std::bernoulli_distribution coin(0.5);

  std::vector<std::string> common;
  std::set<std::string> taken;
  while (common.size() < config.vocab_words - config.rare_words) {
    std::vector<int> tokens(length(rng));
    for (auto& t : tokens) t = inv.base[unit(rng)];
    const std::string w = spell(lex, tokens);
    if (!taken.insert(w).second) continue;
    lex.add_word(w, tokens);
    common.push_back(w);
  }
  while (corpus.rare_words.size() < config.rare_words) {
    std::vector<int> tokens(length(rng));
    std::vector<bool> variant(tokens.size());
    bool any = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      variant[i] = coin(rng);
      any = any || variant[i];
    }
    if (!any) variant[std::uniform_int_distribution<std::size_t>(0, tokens.size() - 1)(rng)] = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const std::size_t u = unit(rng);
      tokens[i] = variant[i] ? inv.variant[u] : inv.base[u];
    }
    const std::string w = spell(lex, tokens);
    if (!taken.insert(w).second) continue;
    lex.add_word(w, tokens);
    corpus.rare_words.push_back(w);
  }

  auto render = [&](Utterance& utt) {
    utt.transcript = lex.tokenize(utt.words);
    const std::size_t f = config.frames_per_token;
    utt.features = Tensor({utt.transcript.size() * f, D});
    std::size_t frame = 0;
    for (int tok : utt.transcript) {
      for (std::size_t k = 0; k < f; ++k, ++frame) {
        for (std::size_t d = 0; d < D; ++d) {
          utt.features.at(frame, d) =
              embedding.at(tok, d) + config.noise * gauss(rng);
        }
      }
    }
  };

  std::uniform_int_distribution<std::size_t> n_words(config.min_words,
                                                     config.max_words);
  std::uniform_int_distribution<std::size_t> pick_common(0, common.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_rare(0, config.rare_words - 1);
  std::bernoulli_distribution has_rare(config.rare_utterance_fraction);

  const std::size_t cap = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.rare_rate *
                                  static_cast<double>(config.train_utterances)));
  std::vector<std::size_t> rare_uses(config.rare_words, 0);

  for (std::size_t i = 0; i < config.train_utterances; ++i) {
    Utterance utt;
    utt.id = "train-" + std::to_string(i);
    utt.words.resize(n_words(rng));
    for (auto& w : utt.words) w = common[pick_common(rng)];
    if (config.rare_words > 0 && has_rare(rng)) {
      const std::size_t r = pick_rare(rng);
      if (rare_uses[r] < cap) {
        ++rare_uses[r];
        const std::size_t pos =
            std::uniform_int_distribution<std::size_t>(0, utt.words.size() - 1)(rng);
        utt.words[pos] = corpus.rare_words[r];
        utt.rare_words.push_back(corpus.rare_words[r]);
      }
    }
    render(utt);
    corpus.train.push_back(std::move(utt));
  }

  std::uniform_int_distribution<std::size_t> n_rare(
      1, std::max<std::size_t>(1, std::min(config.max_test_rare, config.rare_words)));
  for (std::size_t i = 0; i < config.test_utterances; ++i) {
    Utterance utt;
    utt.id = "test-" + std::to_string(i);
    utt.words.resize(n_words(rng));
    for (auto& w : utt.words) w = common[pick_common(rng)];
    if (config.rare_words > 0) {
      std::vector<std::size_t> positions(utt.words.size());
      for (std::size_t p = 0; p < positions.size(); ++p) positions[p] = p;
      std::shuffle(positions.begin(), positions.end(), rng);
      const std::size_t k = n_rare(rng);
      for (std::size_t j = 0; j < k; ++j) {
        std::string w;
        do {
          w = corpus.rare_words[pick_rare(rng)];
        } while (std::find(utt.rare_words.begin(), utt.rare_words.end(), w) !=
                 utt.rare_words.end());
        utt.words[positions[j]] = w;
        utt.rare_words.push_back(w);
      }
    }
    render(utt);
    corpus.test.push_back(std::move(utt));
  }
  return corpus;
}

void write_utterances(std::ostream& os, const std::vector<Utterance>& utts) {
  for (const auto& u : utts) {
    os << "utt " << u.id << ' ' << u.features.rows() << ' '
       << u.features.cols() << '\n';
    os << "words";
    for (const auto& w : u.words) os << ' ' << w;
    os << "\ntokens";
    for (int t : u.transcript) os << ' ' << t;
    os << "\nrare";
    for (const auto& w : u.rare_words) os << ' ' << w;
    os << '\n';
    for (std::size_t r = 0; r < u.features.rows(); ++r) {
      for (std::size_t c = 0; c < u.features.cols(); ++c) {
        if (c) os << ' ';
        os << format_double(u.features.at(r, c));
      }
      os << '\n';
    }
  }
}

std::vector<Utterance> read_utterances(std::istream& is) {
  std::vector<Utterance> out;
  std::string line;
  auto expect_line = [&](const char* tag) {
    if (!std::getline(is, line)) {
      throw DataError(std::string("truncated utterance record, expected '") +
                      tag + "'");
    }
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head != tag) {
      throw DataError(std::string("expected '") + tag + "', got '" + head + "'");
    }
    std::vector<std::string> rest;
    for (std::string w; ls >> w;) rest.push_back(w);
    return rest;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream hs(line);
    std::string tag;
    Utterance u;
    std::size_t T = 0, D = 0;
    if (!(hs >> tag >> u.id >> T >> D) || tag != "utt") {
      throw DataError("bad utterance header '" + line + "'");
    }
    u.words = expect_line("words");
    for (const auto& t : expect_line("tokens")) u.transcript.push_back(std::stoi(t));
    u.rare_words = expect_line("rare");
    u.features = Tensor({T, D});
    for (std::size_t r = 0; r < T; ++r) {
      if (!std::getline(is, line)) throw DataError("truncated feature block");
      std::istringstream fs(line);
      std::string v;
      for (std::size_t c = 0; c < D; ++c) {
        if (!(fs >> v)) throw DataError("short feature row in " + u.id);
        u.features.at(r, c) = parse_double(v);
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

void write_corpus(const std::filesystem::path& dir,
                  const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "config.json");
    nlohmann::json j;
    j["corpus"] = corpus.config;
    j["seed"] = corpus.seed;
    os << j.dump(2) << '\n';
  }
  {
    std::ofstream os(dir / "vocab.txt");
    for (const auto& t : corpus.lexicon.vocab().tokens()) os << t << '\n';
  }
  {
    std::ofstream os(dir / "lexicon.txt");
    for (const auto& [w, toks] : corpus.lexicon.words()) {
      os << w;
      for (int t : toks) os << ' ' << t;
      os << '\n';
    }
  }
  {
    std::ofstream os(dir / "rare_words.txt");
    for (const auto& w : corpus.rare_words) os << w << '\n';
  }
  {
    std::ofstream os(dir / "distractors.txt");
    for (const auto& w : corpus.distractor_pool()) os << w << '\n';
  }
  {
    std::ofstream os(dir / "train.utt");
    write_utterances(os, corpus.train);
  }
  {
    std::ofstream os(dir / "test.utt");
    write_utterances(os, corpus.test);
  }
}

std::vector<std::string> read_phrase_list(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

SyntheticCorpus read_corpus(const std::filesystem::path& dir) {
  SyntheticCorpus corpus;
  {
    std::ifstream is(dir / "config.json");
    if (!is) throw DataError("no corpus at " + dir.string());
    const nlohmann::json j = nlohmann::json::parse(is);
    corpus.config = j.at("corpus").get<CorpusConfig>();
    corpus.seed = j.at("seed").get<std::uint64_t>();
  }
  Vocab vocab;
  const auto tokens = read_phrase_list(dir / "vocab.txt");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (vocab.add(tokens[i]) != static_cast<int>(i)) {
      throw DataError("vocab.txt does not match the reserved-token layout");
    }
  }
  corpus.lexicon = Lexicon(std::move(vocab));
  for (const auto& line : read_phrase_list(dir / "lexicon.txt")) {
    std::istringstream ls(line);
    std::string w;
    ls >> w;
    std::vector<int> toks;
    for (int t; ls >> t;) toks.push_back(t);
    corpus.lexicon.add_word(w, std::move(toks));
  }
  corpus.rare_words = read_phrase_list(dir / "rare_words.txt");
  {
    std::ifstream is(dir / "train.utt");
    corpus.train = read_utterances(is);
  }
  {
    std::ifstream is(dir / "test.utt");
    corpus.test = read_utterances(is);
  }
  return corpus;
}

}  // namespace ibasr
