// ibasr/datagen/vocab.cc

#include "ibasr/datagen/vocab.h"

#include <sstream>

#include "ibasr/errors.h"

namespace ibasr {

Vocab::Vocab() {
  for (const char* s : {"<blank>", "#", "<pad>", "<sos>", "<no_bias>"}) add(s);
}

int Vocab::add(const std::string& surface) {
  auto it = index_.find(surface);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(surface);
  index_.emplace(surface, id);
  return id;
}

int Vocab::id(const std::string& surface) const {
  auto it = index_.find(surface);
  if (it == index_.end()) throw DataError("unknown token '" + surface + "'");
  return it->second;
}

bool Vocab::contains(const std::string& surface) const {
  return index_.count(surface) > 0;
}

const std::string& Vocab::surface(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

Lexicon::Lexicon(Vocab vocab) : vocab_(std::move(vocab)) {
  separator_ = vocab_.add(kSeparator);
}

void Lexicon::add_word(const std::string& word, std::vector<int> tokens) {
  if (tokens.empty()) throw DataError("word '" + word + "' has no tokens");
  for (int t : tokens) {
    if (!vocab_.is_emittable(t) || t == separator_) {
      throw DataError("word '" + word + "' uses non-word token " +
                      std::to_string(t));
    }
  }
  words_[word] = std::move(tokens);
}

bool Lexicon::has_word(const std::string& word) const {
  return words_.count(word) > 0;
}

const std::vector<int>& Lexicon::spelling(const std::string& word) const {
  auto it = words_.find(word);
  if (it == words_.end()) throw DataError("word '" + word + "' not in lexicon");
  return it->second;
}

std::vector<int> Lexicon::tokenize(std::span<const std::string> words) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(separator_);
    const auto& s = spelling(words[i]);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<std::string> Lexicon::detokenize(std::span<const int> tokens) const {
  std::vector<std::string> words;
  std::string current;
  for (int t : tokens) {
    if (Vocab::is_reserved(t)) continue;
    if (t == separator_) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
      continue;
    }
    current += vocab_.surface(t);
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

}  // namespace ibasr
