// ibasr/datagen/vocab.h
//
// Token inventory and word lexicon.
//
// Reserved ids come first: blank (CTC / transducer), dummy "#" (the
// non-bias placeholder of intermediate-biasing targets; a regular label, not
// a blank), pad (phrase padding), start-of-sequence (predictor context) and
// <no_bias> (the opt-out context entry). Everything after them is an
// ordinary output token, including the word separator "|".

#ifndef IBASR_DATAGEN_VOCAB_H_
#define IBASR_DATAGEN_VOCAB_H_

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ibasr {

class Vocab {
 public:
  static constexpr int kBlank = 0;
  static constexpr int kDummy = 1;
  static constexpr int kPad = 2;
  static constexpr int kSos = 3;
  static constexpr int kNoBias = 4;
  static constexpr int kNumReserved = 5;

  Vocab();

  // Adds a token (or returns the existing id).
  int add(const std::string& surface);
  // Throws DataError for unknown surfaces.
  int id(const std::string& surface) const;
  bool contains(const std::string& surface) const;
  const std::string& surface(int id) const;
  std::size_t size() const { return tokens_.size(); }

  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }
  // Output tokens the decoders may emit.
  bool is_emittable(int id) const {
    return id >= kNumReserved && static_cast<std::size_t>(id) < size();
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Word <-> token mapping. Words in a transcript are joined by a separator
// token; a word's surface form is the concatenation of its token surfaces.
class Lexicon {
 public:
  static constexpr const char* kSeparator = "|";

  explicit Lexicon(Vocab vocab);

  const Vocab& vocab() const { return vocab_; }
  int separator() const { return separator_; }

  // Registers a word spelled by `tokens` (non-reserved, separator-free).
  void add_word(const std::string& word, std::vector<int> tokens);
  bool has_word(const std::string& word) const;
  const std::vector<int>& spelling(const std::string& word) const;
  const std::map<std::string, std::vector<int>>& words() const {
    return words_;
  }

  // Word sequence -> tokens with separators between words.
  std::vector<int> tokenize(std::span<const std::string> words) const;
  // Tokens -> words. Reserved ids (blank, #, pad, ...) are skipped, runs of
  // separators collapse, and each word is the concatenation of its tokens'
  // surfaces.
  std::vector<std::string> detokenize(std::span<const int> tokens) const;

 private:
  Vocab vocab_;
  int separator_;
  std::map<std::string, std::vector<int>> words_;
};

std::string join_words(std::span<const std::string> words);
std::vector<std::string> split_words(const std::string& text);

}  // namespace ibasr

#endif  // IBASR_DATAGEN_VOCAB_H_
