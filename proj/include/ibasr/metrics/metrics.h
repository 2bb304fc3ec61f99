// ibasr/metrics/metrics.h
//
// Word alignment and the WER / U-WER / B-WER decomposition.
//
// A reference word counts as biased when it appears in any phrase of the
// utterance's bias list. Substitutions and deletions are charged to the
// reference word's class; insertions to the inserted hypothesis word's class.
// Corpus figures are ratios of summed counts. Rates are percentages.

#ifndef IBASR_METRICS_METRICS_H_
#define IBASR_METRICS_METRICS_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ibasr {

enum class EditOp { kMatch, kSub, kDel, kIns };

struct AlignedPair {
  EditOp op;
  int ref = -1;  // index into the reference, -1 for insertions
  int hyp = -1;  // index into the hypothesis, -1 for deletions
};

struct Alignment {
  std::vector<AlignedPair> ops;
  std::size_t distance() const;
};

// Minimal Levenshtein alignment. On equal cost the backtrace prefers match,
// then substitution, then deletion, then insertion.
Alignment align(std::span<const std::string> ref, std::span<const std::string> hyp);

struct ErrorCounts {
  std::size_t sub = 0, del = 0, ins = 0;
  std::size_t total() const { return sub + del + ins; }
  ErrorCounts& operator+=(const ErrorCounts& o);
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

struct ErrorBreakdown {
  ErrorCounts bias, unbias;
  std::size_t n_bias = 0, n_unbias = 0;

  ErrorCounts all() const;
  std::size_t errors() const { return bias.total() + unbias.total(); }
  // Percentages; nullopt when the denominator is zero.
  std::optional<double> wer() const;
  std::optional<double> u_wer() const;
  std::optional<double> b_wer() const;

  ErrorBreakdown& operator+=(const ErrorBreakdown& o);
  friend bool operator==(const ErrorBreakdown&, const ErrorBreakdown&) = default;
};

using WordSet = std::set<std::string>;

ErrorBreakdown wer_breakdown(std::span<const std::string> ref,
                             std::span<const std::string> hyp,
                             const WordSet& bias_words);

// Corpus version; one bias word set per utterance. Throws DimensionError
// when the three inputs differ in length.
ErrorBreakdown wer_breakdown(std::span<const std::vector<std::string>> refs,
                             std::span<const std::vector<std::string>> hyps,
                             std::span<const WordSet> bias_words);

inline constexpr const char* kUndefinedRate = "–";

// "W.WW (U.UU/B.BB)", undefined rates shown as kUndefinedRate.
std::string format_rates(std::optional<double> wer, std::optional<double> u_wer,
                         std::optional<double> b_wer);
std::string format_report(const ErrorBreakdown& b);

// One scored system at one test bias size.
struct ScoreRow {
  std::string system;
  std::size_t bias_size = 0;
  ErrorBreakdown counts;
};

// Tab-separated table: system, M, report, then raw counts.
void write_score_table(std::ostream& os, std::span<const ScoreRow> rows);
nlohmann::json score_rows_to_json(std::span<const ScoreRow> rows);
std::vector<ScoreRow> score_rows_from_json(const nlohmann::json& j);

}  // namespace ibasr

#endif  // IBASR_METRICS_METRICS_H_
