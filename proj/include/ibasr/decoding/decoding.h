// ibasr/decoding/decoding.h
//
// Greedy CTC readout, CTC prefix scoring, and transducer-driven beam search
// with optional CTC prefix scores mixed into the ranking.
//
// Beam search is frame synchronous. At frame t every active hypothesis
// proposes "blank" (consume the frame) and its best k_beam tokens. Proposals
// from all active hypotheses compete for k_beam slots by joint score; chosen
// blanks join the frame's finished set (same prefixes merge by summing
// probabilities), chosen tokens stay active for another sub-step. After
// max_symbols_per_frame emissions only blank remains. The k_beam best
// finished hypotheses start the next frame.
//
//   joint = mu_tr * transducer log-score + mu_ctc * CTC prefix log-score
//
// The final ranking uses the CTC probability of the complete sequence in
// place of the prefix score. Reserved ids (blank, #, pad, <sos>, <no_bias>)
// are never emitted.

#ifndef IBASR_DECODING_DECODING_H_
#define IBASR_DECODING_DECODING_H_

#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ibasr/datagen/bias_list.h"
#include "ibasr/datagen/vocab.h"
#include "ibasr/model/transducer_model.h"
#include "ibasr/numerics/tensor.h"

namespace ibasr {

struct DecodeConfig {
  std::size_t k_beam = 10;
  double mu_ctc = 0.2;
  double mu_tr = 0.8;
  std::size_t max_symbols_per_frame = 3;

  // Throws ConfigError unless k_beam >= 1, both weights lie in [0, 1] and
  // they sum to 1.
  void validate() const;
};

// Per-frame argmax, repeats collapsed, blanks and other reserved ids dropped.
std::vector<int> ctc_greedy(const Tensor& logp);

// CTC prefix scores over one utterance's T' x V log-posteriors.
class PrefixScorer {
 public:
  struct State {
    std::vector<int> prefix;
    std::vector<double> gamma_n;  // log mass, prefix emitted, ends non-blank
    std::vector<double> gamma_b;  // log mass, prefix emitted, ends blank
    double prefix_score = 0.0;    // log p(output starts with prefix)
    // log p(output equals prefix)
    double full_score() const;
  };

  explicit PrefixScorer(const Tensor& logp, int blank = Vocab::kBlank);

  State initial() const;
  // Throws ContractError for the blank id.
  State extend(const State& state, int c) const;

  // Memoized lookup of a prefix's state.
  const State& state(const std::vector<int>& prefix);

 private:
  Tensor logp_;
  int blank_;
  std::map<std::vector<int>, State> cache_;
};

// Log posteriors of a transducer given frame and emitted prefix.
class TransducerScorer {
 public:
  virtual ~TransducerScorer() = default;
  virtual std::size_t frames() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::vector<double> log_probs(std::size_t t,
                                        const std::vector<int>& prefix) = 0;
};

// Scorer backed by a trained model; predictor outputs are cached per prefix.
class SessionScorer : public TransducerScorer {
 public:
  explicit SessionScorer(const TransducerSession& session);
  std::size_t frames() const override { return session_.frames(); }
  std::size_t vocab_size() const override { return session_.vocab_size(); }
  std::vector<double> log_probs(std::size_t t,
                                const std::vector<int>& prefix) override;

 private:
  const TransducerSession::PredictorOutput& predictor(const std::vector<int>& prefix);
  const TransducerSession& session_;
  std::map<std::vector<int>, TransducerSession::PredictorOutput> cache_;
};

struct Hypothesis {
  std::vector<int> prefix;
  double tr = 0.0;     // transducer log-score
  double ctc = 0.0;    // CTC log-score (prefix during search, full at the end)
  double joint = 0.0;
};

// Beam search with CTC prefix scores from `ctc_logp` (T' x V). With
// mu_ctc = 0 the CTC posteriors are never consulted. Returns up to k_beam
// hypotheses, best first.
std::vector<Hypothesis> beam_search(TransducerScorer& model,
                                    const Tensor& ctc_logp,
                                    const DecodeConfig& cfg);

// Transducer-only search: beam_search with mu_ctc = 0, mu_tr = 1.
std::vector<Hypothesis> rnnt_beam_search(TransducerScorer& model,
                                         const DecodeConfig& cfg);

// Joint decoding of one utterance with a trained model.
std::vector<Hypothesis> joint_decode(const ParameterSet& params,
                                     const ModelConfig& model,
                                     const Tensor& features,
                                     const BiasList& list,
                                     const DecodeConfig& cfg);

// N-best file: header line then one row per hypothesis,
//   utt_id <TAB> rank <TAB> joint <TAB> tr <TAB> ctc <TAB> words
// with rank starting at 1 and words separated by single spaces.
void write_nbest_header(std::ostream& os);
void write_nbest(std::ostream& os, const std::string& utt_id,
                 std::span<const Hypothesis> hyps, const Lexicon& lexicon);

struct NbestEntry {
  std::string utt_id;
  std::size_t rank = 0;
  double joint = 0, tr = 0, ctc = 0;
  std::vector<std::string> words;
};
// Throws DataError on malformed rows.
std::vector<NbestEntry> read_nbest(std::istream& is);

}  // namespace ibasr

#endif  // IBASR_DECODING_DECODING_H_
