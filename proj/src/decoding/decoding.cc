// ibasr/decoding/decoding.cc

#include "ibasr/decoding/decoding.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "ibasr/errors.h"
#include "ibasr/losses/log_math.h"

namespace ibasr {
namespace {

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct Candidate {
  std::vector<int> prefix;
  double tr = 0.0;
  double joint = 0.0;
  bool blank = false;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.joint != b.joint) return a.joint > b.joint;
  if (a.blank != b.blank) return a.blank;
  return a.prefix < b.prefix;
}

}  // namespace

void DecodeConfig::validate() const {
  if (k_beam < 1) throw ConfigError("k_beam must be at least 1");
  if (!(mu_ctc >= 0.0 && mu_ctc <= 1.0 && mu_tr >= 0.0 && mu_tr <= 1.0) ||
      std::abs(mu_ctc + mu_tr - 1.0) > 1e-9) {
    throw ConfigError("decoder weights must lie in [0, 1] and sum to 1");
  }
}

std::vector<int> ctc_greedy(const Tensor& logp) {
  std::vector<int> out;
  int prev = -1;
  for (std::size_t t = 0; t < logp.rows(); ++t) {
    const auto row = logp.row_span(t);
    const int best =
        static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != prev && !Vocab::is_reserved(best)) out.push_back(best);
    prev = best;
  }
  return out;
}

double PrefixScorer::State::full_score() const {
  if (gamma_n.empty()) return prefix.empty() ? 0.0 : kLogZero;
  return log_add(gamma_n.back(), gamma_b.back());
}

PrefixScorer::PrefixScorer(const Tensor& logp, int blank)
    : logp_(logp), blank_(blank) {}

PrefixScorer::State PrefixScorer::initial() const {
  const std::size_t T = logp_.rows();
  State s;
  s.gamma_n.assign(T, kLogZero);
  s.gamma_b.assign(T, kLogZero);
  double acc = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    acc += logp_.at(t, blank_);
    s.gamma_b[t] = acc;
  }
  s.prefix_score = 0.0;
  return s;
}

PrefixScorer::State PrefixScorer::extend(const State& g, int c) const {
  if (c == blank_) throw ContractError("prefix_score_extend: blank is not a label");
  if (c < 0 || static_cast<std::size_t>(c) >= logp_.cols()) {
    throw ContractError("prefix_score_extend: label out of range");
  }
  const std::size_t T = logp_.rows();
  State h;
  h.prefix = g.prefix;
  h.prefix.push_back(c);
  h.gamma_n.assign(T, kLogZero);
  h.gamma_b.assign(T, kLogZero);
  const bool repeat = !g.prefix.empty() && g.prefix.back() == c;
  double psi = kLogZero;
  if (T > 0 && g.prefix.empty()) {
    h.gamma_n[0] = logp_.at(0, c);
    psi = h.gamma_n[0];
  }
  for (std::size_t t = 1; t < T; ++t) {
    const double phi = repeat ? g.gamma_b[t - 1] : log_add(g.gamma_b[t - 1], g.gamma_n[t - 1]);
    const double enter = phi + logp_.at(t, c);
    h.gamma_n[t] = log_add(h.gamma_n[t - 1], phi) + logp_.at(t, c);
    h.gamma_b[t] = log_add(h.gamma_b[t - 1], h.gamma_n[t - 1]) + logp_.at(t, blank_);
    psi = log_add(psi, enter);
  }
  h.prefix_score = psi;
  return h;
}

const PrefixScorer::State& PrefixScorer::state(const std::vector<int>& prefix) {
  auto it = cache_.find(prefix);
  if (it != cache_.end()) return it->second;
  State s;
  if (prefix.empty()) {
    s = initial();
  } else {
    const std::vector<int> parent(prefix.begin(), prefix.end() - 1);
    s = extend(state(parent), prefix.back());
  }
  return cache_.emplace(prefix, std::move(s)).first->second;
}

SessionScorer::SessionScorer(const TransducerSession& session) : session_(session) {}

const TransducerSession::PredictorOutput& SessionScorer::predictor(
    const std::vector<int>& prefix) {
  auto it = cache_.find(prefix);
  if (it != cache_.end()) return it->second;
  TransducerSession::PredictorOutput out;
  if (prefix.empty()) {
    out = session_.start();
  } else {
    const std::vector<int> parent(prefix.begin(), prefix.end() - 1);
    out = session_.predict(prefix.back(), predictor(parent).state);
  }
  return cache_.emplace(prefix, std::move(out)).first->second;
}

std::vector<double> SessionScorer::log_probs(std::size_t t,
                                             const std::vector<int>& prefix) {
  return session_.log_probs(t, predictor(prefix).proj);
}

std::vector<Hypothesis> beam_search(TransducerScorer& model,
                                    const Tensor& ctc_logp,
                                    const DecodeConfig& cfg) {
  cfg.validate();
  const bool use_ctc = cfg.mu_ctc > 0.0;
  std::optional<PrefixScorer> scorer;
  if (use_ctc) {
    if (ctc_logp.rows() != model.frames()) {
      throw DimensionError("CTC posteriors and transducer disagree on T'");
    }
    scorer.emplace(ctc_logp);
  }
  auto joint_of = [&](double tr, const std::vector<int>& prefix) {
    if (!use_ctc) return cfg.mu_tr * tr;
    return cfg.mu_tr * tr + cfg.mu_ctc * scorer->state(prefix).prefix_score;
  };
  const std::size_t V = model.vocab_size();
  const std::size_t k = cfg.k_beam;

  std::vector<Candidate> beam{Candidate{{}, 0.0, 0.0, true}};
  for (std::size_t t = 0; t < model.frames(); ++t) {
    std::vector<Candidate> active = beam;
    std::map<std::vector<int>, double> finished;
    for (std::size_t s = 0; !active.empty(); ++s) {
      std::vector<Candidate> cands;
      for (const auto& h : active) {
        const std::vector<double> lp = model.log_probs(t, h.prefix);
        cands.push_back({h.prefix, h.tr + lp[Vocab::kBlank], 0.0, true});
        if (s >= cfg.max_symbols_per_frame) continue;
        std::vector<int> tokens;
        for (std::size_t v = Vocab::kNumReserved; v < V; ++v) tokens.push_back(static_cast<int>(v));
        const std::size_t keep = std::min(k, tokens.size());
        std::partial_sort(tokens.begin(), tokens.begin() + keep, tokens.end(),
                          [&](int a, int b) { return lp[a] != lp[b] ? lp[a] > lp[b] : a < b; });
        for (std::size_t i = 0; i < keep; ++i) {
          Candidate c{h.prefix, h.tr + lp[tokens[i]], 0.0, false};
          c.prefix.push_back(tokens[i]);
          cands.push_back(std::move(c));
        }
      }
      for (auto& c : cands) c.joint = joint_of(c.tr, c.prefix);
      const std::size_t take = std::min(k, cands.size());
      std::partial_sort(cands.begin(), cands.begin() + take, cands.end(), better);
      std::vector<Candidate> next;
      for (std::size_t i = 0; i < take; ++i) {
        if (cands[i].blank) {
          auto [it, fresh] = finished.emplace(cands[i].prefix, cands[i].tr);
          if (!fresh) it->second = log_add(it->second, cands[i].tr);
        } else {
          next.push_back(std::move(cands[i]));
        }
      }
      active = std::move(next);
    }
    beam.clear();
    for (const auto& [prefix, tr] : finished) {
      beam.push_back({prefix, tr, joint_of(tr, prefix), true});
    }
    const std::size_t take = std::min(k, beam.size());
    std::partial_sort(beam.begin(), beam.begin() + take, beam.end(), better);
    beam.resize(take);
  }

  std::vector<Hypothesis> out;
  for (const auto& c : beam) {
    Hypothesis h{c.prefix, c.tr, 0.0, cfg.mu_tr * c.tr};
    if (use_ctc) {
      h.ctc = scorer->state(c.prefix).full_score();
      h.joint = cfg.mu_tr * h.tr + cfg.mu_ctc * h.ctc;
    }
    out.push_back(std::move(h));
  }
  std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.joint != b.joint) return a.joint > b.joint;
    return a.prefix < b.prefix;
  });
  return out;
}

std::vector<Hypothesis> rnnt_beam_search(TransducerScorer& model,
                                         const DecodeConfig& cfg) {
  DecodeConfig c = cfg;
  c.mu_ctc = 0.0;
  c.mu_tr = 1.0;
  return beam_search(model, Tensor(), c);
}

std::vector<Hypothesis> joint_decode(const ParameterSet& params,
                                     const ModelConfig& model,
                                     const Tensor& features,
                                     const BiasList& list,
                                     const DecodeConfig& cfg) {
  const TransducerSession session(params, model, features, list);
  SessionScorer scorer(session);
  return beam_search(scorer, session.ctc_log_probs(), cfg);
}

void write_nbest_header(std::ostream& os) {
  os << "utt_id\trank\tjoint\ttr\tctc\twords\n";
}

void write_nbest(std::ostream& os, const std::string& utt_id,
                 std::span<const Hypothesis> hyps, const Lexicon& lexicon) {
  for (std::size_t r = 0; r < hyps.size(); ++r) {
    const auto words = lexicon.detokenize(hyps[r].prefix);
    os << utt_id << '\t' << (r + 1) << '\t' << shortest(hyps[r].joint) << '\t'
       << shortest(hyps[r].tr) << '\t' << shortest(hyps[r].ctc) << '\t'
       << join_words(words) << '\n';
  }
}

std::vector<NbestEntry> read_nbest(std::istream& is) {
  std::vector<NbestEntry> out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (first) {
      first = false;
      if (line.rfind("utt_id\t", 0) == 0) continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (line.back() == '\t') cols.emplace_back();
    if (cols.size() != 6) throw DataError("malformed N-best row '" + line + "'");
    NbestEntry e;
    e.utt_id = cols[0];
    try {
      e.rank = std::stoul(cols[1]);
      e.joint = std::stod(cols[2]);
      e.tr = std::stod(cols[3]);
      e.ctc = std::stod(cols[4]);
    } catch (const std::exception&) {
      throw DataError("malformed N-best scores in '" + line + "'");
    }
    e.words = split_words(cols[5]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace ibasr
