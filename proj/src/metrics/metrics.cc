// ibasr/metrics/metrics.cc

#include "ibasr/metrics/metrics.h"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "ibasr/errors.h"

namespace ibasr {

std::size_t Alignment::distance() const {
  return static_cast<std::size_t>(std::count_if(
      ops.begin(), ops.end(), [](const AlignedPair& p) { return p.op != EditOp::kMatch; }));
}

Alignment align(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }

  Alignment a;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (d[i][j] == d[i - 1][j - 1] + (same ? 0 : 1)) {
        a.ops.push_back({same ? EditOp::kMatch : EditOp::kSub, static_cast<int>(i - 1),
                         static_cast<int>(j - 1)});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      a.ops.push_back({EditOp::kDel, static_cast<int>(i - 1), -1});
      --i;
    } else {
      a.ops.push_back({EditOp::kIns, -1, static_cast<int>(j - 1)});
      --j;
    }
  }
  std::reverse(a.ops.begin(), a.ops.end());
  return a;
}

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  sub += o.sub;
  del += o.del;
  ins += o.ins;
  return *this;
}

ErrorCounts ErrorBreakdown::all() const {
  ErrorCounts c = bias;
  c += unbias;
  return c;
}

namespace {

std::optional<double> rate(std::size_t errors, std::size_t words) {
  if (words == 0) return std::nullopt;
  return 100.0 * static_cast<double>(errors) / static_cast<double>(words);
}

std::string fixed2(std::optional<double> v) {
  if (!v) return kUndefinedRate;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v);
  return buf;
}

nlohmann::json counts_json(const ErrorCounts& c) {
  return {{"sub", c.sub}, {"del", c.del}, {"ins", c.ins}};
}

ErrorCounts counts_from(const nlohmann::json& j) {
  return {j.at("sub").get<std::size_t>(), j.at("del").get<std::size_t>(),
          j.at("ins").get<std::size_t>()};
}

}  // namespace

std::optional<double> ErrorBreakdown::wer() const {
  return rate(errors(), n_bias + n_unbias);
}
std::optional<double> ErrorBreakdown::u_wer() const { return rate(unbias.total(), n_unbias); }
std::optional<double> ErrorBreakdown::b_wer() const { return rate(bias.total(), n_bias); }

ErrorBreakdown& ErrorBreakdown::operator+=(const ErrorBreakdown& o) {
  bias += o.bias;
  unbias += o.unbias;
  n_bias += o.n_bias;
  n_unbias += o.n_unbias;
  return *this;
}

ErrorBreakdown wer_breakdown(std::span<const std::string> ref,
                             std::span<const std::string> hyp,
                             const WordSet& bias_words) {
  ErrorBreakdown b;
  auto biased = [&](const std::string& w) { return bias_words.count(w) > 0; };
  for (const auto& w : ref) ++(biased(w) ? b.n_bias : b.n_unbias);
  for (const auto& p : align(ref, hyp).ops) {
    switch (p.op) {
      case EditOp::kMatch:
        break;
      case EditOp::kSub:
        ++(biased(ref[p.ref]) ? b.bias : b.unbias).sub;
        break;
      case EditOp::kDel:
        ++(biased(ref[p.ref]) ? b.bias : b.unbias).del;
        break;
      case EditOp::kIns:
        ++(biased(hyp[p.hyp]) ? b.bias : b.unbias).ins;
        break;
    }
  }
  return b;
}

ErrorBreakdown wer_breakdown(std::span<const std::vector<std::string>> refs,
                             std::span<const std::vector<std::string>> hyps,
                             std::span<const WordSet> bias_words) {
  if (refs.size() != hyps.size() || refs.size() != bias_words.size()) {
    throw DimensionError("wer_breakdown: refs, hyps and bias sets differ in count");
  }
  ErrorBreakdown total;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    total += wer_breakdown(refs[i], hyps[i], bias_words[i]);
  }
  return total;
}

std::string format_rates(std::optional<double> wer, std::optional<double> u_wer,
                         std::optional<double> b_wer) {
  return fixed2(wer) + " (" + fixed2(u_wer) + "/" + fixed2(b_wer) + ")";
}

std::string format_report(const ErrorBreakdown& b) {
  return format_rates(b.wer(), b.u_wer(), b.b_wer());
}

void write_score_table(std::ostream& os, std::span<const ScoreRow> rows) {
  os << "system\tM\treport\tn_bias\tn_unbias\tb_sub\tb_del\tb_ins\tu_sub\tu_del\tu_ins\n";
  for (const auto& r : rows) {
    const auto& c = r.counts;
    os << r.system << '\t' << r.bias_size << '\t' << format_report(c) << '\t' << c.n_bias
       << '\t' << c.n_unbias << '\t' << c.bias.sub << '\t' << c.bias.del << '\t'
       << c.bias.ins << '\t' << c.unbias.sub << '\t' << c.unbias.del << '\t'
       << c.unbias.ins << '\n';
  }
}

nlohmann::json score_rows_to_json(std::span<const ScoreRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& c = r.counts;
    auto opt = [](std::optional<double> v) -> nlohmann::json {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    out.push_back({{"system", r.system},
                   {"M", r.bias_size},
                   {"report", format_report(c)},
                   {"wer", opt(c.wer())},
                   {"u_wer", opt(c.u_wer())},
                   {"b_wer", opt(c.b_wer())},
                   {"n_bias", c.n_bias},
                   {"n_unbias", c.n_unbias},
                   {"bias", counts_json(c.bias)},
                   {"unbias", counts_json(c.unbias)}});
  }
  return out;
}

std::vector<ScoreRow> score_rows_from_json(const nlohmann::json& j) {
  std::vector<ScoreRow> rows;
  try {
    for (const auto& e : j) {
      ScoreRow r;
      r.system = e.at("system").get<std::string>();
      r.bias_size = e.at("M").get<std::size_t>();
      r.counts.n_bias = e.at("n_bias").get<std::size_t>();
      r.counts.n_unbias = e.at("n_unbias").get<std::size_t>();
      r.counts.bias = counts_from(e.at("bias"));
      r.counts.unbias = counts_from(e.at("unbias"));
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed score file: ") + e.what());
  }
  return rows;
}

}  // namespace ibasr
