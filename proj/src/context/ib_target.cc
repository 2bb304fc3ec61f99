// ibasr/context/ib_target.cc

#include "ibasr/context/ib_target.h"

#include <algorithm>

#include "ibasr/datagen/vocab.h"
#include "ibasr/errors.h"

namespace ibasr {

std::vector<int> ib_target(std::span<const int> transcript,
                           std::span<const TokenSpan> covered) {
  std::vector<TokenSpan> spans(covered.begin(), covered.end());
  std::sort(spans.begin(), spans.end(), [](const TokenSpan& a, const TokenSpan& b) {
    return a.begin < b.begin;
  });
  std::vector<int> out(transcript.size(), Vocab::kDummy);
  std::size_t last_end = 0;
  for (const auto& s : spans) {
    if (s.begin > s.end || s.end > transcript.size()) {
      throw DataError("covered span [" + std::to_string(s.begin) + ", " +
                      std::to_string(s.end) + ") outside a transcript of " +
                      std::to_string(transcript.size()) + " tokens");
    }
    if (s.begin < last_end) throw DataError("overlapping covered spans");
    std::copy(transcript.begin() + s.begin, transcript.begin() + s.end,
              out.begin() + s.begin);
    last_end = s.end;
  }
  return out;
}

}  // namespace ibasr
