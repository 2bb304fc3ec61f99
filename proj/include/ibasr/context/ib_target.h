// ibasr/context/ib_target.h
//
// Targets for the intermediate biasing loss: tokens inside bias-phrase
// occurrences are kept, every other token becomes the dummy "#", one for
// one, so the target has the transcript's length.

#ifndef IBASR_CONTEXT_IB_TARGET_H_
#define IBASR_CONTEXT_IB_TARGET_H_

#include <span>
#include <vector>

#include "ibasr/datagen/bias_list.h"

namespace ibasr {

// Throws DataError if a span leaves the transcript or two spans overlap.
std::vector<int> ib_target(std::span<const int> transcript,
                           std::span<const TokenSpan> covered);

}  // namespace ibasr

#endif  // IBASR_CONTEXT_IB_TARGET_H_
