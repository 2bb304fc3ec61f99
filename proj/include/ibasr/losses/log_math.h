// ibasr/losses/log_math.h

#ifndef IBASR_LOSSES_LOG_MATH_H_
#define IBASR_LOSSES_LOG_MATH_H_

#include <algorithm>
#include <cmath>
#include <limits>

namespace ibasr {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) with max shift; exact for -inf operands.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace ibasr

#endif  // IBASR_LOSSES_LOG_MATH_H_
