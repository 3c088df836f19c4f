#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bosim {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + exp(x)) without overflow for large x or precision loss for very
// negative x.
inline double softplus(double x) {
  if (x == std::numeric_limits<double>::infinity()) return x;
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(sum_i exp(v_i)). Entries equal to -inf contribute nothing; an empty or
// all -inf input gives -inf.
inline double log_sum_exp(std::span<const double> values) {
  double max_value = kNegInf;
  for (double v : values) max_value = std::max(max_value, v);
  if (max_value == kNegInf) return kNegInf;
  if (!std::isfinite(max_value)) return max_value;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

// Streaming variant of log_sum_exp for accumulating one term at a time.
class LogSumExpAccumulator {
 public:
  void add(double log_value) {
    if (log_value == kNegInf) return;
    if (log_value <= max_) {
      sum_ += std::exp(log_value - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_value) + 1.0;
      max_ = log_value;
    }
  }

  double result() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

}  // namespace bosim
