#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace isaclab {

// Pairwise summation: deterministic (depends only on element order) and
// keeps rounding error O(log n). Monte-Carlo reductions store per-trial
// values and reduce through this, so results are independent of the number
// of worker threads.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 32) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
};

// Sample mean and its standard error from per-trial values.
inline MeanStderr mean_stderr(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return {};
  MeanStderr r;
  r.mean = pairwise_sum(v) / static_cast<double>(n);
  if (n < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.stderr_ = std::sqrt(ss / (static_cast<double>(n) * (n - 1.0)));
  return r;
}

}  // namespace isaclab
