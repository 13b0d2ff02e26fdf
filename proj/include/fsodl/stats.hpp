#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "fsodl/error.hpp"

namespace fsodl {

// Midpoint convention for even counts.
inline double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty sample");
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Quartiles are medians of the lower and upper halves; for odd counts the
// middle value belongs to neither half.
inline FiveNumber five_number(std::vector<double> v) {
  if (v.empty()) throw ConfigError("summary of an empty sample");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  FiveNumber f;
  f.min = v.front();
  f.max = v.back();
  f.median = median(v);
  if (n == 1) {
    f.q1 = f.q3 = v[0];
    return f;
  }
  const auto half = n / 2;
  f.q1 = median(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half)));
  f.q3 = median(std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(half), v.end()));
  return f;
}

}  // namespace fsodl
