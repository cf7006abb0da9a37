#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <span>
#include <string>

namespace emomap {

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  CompensatedSum s;
  for (double x : xs) s.add(x);
  const double mean = s.value() / static_cast<double>(xs.size());
  CompensatedSum v;
  for (double x : xs) v.add((x - mean) * (x - mean));
  return {mean, std::sqrt(v.value() / static_cast<double>(xs.size()))};
}

// Formatting used by every report: 9 significant digits.
inline std::string format_g9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline double round_g9(double x) { return std::strtod(format_g9(x).c_str(), nullptr); }

}  // namespace emomap
