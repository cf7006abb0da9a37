#pragma once

// Brute-force reference implementations used only by tests.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "emomap/matrix.hpp"

namespace oracle {

using cd = std::complex<double>;

inline std::vector<cd> dft(const std::vector<cd>& x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<cd> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    cd s = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      s += x[t] * cd(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? s / static_cast<double>(n) : s;
  }
  return out;
}

inline std::vector<cd> dft_real(const std::vector<double>& x) {
  return dft(std::vector<cd>(x.begin(), x.end()));
}

// Filtered = Re IDFT(RT - D o BT), D = 1 / (1 + exp(|RT| - |BT|)), row by row.
inline emomap::Matrix<double> sigmoid_filter(const emomap::Matrix<double>& raw, const emomap::Matrix<double>& bm) {
  emomap::Matrix<double> out(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    std::vector<double> rr(raw.row(r).begin(), raw.row(r).end());
    std::vector<double> bb(bm.row(r).begin(), bm.row(r).end());
    auto rt = dft_real(rr);
    auto bt = dft_real(bb);
    std::vector<cd> f(rt.size());
    for (std::size_t k = 0; k < rt.size(); ++k) {
      const double d = 1.0 / (1.0 + std::exp(-(std::abs(bt[k]) - std::abs(rt[k]))));
      f[k] = rt[k] - d * bt[k];
    }
    auto back = dft(f, true);
    for (std::size_t c = 0; c < raw.cols(); ++c) out(r, c) = back[c].real();
  }
  return out;
}

inline double max_abs_diff(const emomap::Matrix<double>& a, const emomap::Matrix<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.flat()[i] - b.flat()[i]));
  return m;
}

}  // namespace oracle
