#pragma once

// Complex DFT of arbitrary length: iterative radix-2 for powers of two,
// Bluestein's chirp-z otherwise. Forward is unnormalised; inverse scales by 1/n.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace emomap::fft {

using cd = std::complex<double>;

inline bool is_pow2(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

inline void radix2_inplace(std::vector<cd>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles from sin/cos directly; a running product drifts for long transforms.
        const cd w(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

inline std::vector<cd> bluestein(std::span<const cd> x, bool inverse) {
  const std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<cd> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    const double ang = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = cd(std::cos(ang), std::sin(ang));
  }
  std::vector<cd> a(m, cd{}), b(m, cd{});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  radix2_inplace(a, false);
  radix2_inplace(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  radix2_inplace(a, true);
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
  return out;
}

inline std::vector<cd> transform(std::span<const cd> x, bool inverse) {
  const std::size_t n = x.size();
  std::vector<cd> out;
  if (n <= 1) {
    out.assign(x.begin(), x.end());
  } else if (is_pow2(n)) {
    out.assign(x.begin(), x.end());
    radix2_inplace(out, inverse);
  } else {
    out = bluestein(x, inverse);
  }
  if (inverse && n > 0) {
    const double s = 1.0 / static_cast<double>(n);
    for (auto& v : out) v *= s;
  }
  return out;
}

}  // namespace detail

inline std::vector<cd> forward(std::span<const cd> x) { return detail::transform(x, false); }
inline std::vector<cd> inverse(std::span<const cd> x) { return detail::transform(x, true); }

inline std::vector<cd> forward_real(std::span<const double> x) {
  std::vector<cd> c(x.begin(), x.end());
  return forward(c);
}

}  // namespace emomap::fft
