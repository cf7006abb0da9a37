#include <gtest/gtest.h>

#include "emomap/fft.hpp"
#include "emomap/rng.hpp"
#include "support/oracles.hpp"

using namespace emomap;
using cd = std::complex<double>;

namespace {

std::vector<cd> random_signal(std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<cd> x(n);
  for (auto& v : x) v = {r.normal(), r.normal()};
  return x;
}

double max_err(const std::vector<cd>& a, const std::vector<cd>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Fft, MatchesDftOracleForManyLengths) {
  for (std::size_t n = 1; n <= 70; ++n) {
    const auto x = random_signal(n, n);
    EXPECT_LT(max_err(fft::forward(x), oracle::dft(x)), 1e-10 * static_cast<double>(n)) << "n = " << n;
    EXPECT_LT(max_err(fft::inverse(x), oracle::dft(x, true)), 1e-10) << "n = " << n;
  }
}

TEST(Fft, RoundTrip) {
  for (std::size_t n : {1, 2, 3, 6, 8, 16, 17, 100, 128, 1000}) {
    const auto x = random_signal(n, 100 + n);
    EXPECT_LT(max_err(fft::inverse(fft::forward(x)), x), 1e-9) << "n = " << n;
  }
}

TEST(Fft, ConstantAndImpulse) {
  const std::vector<double> c(8, 2.5);
  const auto s = fft::forward_real(c);
  EXPECT_NEAR(s[0].real(), 20.0, 1e-12);
  for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(std::abs(s[k]), 0.0, 1e-12);
  std::vector<double> imp(6, 0.0);
  imp[0] = 1.0;
  for (const auto& v : fft::forward_real(imp)) EXPECT_NEAR(std::abs(v - cd(1.0, 0.0)), 0.0, 1e-12);
}

TEST(Fft, RealInputGivesHermitianSpectrum) {
  Rng r(4);
  for (std::size_t n : {5, 8, 12}) {
    std::vector<double> x(n);
    for (auto& v : x) v = r.normal();
    const auto s = fft::forward_real(x);
    for (std::size_t k = 1; k < n; ++k) EXPECT_LT(std::abs(s[k] - std::conj(s[n - k])), 1e-12);
  }
}
