#include <gtest/gtest.h>

#include "emomap/data.hpp"
#include "emomap/preprocess.hpp"
#include "support/oracles.hpp"

using namespace emomap;

namespace {

SegmentMatrix seg(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  SegmentMatrix s;
  s.values = Matrix<double>(m, n);
  for (auto& v : s.values.flat()) v = r.normal();
  return s;
}

SegmentMatrix seg_of(std::size_t m, std::size_t n, std::vector<double> v) {
  SegmentMatrix s;
  s.values = Matrix<double>(m, n, std::move(v));
  return s;
}

BaseMeanMatrix bm_of(const SegmentMatrix& s) {
  BaseMeanMatrix b;
  b.values = s.values;
  return b;
}

TrialRecording recording(std::size_t channels, std::size_t frames, std::size_t baseline, std::uint64_t seed) {
  TrialRecording r;
  r.subject_id = 3;
  r.trial_id = 9;
  r.baseline_frames = baseline;
  r.samples = Matrix<float>(channels, frames);
  Rng rng(seed);
  for (auto& v : r.samples.flat()) v = static_cast<float>(rng.normal());
  return r;
}

}  // namespace

TEST(Segment, DeapShapeCounts) {
  const auto parts = segment_trial(recording(1, 8064, 384, 1), 128);
  EXPECT_EQ(parts.baseline.size(), 3u);
  EXPECT_EQ(parts.trial.size(), 60u);
  EXPECT_EQ(parts.trial[59].origin.segment_index, 59u);
  EXPECT_EQ(parts.baseline[0].origin.kind, SegmentKind::baseline);
}

TEST(Segment, WindowEqualToPostBaselineGivesOneSegment) {
  const auto parts = segment_trial(recording(2, 64, 32, 2), 32);
  EXPECT_EQ(parts.trial.size(), 1u);
  EXPECT_EQ(parts.baseline.size(), 1u);
}

TEST(Segment, ConcatenationReproducesRecording) {
  const auto rec = recording(3, 40, 8, 3);
  const auto parts = segment_trial(rec, 8);
  std::vector<SegmentMatrix> all = parts.baseline;
  all.insert(all.end(), parts.trial.begin(), parts.trial.end());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 40; ++k) EXPECT_EQ(all[k / 8].values(c, k % 8), rec.samples(c, k));
}

TEST(Segment, NonDivisibleWindowIsAnError) {
  EXPECT_THROW(segment_trial(recording(1, 8064, 384, 1), 100), ValidationError);
  EXPECT_THROW(segment_trial(recording(1, 64, 16, 1), 0), ValidationError);
}

TEST(ZScore, HandComputedColumn) {
  const auto r = zscore_frames(seg_of(2, 1, {1.0, 3.0}));
  EXPECT_DOUBLE_EQ(r.segment.values(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(r.segment.values(1, 0), 1.0);
  EXPECT_TRUE(r.zeroed_columns.empty());
}

TEST(ZScore, IdempotentOnStandardizedInput) {
  const auto once = zscore_frames(seg(6, 5, 7)).segment;
  const auto twice = zscore_frames(once).segment;
  EXPECT_LT(oracle::max_abs_diff(once.values, twice.values), 1e-12);
  for (std::size_t j = 0; j < 5; ++j) {
    double s = 0, q = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      s += once.values(i, j);
      q += once.values(i, j) * once.values(i, j);
    }
    EXPECT_NEAR(s / 6, 0.0, 1e-12);
    EXPECT_NEAR(q / 6, 1.0, 1e-12);
  }
}

TEST(ZScore, ConstantColumnBecomesZeroWithWarning) {
  const auto r = zscore_frames(seg_of(3, 2, {5, 1, 5, 2, 5, 3}));
  EXPECT_EQ(r.zeroed_columns, std::vector<std::size_t>{0});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.segment.values(i, 0), 0.0);
}

TEST(BaseMean, SmallCases) {
  std::vector<SegmentMatrix> three{seg_of(1, 1, {1}), seg_of(1, 1, {2}), seg_of(1, 1, {3})};
  EXPECT_DOUBLE_EQ(base_mean(three).values(0, 0), 2.0);
  const auto one = seg(3, 4, 1);
  EXPECT_EQ(base_mean(std::vector<SegmentMatrix>{one}).values, one.values);
  EXPECT_THROW(base_mean(std::vector<SegmentMatrix>{}), ValidationError);
  EXPECT_THROW(base_mean(std::vector<SegmentMatrix>{seg(2, 2, 1), seg(2, 3, 1)}), ShapeError);
}

TEST(BaseMean, MatchesElementwiseOracle) {
  std::vector<SegmentMatrix> s{seg(4, 6, 1), seg(4, 6, 2), seg(4, 6, 3)};
  const auto bm = base_mean(s);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const double expect = (s[0].values(i, j) + s[1].values(i, j) + s[2].values(i, j)) / 3.0;
      EXPECT_NEAR(bm.values(i, j), expect, 1e-12);
    }
}

TEST(BaseRemoved, Identities) {
  const auto raw = seg(3, 4, 5);
  const auto zero = base_removed(raw, bm_of(raw));
  for (double v : zero.values.flat()) EXPECT_EQ(v, 0.0);
  BaseMeanMatrix z;
  z.values = Matrix<double>(3, 4);
  EXPECT_EQ(base_removed(raw, z).values, raw.values);
  const auto other = seg(3, 4, 6);
  const auto diff = base_removed(raw, bm_of(other));
  for (std::size_t e = 0; e < 12; ++e) EXPECT_NEAR(diff.values.flat()[e], raw.values.flat()[e] - other.values.flat()[e], 1e-12);
  EXPECT_THROW(base_removed(raw, bm_of(seg(3, 5, 1))), ShapeError);
}

TEST(BaseRemoved, LinearUnderAddition) {
  const auto a = seg(2, 5, 1), b = seg(2, 5, 2), c = seg(2, 5, 3), d = seg(2, 5, 4);
  SegmentMatrix ab = a, cd = c;
  for (std::size_t e = 0; e < 10; ++e) {
    ab.values.flat()[e] += b.values.flat()[e];
    cd.values.flat()[e] += d.values.flat()[e];
  }
  const auto lhs = base_removed(ab, bm_of(cd));
  const auto r1 = base_removed(a, bm_of(c)), r2 = base_removed(b, bm_of(d));
  for (std::size_t e = 0; e < 10; ++e) EXPECT_NEAR(lhs.values.flat()[e], r1.values.flat()[e] + r2.values.flat()[e], 1e-12);

  const auto m1 = base_mean(std::vector<SegmentMatrix>{a, b}), m2 = base_mean(std::vector<SegmentMatrix>{c, d});
  const auto m12 = base_mean(std::vector<SegmentMatrix>{ab, cd});
  for (std::size_t e = 0; e < 10; ++e) EXPECT_NEAR(m12.values.flat()[e], m1.values.flat()[e] + m2.values.flat()[e], 1e-12);
}

TEST(SigmoidFilter, ZeroBaselineReturnsInputExactly) {
  const auto raw = seg(3, 16, 8);
  BaseMeanMatrix z;
  z.values = Matrix<double>(3, 16);
  EXPECT_EQ(sigmoid_baseline_filter(raw, z).values, raw.values);
}

TEST(SigmoidFilter, EqualInputsHalve) {
  for (std::size_t n : {4, 6, 16, 128}) {
    const auto raw = seg(4, n, n);
    const auto f = sigmoid_baseline_filter(raw, bm_of(raw));
    for (std::size_t e = 0; e < raw.values.size(); ++e) EXPECT_NEAR(f.values.flat()[e], 0.5 * raw.values.flat()[e], 1e-9);
  }
}

TEST(SigmoidFilter, HandComputedFourPointCase) {
  // raw = [1, 2, 3, 4], bm = [1, 0, 0, 0] (impulse, |BT| = 1 everywhere).
  const auto raw = seg_of(1, 4, {1, 2, 3, 4});
  BaseMeanMatrix bm;
  bm.values = Matrix<double>(1, 4, std::vector<double>{1, 0, 0, 0});
  // RT = [10, -2+2i, -2, -2-2i]; |RT| = [10, sqrt8, 2, sqrt8]
  const double d0 = 1.0 / (1.0 + std::exp(10.0 - 1.0));
  const double d1 = 1.0 / (1.0 + std::exp(std::sqrt(8.0) - 1.0));
  const double d2 = 1.0 / (1.0 + std::exp(2.0 - 1.0));
  // F[t] = raw[t] - IDFT(D)[t] since BT = 1
  const double expect[4] = {1 - (d0 + 2 * d1 + d2) / 4, 2 - (d0 - d2) / 4, 3 - (d0 - 2 * d1 + d2) / 4,
                            4 - (d0 - d2) / 4};
  const auto f = sigmoid_baseline_filter(raw, bm);
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(f.values(0, t), expect[t], 1e-12);
  EXPECT_LT(oracle::max_abs_diff(f.values, oracle::sigmoid_filter(raw.values, bm.values)), 1e-9);
}

TEST(SigmoidFilter, MatchesDftOracle) {
  for (std::size_t n = 4; n <= 16; ++n) {
    const auto raw = seg(3, n, 10 + n);
    const auto bm = bm_of(seg(3, n, 50 + n));
    const auto f = sigmoid_baseline_filter(raw, bm);
    EXPECT_LT(oracle::max_abs_diff(f.values, oracle::sigmoid_filter(raw.values, bm.values)), 1e-9) << "n = " << n;
  }
}

TEST(SigmoidFilter, ShapeMismatch) {
  EXPECT_THROW(sigmoid_baseline_filter(seg(2, 4, 1), bm_of(seg(2, 8, 1))), ShapeError);
}

TEST(SigmoidFilter, ScaleCovariantWithZeroBaseline) {
  const auto raw = seg(2, 8, 3);
  SegmentMatrix scaled = raw;
  for (auto& v : scaled.values.flat()) v *= -3.5;
  BaseMeanMatrix z;
  z.values = Matrix<double>(2, 8);
  const auto a = sigmoid_baseline_filter(scaled, z);
  const auto b = sigmoid_baseline_filter(raw, z);
  for (std::size_t e = 0; e < 16; ++e) EXPECT_NEAR(a.values.flat()[e], -3.5 * b.values.flat()[e], 1e-12);
}

TEST(DeactivateFilter, EntriesInOpenUnitIntervalAndSymmetric) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto r = seg(3, 12, s), b = seg(3, 12, 100 + s);
    const auto d = deactivate_filter(fft_rows(r.values), fft_rows(b.values));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 12; ++k) {
        EXPECT_GT(d.values(i, k), 0.0);
        EXPECT_LT(d.values(i, k), 1.0);
        if (k) {
          EXPECT_EQ(d.values(i, k), d.values(i, 12 - k));
        }
      }
  }
}

TEST(DeactivateFilter, HomologousSegmentsGetDifferentFilters) {
  const auto b = seg(2, 16, 1);
  const auto r1 = seg(2, 16, 2), r2 = seg(2, 16, 3);
  const auto bt = fft_rows(b.values);
  const auto d1 = deactivate_filter(fft_rows(r1.values), bt);
  const auto d2 = deactivate_filter(fft_rows(r2.values), bt);
  EXPECT_NE(d1.values, d2.values);
}

TEST(FftRows, RoundTripAndOracle) {
  const auto x = seg(3, 6, 12);
  const auto back = ifft_rows(fft_rows(x.values));
  EXPECT_LT(oracle::max_abs_diff(back, x.values), 1e-9);
  const auto spec = fft_rows(x.values);
  for (std::size_t r = 0; r < 3; ++r) {
    const auto ref = oracle::dft_real({x.values.row(r).begin(), x.values.row(r).end()});
    for (std::size_t k = 0; k < 6; ++k) EXPECT_LT(std::abs(spec.values(r, k) - ref[k]), 1e-10);
  }
}

TEST(FftRows, NonHermitianSpectrumIsANumericError) {
  SpectrumMatrix s;
  s.values = Matrix<std::complex<double>>(1, 4);
  s.values(0, 1) = {1.0, 0.0};
  EXPECT_THROW(ifft_rows(s), NumericError);
}

TEST(ProcessTrial, ModesAndOrder) {
  auto rec = recording(4, 48, 16, 4);
  PrepConfig cfg;
  cfg.window = 8;
  cfg.mode = BaselineMode::none;
  cfg.zscore = false;
  const auto raw = process_trial(rec, cfg);
  ASSERT_EQ(raw.segments.size(), 4u);
  EXPECT_EQ(raw.segments[1].values(2, 3), rec.samples(2, 16 + 8 + 3));

  cfg.mode = BaselineMode::base_mean;
  const auto bmr = process_trial(rec, cfg);
  const auto parts = segment_trial(rec, 8);
  const auto bm = base_mean(parts.baseline);
  EXPECT_EQ(bmr.segments[2].values, base_removed(parts.trial[2], bm).values);

  cfg.mode = BaselineMode::sigmoid_filter;
  cfg.zscore = true;
  const auto f = process_trial(rec, cfg);
  std::vector<SegmentMatrix> zb;
  for (const auto& s : parts.baseline) zb.push_back(zscore_frames(s).segment);
  const auto zbm = base_mean(zb);
  const auto expect = sigmoid_baseline_filter(zscore_frames(parts.trial[0]).segment, zbm);
  EXPECT_EQ(f.segments[0].values, expect.values);

  cfg.order = ProcessOrder::filter_first;
  const auto ff = process_trial(rec, cfg);
  const auto expect_ff = zscore_frames(SegmentMatrix{sigmoid_baseline_filter(parts.trial[0], bm).values, {}}).segment;
  EXPECT_EQ(ff.segments[0].values, expect_ff.values);
}

TEST(ProcessTrial, ParsesModeNames) {
  EXPECT_EQ(parse_baseline_mode("base-mean"), BaselineMode::base_mean);
  EXPECT_EQ(parse_baseline_mode("sigmoid_filter"), BaselineMode::sigmoid_filter);
  EXPECT_EQ(parse_baseline_mode("none"), BaselineMode::none);
  EXPECT_THROW(parse_baseline_mode("median"), ValidationError);
}
