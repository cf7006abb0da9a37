#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "emomap/data.hpp"

using namespace emomap;

TEST(BinarizeLabel, ThresholdAtFive) {
  EXPECT_EQ(binarize_label(4.99).value, Polarity::negative);
  EXPECT_EQ(binarize_label(5.0).value, Polarity::positive);
  EXPECT_EQ(binarize_label(9.0).value, Polarity::positive);
  EXPECT_EQ(binarize_label(1.0).value, Polarity::negative);
  EXPECT_EQ(binarize_label(6.0, "arousal").scale, "arousal");
}

TEST(BinarizeLabel, RejectsOutOfRange) {
  EXPECT_THROW(binarize_label(0.99), ValidationError);
  EXPECT_THROW(binarize_label(9.01), ValidationError);
  EXPECT_THROW(binarize_label(std::nan("")), ValidationError);
}

TEST(BinarizeLabel, SingleThresholdPartition) {
  // scanning [1, 9] finds exactly one sign change, between 4.999 and 5.000
  int changes = 0;
  auto prev = binarize_label(1.0).value;
  for (int i = 1; i <= 8000; ++i) {
    const auto v = binarize_label(1.0 + i * 0.001).value;
    if (v != prev) {
      ++changes;
      EXPECT_NEAR(1.0 + i * 0.001, 5.0, 1e-9);
    }
    prev = v;
  }
  EXPECT_EQ(changes, 1);
}

TEST(ChannelTable, DeapLayout) {
  const auto t = default_channel_table(40);
  ASSERT_EQ(t.size(), 40u);
  EXPECT_EQ(t[0].name, "Fp1");
  EXPECT_EQ(t[31].name, "O2");
  EXPECT_EQ(t[32].pns_type, PnsType::eog_h);
  EXPECT_EQ(t[36].pns_type, PnsType::gsr);
  EXPECT_EQ(default_channel_table(32).size(), 32u);
  EXPECT_EQ(default_channel_table(3)[2].name, "ch2");
}

TEST(Validate, RejectsInconsistentDatasets) {
  Dataset ds;
  ds.channels = default_channel_table(2);
  TrialRecording r;
  r.samples = Matrix<float>(3, 8);
  r.baseline_frames = 4;
  ds.recordings.push_back(r);
  EXPECT_THROW(validate(ds), ValidationError);

  ds.recordings[0].samples = Matrix<float>(2, 8);
  EXPECT_NO_THROW(validate(ds));
  ds.recordings[0].ratings["valence"] = 10.0;
  EXPECT_THROW(validate(ds), ValidationError);
  ds.recordings[0].ratings["valence"] = 5.0;
  ds.recordings[0].baseline_frames = 8;
  EXPECT_THROW(validate(ds), ValidationError);
  ds.recordings[0].baseline_frames = 4;
  ds.channels[1].name = ds.channels[0].name;
  EXPECT_THROW(validate(ds), ValidationError);
}

TEST(Synthetic, DeterministicForSeed) {
  SyntheticSpec spec;
  spec.subjects = 2;
  spec.trials = 3;
  EXPECT_EQ(generate_synthetic(spec, 11), generate_synthetic(spec, 11));
  EXPECT_NE(generate_synthetic(spec, 11), generate_synthetic(spec, 12));
  spec.signal_mode = SignalMode::class_correlated;
  EXPECT_EQ(generate_synthetic(spec, 11), generate_synthetic(spec, 11));
}

TEST(Synthetic, ZeroDimensionIsAnError) {
  SyntheticSpec spec;
  spec.trials = 0;
  EXPECT_THROW(generate_synthetic(spec, 1), ValidationError);
  spec = {};
  spec.channels = 0;
  EXPECT_THROW(generate_synthetic(spec, 1), ValidationError);
}

TEST(Synthetic, PureRandomIsStandardNormalPerChannel) {
  SyntheticSpec spec;
  spec.subjects = 4;
  spec.trials = 10;
  const auto ds = generate_synthetic(spec, 2024);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    double s = 0, q = 0;
    std::size_t n = 0;
    for (const auto& r : ds.recordings)
      for (float v : r.samples.row(c)) {
        s += v;
        q += static_cast<double>(v) * v;
        ++n;
      }
    ASSERT_GE(n, 10000u);
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.0, 0.05) << "channel " << c;
    EXPECT_NEAR(q / n - mean * mean, 1.0, 0.1) << "channel " << c;
  }
  for (const auto& r : ds.recordings)
    for (const auto& [k, v] : r.ratings) {
      EXPECT_GE(v, 1.0);
      EXPECT_LE(v, 9.0);
    }
}

TEST(Synthetic, ZeroAmplitudeMatchesPureRandomInDistribution) {
  SyntheticSpec a;
  a.subjects = 4;
  a.trials = 10;
  SyntheticSpec b = a;
  b.signal_mode = SignalMode::class_correlated;
  b.amplitude = 0.0;
  const auto da = generate_synthetic(a, 5);
  const auto db = generate_synthetic(b, 6);
  auto stats = [](const Dataset& d) {
    double s = 0, q = 0;
    std::size_t n = 0;
    for (const auto& r : d.recordings)
      for (float v : r.samples.flat()) {
        s += v;
        q += static_cast<double>(v) * v;
        ++n;
      }
    return std::tuple{s / n, q / n - (s / n) * (s / n), n};
  };
  const auto [ma, va, na] = stats(da);
  const auto [mb, vb, nb] = stats(db);
  // Welch z statistic for the difference of means
  const double z = (ma - mb) / std::sqrt(va / na + vb / nb);
  EXPECT_LT(std::fabs(z), 4.0);
}

TEST(Synthetic, InjectedSignalIsRecoverableByMatchedFilter) {
  // Generator-level oracle: comparing the power at the two class frequencies
  // on the injected channels recovers the label almost always.
  SyntheticSpec spec;
  spec.subjects = 2;
  spec.trials = 40;
  spec.signal_mode = SignalMode::class_correlated;
  const std::uint64_t seed = 31;
  const auto ds = generate_synthetic(spec, seed);
  const auto inj = injected_channels(spec, seed);
  ASSERT_EQ(inj.size(), 2u);
  const double f_neg = spec.sample_rate / 8.0, f_pos = spec.sample_rate / 4.0;
  auto power = [&](std::span<const float> row, double f) {
    std::complex<double> acc = 0;
    for (std::size_t k = spec.baseline_frames; k < row.size(); ++k) {
      acc += static_cast<double>(row[k]) * std::polar(1.0, -2.0 * std::numbers::pi * f * k / spec.sample_rate);
    }
    return std::norm(acc);
  };
  int hit = 0;
  for (const auto& r : ds.recordings) {
    double pn = 0, pp = 0;
    for (auto c : inj) {
      pn += power(r.samples.row(c), f_neg);
      pp += power(r.samples.row(c), f_pos);
    }
    const bool truth = binarize_label(r.ratings.at("valence")).value == Polarity::positive;
    hit += (pp > pn) == truth;
  }
  EXPECT_GE(hit / static_cast<double>(ds.recordings.size()), 0.95);
}
