#include <gtest/gtest.h>

#include "emomap/data.hpp"
#include "emomap/similarity.hpp"

using namespace emomap;

namespace {

Matrix<double> rnd(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  Matrix<double> a(m, n);
  for (auto& v : a.flat()) v = r.normal();
  return a;
}

Matrix<double> affine(const Matrix<double>& a, double s, double t) {
  Matrix<double> b = a;
  for (auto& v : b.flat()) v = s * v + t;
  return b;
}

}  // namespace

TEST(Euclidean, Examples) {
  const auto a = rnd(3, 4, 1);
  EXPECT_EQ(euclidean(a, a), 0.0);
  EXPECT_DOUBLE_EQ(euclidean(Matrix<double>(1, 2), Matrix<double>(1, 2, std::vector<double>{3, 4})), 5.0);
  EXPECT_THROW(euclidean(a, rnd(4, 3, 1)), ShapeError);
}

TEST(Euclidean, MatchesDoubleLoopOracle) {
  const auto a = rnd(5, 7, 2), b = rnd(5, 7, 3);
  double s = 0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  EXPECT_NEAR(euclidean(a, b), std::sqrt(s), 1e-12);
}

TEST(Euclidean, MetricAxioms) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = rnd(3, 5, 3 * s), b = rnd(3, 5, 3 * s + 1), c = rnd(3, 5, 3 * s + 2);
    EXPECT_EQ(euclidean(a, a), 0.0);
    EXPECT_GT(euclidean(a, b), 0.0);
    EXPECT_EQ(euclidean(a, b), euclidean(b, a));
    EXPECT_LE(euclidean(a, c), euclidean(a, b) + euclidean(b, c) + 1e-12);
  }
}

TEST(Cosine, Examples) {
  const auto a = rnd(3, 4, 4);
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine(a, affine(a, -1, 0)), -1.0, 1e-12);
  EXPECT_THROW(cosine(a, Matrix<double>(3, 4)), UndefinedSimilarity);
}

TEST(Cosine, MatchesFlattenThenDotOracle) {
  const auto a = rnd(4, 6, 5), b = rnd(4, 6, 6);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t e = 0; e < 24; ++e) {
    dot += a.flat()[e] * b.flat()[e];
    na += a.flat()[e] * a.flat()[e];
    nb += b.flat()[e] * b.flat()[e];
  }
  EXPECT_NEAR(cosine(a, b), dot / std::sqrt(na * nb), 1e-12);
}

TEST(Pearson, Examples) {
  const auto a = rnd(3, 4, 7);
  EXPECT_NEAR(pearson(a, affine(a, 2, 1)), 1.0, 1e-12);
  EXPECT_NEAR(pearson(a, affine(a, -1, 0)), -1.0, 1e-12);
  EXPECT_THROW(pearson(a, Matrix<double>(3, 4, 2.0)), UndefinedSimilarity);
}

TEST(Pearson, MatchesTextbookOracle) {
  const auto a = rnd(4, 6, 8), b = rnd(4, 6, 9);
  const double n = 24;
  double ma = 0, mb = 0;
  for (std::size_t e = 0; e < 24; ++e) {
    ma += a.flat()[e] / n;
    mb += b.flat()[e] / n;
  }
  double cov = 0, va = 0, vb = 0;
  for (std::size_t e = 0; e < 24; ++e) {
    cov += (a.flat()[e] - ma) * (b.flat()[e] - mb) / n;
    va += (a.flat()[e] - ma) * (a.flat()[e] - ma) / n;
    vb += (b.flat()[e] - mb) * (b.flat()[e] - mb) / n;
  }
  EXPECT_NEAR(pearson(a, b), cov / std::sqrt(va * vb), 1e-12);
}

TEST(Similarity, ScaleAndAffineInvariance) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = rnd(3, 6, 2 * s), b = rnd(3, 6, 2 * s + 1);
    EXPECT_NEAR(cosine(affine(a, 3.0, 0), affine(b, 0.25, 0)), cosine(a, b), 1e-12);
    EXPECT_NEAR(pearson(affine(a, 3.0, 0), affine(b, 0.25, 0)), pearson(a, b), 1e-12);
    EXPECT_NEAR(pearson(affine(a, 3.0, -7), affine(b, 0.25, 11)), pearson(a, b), 1e-12);
  }
}

TEST(SimilarityReport, IdenticalHomologousSegments) {
  Dataset ds;
  ds.channels = default_channel_table(3);
  TrialRecording r;
  r.baseline_frames = 4;
  r.samples = Matrix<float>(3, 12);
  Rng rng(1);
  // baseline differs from the two (identical) trial windows
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < 4; ++k) r.samples(c, k) = static_cast<float>(rng.normal());
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = static_cast<float>(rng.normal());
      r.samples(c, 4 + k) = v;
      r.samples(c, 8 + k) = v;
    }
  }
  ds.recordings.push_back(r);
  SimilarityConfig cfg;
  cfg.window = 4;
  const auto rep = similarity_report(ds, cfg);
  EXPECT_EQ(rep.rows.size(), 8u);
  const auto& w = rep.row(PairCategory::within_raw);
  EXPECT_EQ(w.pairs, 1u);
  EXPECT_NEAR(w.s2.mean, 1.0, 1e-12);
  EXPECT_NEAR(rep.row(PairCategory::within_filtered).s2.mean, 1.0, 1e-12);
  EXPECT_NEAR(rep.row(PairCategory::within_removed).s2.mean, 1.0, 1e-12);
}

TEST(SimilarityReport, CategoriesDeterminismAndCap) {
  SyntheticSpec spec;
  spec.subjects = 2;
  spec.trials = 5;
  spec.frames = 16 + 160;
  const auto ds = generate_synthetic(spec, 8);
  SimilarityConfig cfg;
  cfg.pair_cap = 30;
  cfg.seed = 4;
  const auto a = similarity_report(ds, cfg);
  const auto b = similarity_report(ds, cfg);
  ASSERT_EQ(a.rows.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(a.rows[i].category, kPairCategories[i]);
    EXPECT_EQ(a.rows[i].s3.mean, b.rows[i].s3.mean);
    EXPECT_EQ(a.rows[i].s1.mean, b.rows[i].s1.mean);
    EXPECT_LE(a.rows[i].pairs, 30u);
    EXPECT_GE(a.rows[i].pairs, 1u);
    EXPECT_GE(a.rows[i].s3.std, 0.0);
  }
  // 10 trials x 10 windows: 450 within pairs (capped), 100 cross pairs (capped)
  EXPECT_EQ(a.row(PairCategory::within_raw).pairs, 30u);
  cfg.pair_cap = 10000;
  const auto full = similarity_report(ds, cfg);
  EXPECT_EQ(full.row(PairCategory::within_raw).pairs, 450u);
  EXPECT_EQ(full.row(PairCategory::basemean_raw).pairs, 100u);
  EXPECT_EQ(std::string(to_string(PairCategory::basemean_filtered)), "Base-Mean and Filtered-EEG");
}

TEST(SimilarityReport, MarkingDirectionOnRandomData) {
  SyntheticSpec spec;
  spec.subjects = 4;
  spec.trials = 10;
  const auto rep = similarity_report(generate_synthetic(spec, 2022), SimilarityConfig{});
  const double raw = rep.row(PairCategory::basemean_raw).s3_abs.mean;
  const double removed = rep.row(PairCategory::basemean_removed).s3_abs.mean;
  const double filtered = rep.row(PairCategory::basemean_filtered).s3_abs.mean;
  EXPECT_GT(removed, raw);
  EXPECT_LT(filtered, removed);
}
