#pragma once

// Matrix similarity indexes (Euclidean distance, cosine similarity, Pearson
// correlation) and the pair-category report over preprocessing variants.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "emomap/data.hpp"
#include "emomap/error.hpp"
#include "emomap/matrix.hpp"
#include "emomap/numeric.hpp"
#include "emomap/preprocess.hpp"
#include "emomap/rng.hpp"

namespace emomap {

class UndefinedSimilarity : public NumericError {
 public:
  using NumericError::NumericError;
};

inline double euclidean(const Matrix<double>& a, const Matrix<double>& b) {
  require_same_shape(a, b, "euclidean");
  CompensatedSum s;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const double d = a.flat()[e] - b.flat()[e];
    s.add(d * d);
  }
  return std::sqrt(s.value());
}

inline double cosine(const Matrix<double>& a, const Matrix<double>& b) {
  require_same_shape(a, b, "cosine");
  CompensatedSum ab, aa, bb;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const double x = a.flat()[e], y = b.flat()[e];
    ab.add(x * y);
    aa.add(x * x);
    bb.add(y * y);
  }
  if (!(aa.value() > 0.0) || !(bb.value() > 0.0)) throw UndefinedSimilarity("cosine similarity of a zero matrix");
  return std::clamp(ab.value() / std::sqrt(aa.value() * bb.value()), -1.0, 1.0);
}

// Population covariance over population standard deviations of the
// flattened entries.
inline double pearson(const Matrix<double>& a, const Matrix<double>& b) {
  require_same_shape(a, b, "pearson");
  const std::size_t n = a.size();
  if (n == 0) throw UndefinedSimilarity("pearson correlation of empty matrices");
  CompensatedSum sa, sb;
  for (std::size_t e = 0; e < n; ++e) {
    sa.add(a.flat()[e]);
    sb.add(b.flat()[e]);
  }
  const double ma = sa.value() / static_cast<double>(n);
  const double mb = sb.value() / static_cast<double>(n);
  CompensatedSum cov, va, vb;
  for (std::size_t e = 0; e < n; ++e) {
    const double x = a.flat()[e] - ma, y = b.flat()[e] - mb;
    cov.add(x * y);
    va.add(x * x);
    vb.add(y * y);
  }
  if (!(va.value() > 0.0) || !(vb.value() > 0.0)) throw UndefinedSimilarity("pearson correlation of a constant matrix");
  return std::clamp(cov.value() / std::sqrt(va.value() * vb.value()), -1.0, 1.0);
}

enum class PairCategory {
  within_raw,
  basemean_raw,
  within_removed,
  raw_removed,
  basemean_removed,
  within_filtered,
  raw_filtered,
  basemean_filtered,
};

inline constexpr std::array<PairCategory, 8> kPairCategories = {
    PairCategory::within_raw,       PairCategory::basemean_raw,     PairCategory::within_removed,
    PairCategory::raw_removed,      PairCategory::basemean_removed, PairCategory::within_filtered,
    PairCategory::raw_filtered,     PairCategory::basemean_filtered};

inline std::string_view to_string(PairCategory c) {
  switch (c) {
    case PairCategory::within_raw: return "within Raw-EEG";
    case PairCategory::basemean_raw: return "Base-Mean and Raw-EEG";
    case PairCategory::within_removed: return "within Base-Removed";
    case PairCategory::raw_removed: return "Raw-EEG and Base-Removed";
    case PairCategory::basemean_removed: return "Base-Mean and Base-Removed";
    case PairCategory::within_filtered: return "within Filtered-EEG";
    case PairCategory::raw_filtered: return "Raw-EEG and Filtered-EEG";
    case PairCategory::basemean_filtered: return "Base-Mean and Filtered-EEG";
  }
  return "?";
}

struct SimilarityRow {
  PairCategory category{};
  std::size_t pairs = 0;
  MeanStd s1;             // Euclidean distance
  MeanStd s1_normalized;  // min-max normalised within the category
  MeanStd s2;             // cosine
  MeanStd s2_abs;
  MeanStd s3;  // Pearson
  MeanStd s3_abs;
};

struct SimilarityReport {
  std::vector<SimilarityRow> rows;

  const SimilarityRow& row(PairCategory c) const {
    for (const auto& r : rows) {
      if (r.category == c) return r;
    }
    throw ValidationError("similarity report has no row '" + std::string(to_string(c)) + "'");
  }
};

struct SimilarityConfig {
  std::size_t window = 16;
  bool zscore = true;
  std::size_t pair_cap = 10000;
  std::uint64_t seed = 0;
};

namespace detail {

struct TrialViews {
  BaseMeanMatrix bm;
  std::vector<Matrix<double>> raw, removed, filtered;
};

struct PairRef {
  std::uint32_t trial;
  std::uint32_t i;
  std::uint32_t j;
};

inline TrialViews trial_views(const TrialRecording& rec, const SimilarityConfig& cfg) {
  auto parts = segment_trial(rec, cfg.window);
  if (cfg.zscore) {
    for (auto& s : parts.baseline) s = zscore_frames(s).segment;
    for (auto& s : parts.trial) s = zscore_frames(s).segment;
  }
  TrialViews v;
  v.bm = base_mean(parts.baseline);
  for (const auto& s : parts.trial) {
    v.raw.push_back(s.values);
    v.removed.push_back(base_removed(s, v.bm).values);
    v.filtered.push_back(sigmoid_baseline_filter(s, v.bm).values);
  }
  return v;
}

}  // namespace detail

// Homologous "within" pairs are distinct segments of one trial; cross pairs
// match a segment with its own Base-Mean or with its own processed variant.
// Each category samples at most `pair_cap` pairs uniformly without replacement.
inline SimilarityReport similarity_report(const Dataset& ds, const SimilarityConfig& cfg) {
  std::vector<detail::TrialViews> views;
  views.reserve(ds.recordings.size());
  for (const auto& rec : ds.recordings) views.push_back(detail::trial_views(rec, cfg));

  SimilarityReport report;
  for (PairCategory cat : kPairCategories) {
    const bool within = cat == PairCategory::within_raw || cat == PairCategory::within_removed ||
                        cat == PairCategory::within_filtered;
    std::vector<detail::PairRef> candidates;
    for (std::uint32_t t = 0; t < views.size(); ++t) {
      const auto n = static_cast<std::uint32_t>(views[t].raw.size());
      if (within) {
        for (std::uint32_t i = 0; i < n; ++i)
          for (std::uint32_t j = i + 1; j < n; ++j) candidates.push_back({t, i, j});
      } else {
        for (std::uint32_t i = 0; i < n; ++i) candidates.push_back({t, i, i});
      }
    }
    if (candidates.empty()) {
      throw ValidationError("similarity category '" + std::string(to_string(cat)) + "' has no pairs");
    }
    if (candidates.size() > cfg.pair_cap) {
      Rng rng(derive_seed(cfg.seed, "simreport:" + std::string(to_string(cat))));
      for (std::size_t k = 0; k < cfg.pair_cap; ++k) {
        const std::size_t pick = k + rng.uniform_index(candidates.size() - k);
        std::swap(candidates[k], candidates[pick]);
      }
      candidates.resize(cfg.pair_cap);
      std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return std::tie(a.trial, a.i, a.j) < std::tie(b.trial, b.i, b.j);
      });
    }

    std::vector<double> s1, s2, s3;
    s1.reserve(candidates.size());
    s2.reserve(candidates.size());
    s3.reserve(candidates.size());
    for (const auto& p : candidates) {
      const auto& v = views[p.trial];
      const Matrix<double>* a = nullptr;
      const Matrix<double>* b = nullptr;
      switch (cat) {
        case PairCategory::within_raw: a = &v.raw[p.i]; b = &v.raw[p.j]; break;
        case PairCategory::basemean_raw: a = &v.bm.values; b = &v.raw[p.i]; break;
        case PairCategory::within_removed: a = &v.removed[p.i]; b = &v.removed[p.j]; break;
        case PairCategory::raw_removed: a = &v.raw[p.i]; b = &v.removed[p.i]; break;
        case PairCategory::basemean_removed: a = &v.bm.values; b = &v.removed[p.i]; break;
        case PairCategory::within_filtered: a = &v.filtered[p.i]; b = &v.filtered[p.j]; break;
        case PairCategory::raw_filtered: a = &v.raw[p.i]; b = &v.filtered[p.i]; break;
        case PairCategory::basemean_filtered: a = &v.bm.values; b = &v.filtered[p.i]; break;
      }
      s1.push_back(euclidean(*a, *b));
      s2.push_back(cosine(*a, *b));
      s3.push_back(pearson(*a, *b));
    }

    SimilarityRow row;
    row.category = cat;
    row.pairs = candidates.size();
    row.s1 = mean_std(s1);
    row.s2 = mean_std(s2);
    row.s3 = mean_std(s3);
    auto [lo, hi] = std::minmax_element(s1.begin(), s1.end());
    const double range = *hi - *lo;
    std::vector<double> norm(s1.size(), 0.0);
    if (range > 0) {
      for (std::size_t k = 0; k < s1.size(); ++k) norm[k] = (s1[k] - *lo) / range;
    }
    row.s1_normalized = mean_std(norm);
    for (auto& x : s2) x = std::fabs(x);
    for (auto& x : s3) x = std::fabs(x);
    row.s2_abs = mean_std(s2);
    row.s3_abs = mean_std(s3);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace emomap
