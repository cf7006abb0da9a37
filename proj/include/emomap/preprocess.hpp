#pragma once

// Windowing, per-frame z-scoring, Base-Mean / Base-Removed and the sigmoid
// baseline filter.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emomap/data.hpp"
#include "emomap/error.hpp"
#include "emomap/fft.hpp"
#include "emomap/matrix.hpp"
#include "emomap/numeric.hpp"

namespace emomap {

struct SegmentMatrix {
  Matrix<double> values;  // m channels x n frames
  SegmentOrigin origin;
};

struct BaseMeanMatrix {
  Matrix<double> values;
  int subject_id = 0;
  int trial_id = 0;
};

struct SpectrumMatrix {
  Matrix<std::complex<double>> values;  // per-row spectra
};

// Gains in (0, 1), conjugate-symmetric along each row.
struct DeactivateFilter {
  Matrix<double> values;
};

struct FilteredSegment {
  Matrix<double> values;
  SegmentOrigin origin;
};

struct SegmentedTrial {
  std::vector<SegmentMatrix> baseline;
  std::vector<SegmentMatrix> trial;
};

inline SegmentedTrial segment_trial(const TrialRecording& rec, std::size_t window_frames) {
  if (window_frames == 0) throw ValidationError("window must be positive");
  const std::size_t total = rec.frames();
  const std::size_t base = rec.baseline_frames;
  if (base > total) throw ValidationError("baseline longer than recording");
  if (base % window_frames != 0 || (total - base) % window_frames != 0 || total == base) {
    throw ValidationError("window " + std::to_string(window_frames) + " does not divide baseline (" +
                          std::to_string(base) + ") and post-baseline (" + std::to_string(total - base) +
                          ") frame counts");
  }
  SegmentedTrial out;
  const std::size_t m = rec.channels();
  auto cut = [&](std::size_t start, std::size_t index, SegmentKind kind) {
    SegmentMatrix s;
    s.values = Matrix<double>(m, window_frames);
    for (std::size_t c = 0; c < m; ++c) {
      auto src = rec.samples.row(c);
      auto dst = s.values.row(c);
      for (std::size_t k = 0; k < window_frames; ++k) dst[k] = src[start + k];
    }
    s.origin = {rec.subject_id, rec.trial_id, index, kind};
    return s;
  };
  for (std::size_t i = 0; i < base / window_frames; ++i) {
    out.baseline.push_back(cut(i * window_frames, i, SegmentKind::baseline));
  }
  for (std::size_t i = 0; i < (total - base) / window_frames; ++i) {
    out.trial.push_back(cut(base + i * window_frames, i, SegmentKind::trial));
  }
  return out;
}

struct ZScoreResult {
  SegmentMatrix segment;
  // Columns with zero variance, replaced by zeros.
  std::vector<std::size_t> zeroed_columns;
};

// Standardises every frame (column) across channels, population sigma.
inline ZScoreResult zscore_frames(const SegmentMatrix& seg) {
  ZScoreResult r{seg, {}};
  auto& v = r.segment.values;
  const std::size_t m = v.rows();
  for (std::size_t j = 0; j < v.cols(); ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i < m; ++i) s.add(v(i, j));
    const double mean = s.value() / static_cast<double>(m);
    CompensatedSum q;
    for (std::size_t i = 0; i < m; ++i) q.add((v(i, j) - mean) * (v(i, j) - mean));
    const double sd = std::sqrt(q.value() / static_cast<double>(m));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      for (std::size_t i = 0; i < m; ++i) v(i, j) = 0.0;
      r.zeroed_columns.push_back(j);
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) v(i, j) = (v(i, j) - mean) / sd;
  }
  return r;
}

inline BaseMeanMatrix base_mean(std::span<const SegmentMatrix> baseline) {
  if (baseline.empty()) throw ValidationError("base_mean: no baseline segments");
  const auto& first = baseline.front().values;
  for (const auto& s : baseline) require_same_shape(s.values, first, "base_mean");
  BaseMeanMatrix bm;
  bm.values = Matrix<double>(first.rows(), first.cols());
  bm.subject_id = baseline.front().origin.subject_id;
  bm.trial_id = baseline.front().origin.trial_id;
  const double inv = 1.0 / static_cast<double>(baseline.size());
  auto out = bm.values.flat();
  for (std::size_t e = 0; e < out.size(); ++e) {
    CompensatedSum s;
    for (const auto& seg : baseline) s.add(seg.values.flat()[e]);
    out[e] = s.value() * inv;
  }
  return bm;
}

inline SegmentMatrix base_removed(const SegmentMatrix& raw, const BaseMeanMatrix& bm) {
  require_same_shape(raw.values, bm.values, "base_removed");
  SegmentMatrix out = raw;
  auto o = out.values.flat();
  auto b = bm.values.flat();
  for (std::size_t e = 0; e < o.size(); ++e) o[e] -= b[e];
  return out;
}

inline SpectrumMatrix fft_rows(const Matrix<double>& x) {
  SpectrumMatrix s;
  s.values = Matrix<std::complex<double>>(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto spec = fft::forward_real(x.row(r));
    std::copy(spec.begin(), spec.end(), s.values.row(r).begin());
  }
  return s;
}

inline Matrix<std::complex<double>> ifft_rows_complex(const SpectrumMatrix& spec) {
  const auto& v = spec.values;
  Matrix<std::complex<double>> out(v.rows(), v.cols());
  for (std::size_t r = 0; r < v.rows(); ++r) {
    auto t = fft::inverse(v.row(r));
    std::copy(t.begin(), t.end(), out.row(r).begin());
  }
  return out;
}

// Real part of the row-wise inverse transform. Throws NumericError when the
// discarded imaginary part exceeds 1e-9 of the output's Frobenius norm.
inline Matrix<double> ifft_rows(const SpectrumMatrix& spec) {
  const auto c = ifft_rows_complex(spec);
  Matrix<double> out(c.rows(), c.cols());
  double max_imag = 0.0;
  CompensatedSum norm2;
  for (std::size_t e = 0; e < c.size(); ++e) {
    out.flat()[e] = c.flat()[e].real();
    max_imag = std::max(max_imag, std::fabs(c.flat()[e].imag()));
    norm2.add(c.flat()[e].real() * c.flat()[e].real());
  }
  const double norm = std::sqrt(norm2.value());
  if (max_imag > 1e-9 * norm + 1e-300) {
    throw NumericError("inverse transform has a non-negligible imaginary part (" + format_g9(max_imag) +
                       " vs norm " + format_g9(norm) + ")");
  }
  return out;
}

inline double sigmoid(double x) noexcept {
  // Branches keep exp() from overflowing for large |x|.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// D = Sig(|BT| - |RT|) per bin. Bins k and n-k share the value computed at
// min(k, n-k), so D o BT keeps the conjugate symmetry of BT.
inline DeactivateFilter deactivate_filter(const SpectrumMatrix& rt, const SpectrumMatrix& bt) {
  require_same_shape(rt.values, bt.values, "deactivate_filter");
  DeactivateFilter d;
  const std::size_t n = rt.values.cols();
  d.values = Matrix<double>(rt.values.rows(), n);
  for (std::size_t r = 0; r < rt.values.rows(); ++r) {
    for (std::size_t k = 0; k <= n / 2; ++k) {
      const double g = sigmoid(std::abs(bt.values(r, k)) - std::abs(rt.values(r, k)));
      d.values(r, k) = g;
      if (k != 0) d.values(r, n - k) = g;
    }
  }
  return d;
}

// F = IFFT(RT - D o BT), evaluated as R - IFFT(D o BT) so that a zero
// baseline returns the input bit-for-bit.
inline FilteredSegment sigmoid_baseline_filter(const SegmentMatrix& raw, const BaseMeanMatrix& bm) {
  require_same_shape(raw.values, bm.values, "sigmoid_baseline_filter");
  const auto rt = fft_rows(raw.values);
  const auto bt = fft_rows(bm.values);
  const auto d = deactivate_filter(rt, bt);
  SpectrumMatrix gated;
  gated.values = bt.values;
  for (std::size_t e = 0; e < gated.values.size(); ++e) gated.values.flat()[e] *= d.values.flat()[e];
  const auto removed = ifft_rows(gated);
  FilteredSegment f{raw.values, raw.origin};
  for (std::size_t e = 0; e < f.values.size(); ++e) f.values.flat()[e] -= removed.flat()[e];
  return f;
}

// ---------------------------------------------------------------------------
// Trial-level pipeline shared by the audit, similarity, training and CLI.

enum class BaselineMode { none, base_mean, sigmoid_filter };

inline std::string_view to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::none: return "none";
    case BaselineMode::base_mean: return "base-mean";
    case BaselineMode::sigmoid_filter: return "sigmoid-filter";
  }
  return "?";
}

inline BaselineMode parse_baseline_mode(std::string_view s) {
  if (s == "none" || s == "raw") return BaselineMode::none;
  if (s == "base-mean" || s == "base_mean") return BaselineMode::base_mean;
  if (s == "sigmoid-filter" || s == "sigmoid_filter") return BaselineMode::sigmoid_filter;
  throw ValidationError("unknown preprocessing mode '" + std::string(s) + "'");
}

enum class ProcessOrder { zscore_first, filter_first };

inline std::string_view to_string(ProcessOrder o) {
  return o == ProcessOrder::zscore_first ? "zscore-first" : "filter-first";
}

inline ProcessOrder parse_process_order(std::string_view s) {
  if (s == "zscore-first") return ProcessOrder::zscore_first;
  if (s == "filter-first") return ProcessOrder::filter_first;
  throw ValidationError("unknown processing order '" + std::string(s) + "'");
}

struct PrepConfig {
  std::size_t window = 128;
  BaselineMode mode = BaselineMode::sigmoid_filter;
  bool zscore = true;
  ProcessOrder order = ProcessOrder::zscore_first;
};

struct ProcessedTrial {
  std::vector<SegmentMatrix> segments;  // processed trial windows, in order
  std::size_t zeroed_columns = 0;       // z-score warnings
};

inline ProcessedTrial process_trial(const TrialRecording& rec, const PrepConfig& cfg) {
  auto parts = segment_trial(rec, cfg.window);
  ProcessedTrial out;
  auto z = [&](SegmentMatrix& s) {
    auto r = zscore_frames(s);
    out.zeroed_columns += r.zeroed_columns.size();
    s = std::move(r.segment);
  };
  const bool z_before = cfg.zscore && cfg.order == ProcessOrder::zscore_first;
  const bool z_after = cfg.zscore && cfg.order == ProcessOrder::filter_first;
  if (z_before) {
    for (auto& s : parts.baseline) z(s);
    for (auto& s : parts.trial) z(s);
  }
  if (cfg.mode != BaselineMode::none) {
    const auto bm = base_mean(parts.baseline);
    for (auto& s : parts.trial) {
      if (cfg.mode == BaselineMode::base_mean) {
        s = base_removed(s, bm);
      } else {
        auto f = sigmoid_baseline_filter(s, bm);
        s.values = std::move(f.values);
      }
    }
  }
  if (z_after) {
    for (auto& s : parts.trial) z(s);
  }
  out.segments = std::move(parts.trial);
  return out;
}

}  // namespace emomap
