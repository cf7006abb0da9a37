#pragma once

// Dataset model: trial recordings with a pre-stimulus baseline prefix,
// rating labels, channel table, synthetic generation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emomap/error.hpp"
#include "emomap/matrix.hpp"
#include "emomap/rng.hpp"

namespace emomap {

enum class ChannelKind { cns, pns };

enum class PnsType { eog_h, eog_v, emg_zyg, emg_trap, gsr, respiration, plethysmograph, skin_temp };

inline constexpr PnsType kAllPnsTypes[] = {PnsType::eog_h,       PnsType::eog_v,
                                           PnsType::emg_zyg,     PnsType::emg_trap,
                                           PnsType::gsr,         PnsType::respiration,
                                           PnsType::plethysmograph, PnsType::skin_temp};

inline std::string_view to_string(PnsType t) {
  switch (t) {
    case PnsType::eog_h: return "eog_h";
    case PnsType::eog_v: return "eog_v";
    case PnsType::emg_zyg: return "emg_zyg";
    case PnsType::emg_trap: return "emg_trap";
    case PnsType::gsr: return "gsr";
    case PnsType::respiration: return "respiration";
    case PnsType::plethysmograph: return "plethysmograph";
    case PnsType::skin_temp: return "skin_temp";
  }
  return "?";
}

inline PnsType parse_pns_type(std::string_view s) {
  for (PnsType t : kAllPnsTypes) {
    if (to_string(t) == s) return t;
  }
  throw ValidationError("unknown PNS type '" + std::string(s) + "'");
}

struct ChannelInfo {
  std::string name;
  ChannelKind kind = ChannelKind::cns;
  std::optional<PnsType> pns_type;  // set iff kind == pns

  bool operator==(const ChannelInfo&) const = default;
};

enum class SegmentKind { baseline, trial };

inline std::string_view to_string(SegmentKind k) { return k == SegmentKind::baseline ? "baseline" : "trial"; }

// Identifies one window of one trial. Trial ids repeat across subjects, so
// (subject_id, trial_id) is the trial key.
struct SegmentOrigin {
  int subject_id = 0;
  int trial_id = 0;
  std::size_t segment_index = 0;
  SegmentKind kind = SegmentKind::trial;

  bool operator==(const SegmentOrigin&) const = default;
};

struct TrialRecording {
  int subject_id = 0;
  int trial_id = 0;
  Matrix<float> samples;  // channels x frames
  int sample_rate = 128;
  std::size_t baseline_frames = 0;
  std::map<std::string, double> ratings;
  // Present when the recording is a processed segment rather than a raw trial.
  std::optional<SegmentOrigin> origin;

  std::size_t channels() const noexcept { return samples.rows(); }
  std::size_t frames() const noexcept { return samples.cols(); }

  bool operator==(const TrialRecording&) const = default;
};

struct Dataset {
  std::vector<TrialRecording> recordings;
  std::vector<ChannelInfo> channels;
  // Free-form provenance (preprocessing mode, generator spec, ...).
  nlohmann::json attributes = nlohmann::json::object();

  std::vector<std::string> channel_names() const {
    std::vector<std::string> out;
    out.reserve(channels.size());
    for (const auto& c : channels) out.push_back(c.name);
    return out;
  }

  bool operator==(const Dataset&) const = default;
};

inline void validate_recording(const TrialRecording& rec, std::size_t expected_channels) {
  const std::string who =
      "recording (subject " + std::to_string(rec.subject_id) + ", trial " + std::to_string(rec.trial_id) + ")";
  if (rec.channels() != expected_channels) {
    throw ValidationError(who + " has " + std::to_string(rec.channels()) + " channels, expected " +
                          std::to_string(expected_channels));
  }
  if (rec.frames() == 0) throw ValidationError(who + " has no frames");
  if (rec.sample_rate <= 0) throw ValidationError(who + " has a non-positive sample rate");
  if (rec.baseline_frames >= rec.frames()) throw ValidationError(who + ": baseline_frames must be < frames");
  for (const auto& [scale, v] : rec.ratings) {
    if (!(v >= 1.0 && v <= 9.0)) throw ValidationError(who + ": rating '" + scale + "' outside [1, 9]");
  }
}

inline void validate(const Dataset& ds) {
  std::set<std::string> names;
  for (const auto& c : ds.channels) {
    if (!names.insert(c.name).second) throw ValidationError("duplicate channel name '" + c.name + "'");
    if ((c.kind == ChannelKind::pns) != c.pns_type.has_value()) {
      throw ValidationError("channel '" + c.name + "': PNS type must be set exactly for PNS channels");
    }
  }
  for (const auto& r : ds.recordings) validate_recording(r, ds.channels.size());
}

// ---------------------------------------------------------------------------
// Labels

enum class Polarity { negative = 0, positive = 1 };

struct BinaryLabel {
  std::string scale;
  Polarity value = Polarity::negative;

  int as_int() const noexcept { return static_cast<int>(value); }
  bool operator==(const BinaryLabel&) const = default;
};

// [1, 5) negative, [5, 9] positive. 9 itself is closed into the positive class.
inline BinaryLabel binarize_label(double rating, std::string scale = {}) {
  if (!(rating >= 1.0 && rating <= 9.0)) {
    throw ValidationError("rating " + std::to_string(rating) + " outside [1, 9]");
  }
  return {std::move(scale), rating >= 5.0 ? Polarity::positive : Polarity::negative};
}

inline constexpr std::string_view kRatingScales[] = {"valence", "arousal", "dominance", "liking"};

// ---------------------------------------------------------------------------
// Channel tables

inline constexpr std::string_view kDeap32Eeg[] = {
    "Fp1", "AF3", "F3", "F7", "FC5", "FC1", "C3", "T7", "CP5", "CP1", "P3",
    "P7",  "PO3", "O1", "Oz", "Pz",  "Fp2", "AF4", "Fz", "F4", "F8", "FC6",
    "FC2", "Cz",  "C4", "T8", "CP6", "CP2", "P4", "P8", "PO4", "O2"};

struct NamedPns {
  std::string_view name;
  PnsType type;
};

inline constexpr NamedPns kDeapPeripheral[] = {
    {"hEOG", PnsType::eog_h},          {"vEOG", PnsType::eog_v},       {"zEMG", PnsType::emg_zyg},
    {"tEMG", PnsType::emg_trap},       {"GSR", PnsType::gsr},          {"Resp", PnsType::respiration},
    {"Plet", PnsType::plethysmograph}, {"Temp", PnsType::skin_temp}};

// 40 -> DEAP's 32 EEG + 8 peripheral; 32 -> DEAP EEG; otherwise ch0..chN-1 (CNS).
inline std::vector<ChannelInfo> default_channel_table(std::size_t n) {
  std::vector<ChannelInfo> out;
  if (n == 40 || n == 32) {
    for (auto name : kDeap32Eeg) out.push_back({std::string(name), ChannelKind::cns, std::nullopt});
    if (n == 40) {
      for (const auto& p : kDeapPeripheral) out.push_back({std::string(p.name), ChannelKind::pns, p.type});
    }
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out.push_back({"ch" + std::to_string(i), ChannelKind::cns, std::nullopt});
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generation

enum class SignalMode { pure_random, class_correlated };

inline std::string_view to_string(SignalMode m) {
  return m == SignalMode::pure_random ? "pure_random" : "class_correlated";
}

inline SignalMode parse_signal_mode(std::string_view s) {
  if (s == "pure_random") return SignalMode::pure_random;
  if (s == "class_correlated") return SignalMode::class_correlated;
  throw ValidationError("unknown signal mode '" + std::string(s) + "'");
}

struct SyntheticSpec {
  std::size_t subjects = 8;
  std::size_t trials = 40;
  std::size_t channels = 8;
  std::size_t frames = 336;
  std::size_t baseline_frames = 16;
  int sample_rate = 128;
  SignalMode signal_mode = SignalMode::pure_random;
  // class_correlated only
  double amplitude = 1.0;
  std::string signal_scale = "valence";
  double freq_negative_hz = 0.0;  // 0 -> sample_rate / 8
  double freq_positive_hz = 0.0;  // 0 -> sample_rate / 4
  double channel_fraction = 0.25;
};

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"subjects", s.subjects},
       {"trials", s.trials},
       {"channels", s.channels},
       {"frames", s.frames},
       {"baseline_frames", s.baseline_frames},
       {"sample_rate", s.sample_rate},
       {"signal_mode", std::string(to_string(s.signal_mode))},
       {"amplitude", s.amplitude},
       {"signal_scale", s.signal_scale},
       {"freq_negative_hz", s.freq_negative_hz},
       {"freq_positive_hz", s.freq_positive_hz},
       {"channel_fraction", s.channel_fraction}};
}

inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  SyntheticSpec d;
  s.subjects = j.value("subjects", d.subjects);
  s.trials = j.value("trials", d.trials);
  s.channels = j.value("channels", d.channels);
  s.frames = j.value("frames", d.frames);
  s.baseline_frames = j.value("baseline_frames", d.baseline_frames);
  s.sample_rate = j.value("sample_rate", d.sample_rate);
  s.signal_mode = parse_signal_mode(j.value("signal_mode", std::string("pure_random")));
  s.amplitude = j.value("amplitude", d.amplitude);
  s.signal_scale = j.value("signal_scale", d.signal_scale);
  s.freq_negative_hz = j.value("freq_negative_hz", d.freq_negative_hz);
  s.freq_positive_hz = j.value("freq_positive_hz", d.freq_positive_hz);
  s.channel_fraction = j.value("channel_fraction", d.channel_fraction);
}

// Channels carrying the class-dependent sinusoid, chosen once per dataset.
inline std::vector<std::size_t> injected_channels(const SyntheticSpec& spec, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "inject-channels"));
  auto perm = rng.permutation(spec.channels);
  std::size_t n = static_cast<std::size_t>(std::lround(spec.channel_fraction * static_cast<double>(spec.channels)));
  n = std::clamp<std::size_t>(n, 1, spec.channels);
  perm.resize(n);
  std::sort(perm.begin(), perm.end());
  return perm;
}

// Samples are i.i.d. N(0, 1). In class_correlated mode, post-baseline frames
// of the injected channels additionally carry
//   amplitude * sin(2 pi f_c t / rate + phase),
// where f_c depends on the binarized `signal_scale` rating and the phase is
// drawn per (trial, channel).
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.subjects == 0 || spec.trials == 0 || spec.channels == 0 || spec.frames == 0) {
    throw ValidationError("synthetic spec: every dimension must be positive");
  }
  if (spec.sample_rate <= 0) throw ValidationError("synthetic spec: sample_rate must be positive");
  if (spec.baseline_frames >= spec.frames) throw ValidationError("synthetic spec: baseline_frames must be < frames");

  Dataset ds;
  ds.channels = default_channel_table(spec.channels);
  nlohmann::json gen;
  to_json(gen, spec);
  gen["seed"] = seed;
  ds.attributes["generator"] = gen;

  const bool inject = spec.signal_mode == SignalMode::class_correlated;
  std::vector<std::size_t> inj;
  if (inject) inj = injected_channels(spec, seed);
  const double f_neg = spec.freq_negative_hz > 0 ? spec.freq_negative_hz : spec.sample_rate / 8.0;
  const double f_pos = spec.freq_positive_hz > 0 ? spec.freq_positive_hz : spec.sample_rate / 4.0;

  Rng rng(seed);
  ds.recordings.reserve(spec.subjects * spec.trials);
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    for (std::size_t t = 0; t < spec.trials; ++t) {
      TrialRecording rec;
      rec.subject_id = static_cast<int>(s + 1);
      rec.trial_id = static_cast<int>(t + 1);
      rec.sample_rate = spec.sample_rate;
      rec.baseline_frames = spec.baseline_frames;
      for (auto scale : kRatingScales) rec.ratings[std::string(scale)] = rng.uniform(1.0, 9.0);
      rec.samples = Matrix<float>(spec.channels, spec.frames);
      std::vector<double> row(spec.frames);
      for (std::size_t c = 0; c < spec.channels; ++c) {
        for (auto& v : row) v = rng.normal();
        if (inject && std::binary_search(inj.begin(), inj.end(), c)) {
          auto it = rec.ratings.find(spec.signal_scale);
          if (it == rec.ratings.end()) throw ValidationError("unknown signal scale '" + spec.signal_scale + "'");
          const double f = binarize_label(it->second).value == Polarity::positive ? f_pos : f_neg;
          const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
          for (std::size_t k = spec.baseline_frames; k < spec.frames; ++k) {
            row[k] += spec.amplitude *
                      std::sin(2.0 * std::numbers::pi * f * static_cast<double>(k) / spec.sample_rate + phase);
          }
        }
        auto dst = rec.samples.row(c);
        for (std::size_t k = 0; k < spec.frames; ++k) dst[k] = static_cast<float>(row[k]);
      }
      ds.recordings.push_back(std::move(rec));
    }
  }
  return ds;
}

}  // namespace emomap
