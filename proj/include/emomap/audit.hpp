#pragma once

// Base-mean leakage audit: split plans that either keep homologous segments
// of one trial together (by_data) or spread them across train and test
// (by_index), classic classifiers on flattened segments, and the resulting
// accuracy grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "emomap/classifiers.hpp"
#include "emomap/data.hpp"
#include "emomap/error.hpp"
#include "emomap/numeric.hpp"
#include "emomap/preprocess.hpp"
#include "emomap/rng.hpp"

namespace emomap {

struct Provenance {
  int subject_id = 0;
  int trial_id = 0;
  std::size_t segment_index = 0;

  std::pair<int, int> trial_key() const noexcept { return {subject_id, trial_id}; }
  bool operator==(const Provenance&) const = default;
};

struct LabeledExample {
  std::vector<double> features;
  BinaryLabel label;
  Provenance provenance;
};

enum class SplitMode { by_data, by_index, random };

inline std::string_view to_string(SplitMode m) {
  switch (m) {
    case SplitMode::by_data: return "by_data";
    case SplitMode::by_index: return "by_index";
    case SplitMode::random: return "random";
  }
  return "?";
}

struct SplitPlan {
  SplitMode mode = SplitMode::by_data;
  double train_ratio = 0.8;
  std::uint64_t seed = 0;

  std::string describe() const { return std::string(to_string(mode)) + "(" + format_g9(train_ratio) + ")"; }
};

// "by_index:0.2" -> {by_index, 0.2}
inline SplitPlan parse_split_plan(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) throw ValidationError("split plan '" + std::string(s) + "' needs mode:ratio");
  const auto mode = s.substr(0, colon);
  SplitPlan p;
  if (mode == "by_data" || mode == "by-data") {
    p.mode = SplitMode::by_data;
  } else if (mode == "by_index" || mode == "by-index") {
    p.mode = SplitMode::by_index;
  } else if (mode == "random") {
    p.mode = SplitMode::random;
  } else {
    throw ValidationError("unknown split mode '" + std::string(mode) + "'");
  }
  const std::string ratio(s.substr(colon + 1));
  char* end = nullptr;
  p.train_ratio = std::strtod(ratio.c_str(), &end);
  if (end == ratio.c_str() || *end != '\0' || !(p.train_ratio > 0.0 && p.train_ratio < 1.0)) {
    throw ValidationError("split ratio must be in (0, 1), got '" + ratio + "'");
  }
  return p;
}

struct TrainTestSplit {
  std::vector<std::size_t> train;  // ascending example indices
  std::vector<std::size_t> test;
};

namespace detail {

// Trial groups in order of first appearance.
template <class ProvenanceOf>
std::vector<std::vector<std::size_t>> group_by_trial(std::size_t n, ProvenanceOf&& prov) {
  std::map<std::pair<int, int>, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = slot.try_emplace(prov(i).trial_key(), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

inline std::size_t rounded_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n)));
}

}  // namespace detail

template <class ProvenanceOf>
TrainTestSplit split_indices(std::size_t n, ProvenanceOf&& prov, const SplitPlan& plan) {
  if (n == 0) throw ValidationError("split: no examples");
  if (!(plan.train_ratio > 0.0 && plan.train_ratio < 1.0)) throw ValidationError("split: ratio must be in (0, 1)");
  Rng rng(plan.seed);
  TrainTestSplit out;
  switch (plan.mode) {
    case SplitMode::by_data: {
      auto groups = detail::group_by_trial(n, prov);
      const auto perm = rng.permutation(groups.size());
      const std::size_t n_train = detail::rounded_count(plan.train_ratio, groups.size());
      for (std::size_t g = 0; g < perm.size(); ++g) {
        auto& side = g < n_train ? out.train : out.test;
        side.insert(side.end(), groups[perm[g]].begin(), groups[perm[g]].end());
      }
      break;
    }
    case SplitMode::by_index: {
      for (auto& members : detail::group_by_trial(n, prov)) {
        rng.shuffle(members);
        const std::size_t k = detail::rounded_count(plan.train_ratio, members.size());
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(k));
        out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(k), members.end());
      }
      break;
    }
    case SplitMode::random: {
      const auto perm = rng.permutation(n);
      const std::size_t k = detail::rounded_count(plan.train_ratio, n);
      out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
      out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(k), perm.end());
      break;
    }
  }
  if (out.train.empty() || out.test.empty()) {
    throw ValidationError("split " + plan.describe() + " leaves an empty side");
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline TrainTestSplit split(const std::vector<LabeledExample>& examples, const SplitPlan& plan) {
  return split_indices(examples.size(), [&](std::size_t i) -> const Provenance& { return examples[i].provenance; },
                       plan);
}

inline Samples to_samples(const std::vector<LabeledExample>& examples, const std::vector<std::size_t>& idx) {
  Samples s;
  for (auto i : idx) s.push(examples[i].features, examples[i].label.as_int());
  return s;
}

// ---------------------------------------------------------------------------
// Audit grid

enum class AuditMode { raw, base_mean, sigmoid_filter, random_data };

inline std::string_view to_string(AuditMode m) {
  switch (m) {
    case AuditMode::raw: return "raw";
    case AuditMode::base_mean: return "base_mean";
    case AuditMode::sigmoid_filter: return "sigmoid_filter";
    case AuditMode::random_data: return "random_data";
  }
  return "?";
}

inline AuditMode parse_audit_mode(std::string_view s) {
  if (s == "raw") return AuditMode::raw;
  if (s == "base_mean" || s == "base-mean") return AuditMode::base_mean;
  if (s == "sigmoid_filter" || s == "sigmoid-filter") return AuditMode::sigmoid_filter;
  if (s == "random_data" || s == "random-data") return AuditMode::random_data;
  throw ValidationError("unknown audit mode '" + std::string(s) + "'");
}

enum class ClassifierKind { dt, knn, svm };

inline std::string_view to_string(ClassifierKind c) {
  switch (c) {
    case ClassifierKind::dt: return "dt";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::svm: return "svm";
  }
  return "?";
}

inline ClassifierKind parse_classifier(std::string_view s) {
  if (s == "dt") return ClassifierKind::dt;
  if (s == "knn") return ClassifierKind::knn;
  if (s == "svm") return ClassifierKind::svm;
  throw ValidationError("unknown classifier '" + std::string(s) + "'");
}

struct AuditConfig {
  std::size_t window = 16;
  bool zscore = true;
  std::vector<AuditMode> modes = {AuditMode::raw, AuditMode::base_mean, AuditMode::sigmoid_filter,
                                  AuditMode::random_data};
  std::vector<SplitPlan> splits = {{SplitMode::by_data, 0.8, 0}, {SplitMode::by_index, 0.2, 0}};
  std::vector<ClassifierKind> classifiers = {ClassifierKind::dt, ClassifierKind::knn, ClassifierKind::svm};
  std::vector<std::string> scales = {"arousal", "valence"};
  std::size_t knn_k = 5;
  std::size_t tree_depth = 8;
  std::size_t svm_epochs = 20;
  double svm_lambda = 1e-3;
  std::uint64_t seed = 0;
};

struct AuditCell {
  AuditMode mode{};
  std::string split;  // SplitPlan::describe()
  ClassifierKind classifier{};
  std::string scale;
  double accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct AuditReport {
  std::vector<AuditCell> cells;
  nlohmann::json metadata = nlohmann::json::object();

  std::optional<double> accuracy(AuditMode mode, const std::string& split, ClassifierKind c,
                                 const std::string& scale) const {
    for (const auto& cell : cells) {
      if (cell.mode == mode && cell.split == split && cell.classifier == c && cell.scale == scale) {
        return cell.accuracy;
      }
    }
    return std::nullopt;
  }
};

// Same recordings and labels, samples redrawn i.i.d. N(0, 1).
inline Dataset randomize_samples(const Dataset& ds, std::uint64_t seed) {
  Dataset out = ds;
  Rng rng(seed);
  for (auto& rec : out.recordings) {
    for (auto& v : rec.samples.flat()) v = static_cast<float>(rng.normal());
  }
  out.attributes["randomized"] = seed;
  return out;
}

// Flattened processed trial segments; labels set per scale later.
inline std::vector<LabeledExample> build_examples(const Dataset& ds, const PrepConfig& prep) {
  std::vector<LabeledExample> out;
  for (const auto& rec : ds.recordings) {
    auto processed = process_trial(rec, prep);
    for (auto& seg : processed.segments) {
      LabeledExample ex;
      ex.features = std::move(seg.values.data());
      ex.provenance = {seg.origin.subject_id, seg.origin.trial_id, seg.origin.segment_index};
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline void assign_labels(std::vector<LabeledExample>& examples, const Dataset& ds, const std::string& scale) {
  std::map<std::pair<int, int>, BinaryLabel> labels;
  for (const auto& rec : ds.recordings) {
    auto it = rec.ratings.find(scale);
    if (it == rec.ratings.end()) throw ValidationError("recording lacks rating scale '" + scale + "'");
    labels[{rec.subject_id, rec.trial_id}] = binarize_label(it->second, scale);
  }
  for (auto& ex : examples) ex.label = labels.at(ex.provenance.trial_key());
}

inline AuditReport run_audit(const Dataset& ds, const AuditConfig& cfg) {
  AuditReport report;
  report.metadata = {{"seed", cfg.seed},
                     {"window", cfg.window},
                     {"zscore", cfg.zscore},
                     {"knn_k", cfg.knn_k},
                     {"tree_depth", cfg.tree_depth},
                     {"svm_epochs", cfg.svm_epochs},
                     {"svm_lambda", cfg.svm_lambda},
                     {"recordings", ds.recordings.size()},
                     {"channels", ds.channels.size()}};
  for (AuditMode mode : cfg.modes) {
    const std::string mode_name(to_string(mode));
    Dataset randomized;
    const Dataset* source = &ds;
    if (mode == AuditMode::random_data) {
      randomized = randomize_samples(ds, derive_seed(cfg.seed, "audit:random_data"));
      source = &randomized;
    }
    PrepConfig prep;
    prep.window = cfg.window;
    prep.zscore = cfg.zscore;
    prep.mode = mode == AuditMode::raw              ? BaselineMode::none
                : mode == AuditMode::sigmoid_filter ? BaselineMode::sigmoid_filter
                                                    : BaselineMode::base_mean;
    auto examples = build_examples(*source, prep);
    report.metadata["examples"] = examples.size();
    if (!examples.empty()) report.metadata["features"] = examples.front().features.size();

    for (SplitPlan plan : cfg.splits) {
      plan.seed = derive_seed(cfg.seed, "audit:split:" + plan.describe());
      const auto tt = split(examples, plan);
      for (const auto& scale : cfg.scales) {
        assign_labels(examples, *source, scale);
        const auto train = to_samples(examples, tt.train);
        const auto test = to_samples(examples, tt.test);
        for (ClassifierKind c : cfg.classifiers) {
          AuditCell cell{mode, plan.describe(), c, scale, 0.0, train.size(), test.size()};
          switch (c) {
            case ClassifierKind::knn: cell.accuracy = knn_classify(train, test, cfg.knn_k); break;
            case ClassifierKind::dt: cell.accuracy = tree_classify(train, test, cfg.tree_depth); break;
            case ClassifierKind::svm: {
              const auto seed = derive_seed(cfg.seed, "audit:svm:" + mode_name + ":" + plan.describe() + ":" + scale);
              cell.accuracy = linear_svm_classify(train, test, cfg.svm_epochs, cfg.svm_lambda, seed);
              break;
            }
          }
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return report;
}

}  // namespace emomap
