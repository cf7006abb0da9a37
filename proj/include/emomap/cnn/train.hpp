#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "emomap/audit.hpp"
#include "emomap/brainmap.hpp"
#include "emomap/cnn/adam.hpp"
#include "emomap/cnn/checkpoint.hpp"
#include "emomap/cnn/network.hpp"
#include "emomap/data.hpp"
#include "emomap/error.hpp"
#include "emomap/preprocess.hpp"
#include "emomap/rng.hpp"

namespace emomap::cnn {

struct TensorExample {
  std::vector<float> values;  // frames x X x Y x Z
  int label = 0;
  Provenance provenance;
};

struct TensorDataset {
  Shape example_shape;  // frames, X, Y, Z
  std::vector<TensorExample> examples;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t epochs = 50;
  std::size_t batch_size = 240;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;   // folds trained concurrently
  bool keep_parameters = false;
};

struct FoldResult {
  std::vector<double> accuracies;
  double mean = 0.0;
  double std = 0.0;
  std::vector<std::vector<double>> loss_curves;  // per fold, mean training loss per epoch
  std::vector<std::size_t> fold_of_example;
  std::vector<std::vector<NamedBlob>> parameters;  // per fold when keep_parameters
};

// Every trial's windows land in the same fold. Trials are shuffled with the
// seed and dealt round-robin.
inline std::vector<std::size_t> by_data_folds(const TensorDataset& data, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (data.examples.size() < folds * 2) {
    throw ValidationError("need at least " + std::to_string(folds * 2) + " examples for " + std::to_string(folds) +
                          " folds, have " + std::to_string(data.examples.size()));
  }
  std::map<std::pair<int, int>, std::size_t> trial_index;
  for (const auto& ex : data.examples) trial_index.emplace(ex.provenance.trial_key(), 0);
  if (trial_index.size() < folds) {
    throw ValidationError("need at least " + std::to_string(folds) + " trials for by-data folds, have " +
                          std::to_string(trial_index.size()));
  }
  Rng rng(derive_seed(seed, "train:folds"));
  const auto order = rng.permutation(trial_index.size());
  std::vector<std::pair<int, int>> keys;
  for (const auto& [k, _] : trial_index) keys.push_back(k);
  for (std::size_t i = 0; i < order.size(); ++i) trial_index[keys[order[i]]] = i % folds;
  std::vector<std::size_t> out;
  out.reserve(data.examples.size());
  for (const auto& ex : data.examples) out.push_back(trial_index.at(ex.provenance.trial_key()));
  return out;
}

inline Tensor<float> make_batch(const TensorDataset& data, std::span<const std::size_t> idx) {
  Shape s{idx.size(), 1};
  s.insert(s.end(), data.example_shape.begin(), data.example_shape.end());
  Tensor<float> x(s);
  const std::size_t n = shape_size(data.example_shape);
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& v = data.examples[idx[b]].values;
    if (v.size() != n) throw ShapeError("example size does not match the dataset's example shape");
    std::copy(v.begin(), v.end(), x.data() + b * n);
  }
  return x;
}

// Shuffled mini-batches; a trailing batch of one example joins the previous
// batch so batch norm always sees at least two.
inline std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> idx, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  rng.shuffle(idx);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(i),
                     idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), i + batch_size)));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

inline std::vector<int> predict(Network<float>& net, const TensorDataset& data, std::span<const std::size_t> idx,
                                std::size_t batch_size) {
  std::vector<int> out;
  for (std::size_t i = 0; i < idx.size(); i += batch_size) {
    const auto part = idx.subspan(i, std::min(batch_size, idx.size() - i));
    const auto logits = net.forward(make_batch(data, part), false);
    for (std::size_t b = 0; b < part.size(); ++b) out.push_back(logits[b * 2 + 1] > logits[b * 2] ? 1 : 0);
  }
  return out;
}

struct SingleFold {
  double accuracy = 0.0;
  std::vector<double> losses;
  std::vector<NamedBlob> parameters;
};

inline SingleFold train_fold(const TensorDataset& data, const NetworkConfig& net_cfg, const TrainConfig& tc,
                             const std::vector<std::size_t>& fold_of, std::size_t fold) {
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == fold ? test_idx : train_idx).push_back(i);
  if (train_idx.size() < 2 || test_idx.empty()) throw ValidationError("fold " + std::to_string(fold) + " is too small");

  const std::string tag = "train:fold" + std::to_string(fold);
  Network<float> net(net_cfg, data.example_shape, derive_seed(tc.seed, tag + ":net"));
  Adam<float> opt(net.params(), tc.adam);
  Rng batch_rng(derive_seed(tc.seed, tag + ":batches"));

  SingleFold out;
  std::vector<int> labels;
  for (std::size_t e = 0; e < tc.epochs; ++e) {
    double total = 0.0;
    for (const auto& batch : make_batches(train_idx, tc.batch_size, batch_rng)) {
      labels.clear();
      for (auto i : batch) labels.push_back(data.examples[i].label);
      net.zero_grad();
      const auto logits = net.forward(make_batch(data, batch), true);
      auto [loss, grad] = batch_cross_entropy<float>(logits, labels);
      if (!std::isfinite(loss)) throw NumericError("training loss diverged in fold " + std::to_string(fold));
      net.backward(std::move(grad));
      opt.step();
      total += static_cast<double>(loss) * static_cast<double>(batch.size());
    }
    out.losses.push_back(total / static_cast<double>(train_idx.size()));
  }

  const auto pred = predict(net, data, test_idx, tc.batch_size);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < test_idx.size(); ++i) hit += pred[i] == data.examples[test_idx[i]].label;
  out.accuracy = static_cast<double>(hit) / static_cast<double>(test_idx.size());
  if (tc.keep_parameters) out.parameters = export_blobs(net, "fold" + std::to_string(fold) + "/");
  return out;
}

// Folds are independent; scheduling them on several threads does not change results.
inline FoldResult train(const TensorDataset& data, const NetworkConfig& net_cfg, const TrainConfig& tc,
                        std::optional<std::vector<std::size_t>> folds = std::nullopt) {
  if (!(tc.adam.lr > 0.0)) throw ValidationError("learning rate must be positive");
  validate(net_cfg);
  FoldResult res;
  res.fold_of_example = folds ? *folds : by_data_folds(data, tc.folds, tc.seed);
  if (res.fold_of_example.size() != data.examples.size()) throw ValidationError("fold assignment size mismatch");
  const std::size_t k = tc.folds;
  for (auto f : res.fold_of_example)
    if (f >= k) throw ValidationError("fold index out of range");

  std::vector<SingleFold> per(k);
  const std::size_t workers = std::clamp<std::size_t>(tc.threads, 1, k);
  if (workers == 1) {
    for (std::size_t f = 0; f < k; ++f) per[f] = train_fold(data, net_cfg, tc, res.fold_of_example, f);
  } else {
    std::vector<std::exception_ptr> errors(k);
    std::size_t next = 0;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t f;
          {
            std::lock_guard lock(mu);
            if (next >= k) return;
            f = next++;
          }
          try {
            per[f] = train_fold(data, net_cfg, tc, res.fold_of_example, f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (auto& p : per) {
    res.accuracies.push_back(p.accuracy);
    res.loss_curves.push_back(std::move(p.losses));
    if (tc.keep_parameters) res.parameters.push_back(std::move(p.parameters));
  }
  const auto ms = mean_std(std::span<const double>(res.accuracies));
  res.mean = ms.mean;
  res.std = ms.std;
  return res;
}

// ---------------------------------------------------------------------------
// Dataset -> processed windows -> mapped tensors.

struct PipelineConfig {
  PrepConfig prep{};
  MappingLevel level = MappingLevel::full;
  std::string scale = "valence";
};

inline TensorDataset build_tensor_dataset(const Dataset& ds, const ElectrodeMap& cns_only, const PipelineConfig& cfg) {
  validate(ds);
  const auto map = map_for_level(cns_only, cfg.level);
  TensorDataset out;
  for (const auto& rec : ds.recordings) {
    auto it = rec.ratings.find(cfg.scale);
    if (it == rec.ratings.end()) throw ValidationError("recording lacks rating scale '" + cfg.scale + "'");
    const int label = binarize_label(it->second, cfg.scale).value == Polarity::positive ? 1 : 0;
    auto processed = process_trial(rec, cfg.prep);
    for (const auto& seg : processed.segments) {
      auto t = assemble_tensor(seg.values, ds.channels, map);
      const Shape s{t.frames, static_cast<std::size_t>(t.dims.x), static_cast<std::size_t>(t.dims.y),
                    static_cast<std::size_t>(t.dims.z)};
      if (out.example_shape.empty()) out.example_shape = s;
      TensorExample ex;
      ex.values = std::move(t.values);
      ex.label = label;
      ex.provenance = {seg.origin.subject_id, seg.origin.trial_id, seg.origin.segment_index};
      out.examples.push_back(std::move(ex));
    }
  }
  if (out.examples.empty()) throw ValidationError("dataset produced no windows");
  return out;
}

// Control run: labels permuted across examples, breaking any signal/label link.
inline void shuffle_labels(TensorDataset& data, std::uint64_t seed) {
  std::vector<int> labels;
  for (const auto& ex : data.examples) labels.push_back(ex.label);
  Rng rng(derive_seed(seed, "train:label_shuffle"));
  rng.shuffle(labels);
  for (std::size_t i = 0; i < labels.size(); ++i) data.examples[i].label = labels[i];
}

// ---------------------------------------------------------------------------
// Ablation grids. All variants share the fold partition of the first variant's
// tensors (the example order does not depend on the mapping level).

struct AblationVariant {
  LayerCombo combo = LayerCombo::conv3d_conv3d_conv1d;
  MappingLevel level = MappingLevel::full;
  std::string name() const { return std::string(to_string(combo)) + " / " + std::string(to_string(level)); }
};

struct AblationRow {
  AblationVariant variant;
  FoldResult result;
};

inline std::vector<AblationVariant> layer_combination_grid(MappingLevel level = MappingLevel::full) {
  std::vector<AblationVariant> out;
  for (auto c : kLayerCombos) out.push_back({c, level});
  return out;
}

inline std::vector<AblationVariant> mapping_level_grid(LayerCombo combo = LayerCombo::conv3d_conv3d_conv1d) {
  std::vector<AblationVariant> out;
  for (auto l : {MappingLevel::image2d, MappingLevel::cns3d, MappingLevel::full, MappingLevel::without_eog,
                 MappingLevel::without_emg, MappingLevel::without_resp, MappingLevel::without_temp}) {
    out.push_back({combo, l});
  }
  return out;
}

inline std::vector<AblationVariant> leave_one_pns_out_grid(LayerCombo combo = LayerCombo::conv3d_conv3d_conv1d) {
  std::vector<AblationVariant> out;
  for (auto l : {MappingLevel::without_eog, MappingLevel::without_emg, MappingLevel::without_resp,
                 MappingLevel::without_temp}) {
    out.push_back({combo, l});
  }
  return out;
}

inline std::vector<AblationRow> ablate(const Dataset& ds, const ElectrodeMap& cns_only, const PipelineConfig& pipe,
                                       const NetworkConfig& base, const TrainConfig& tc,
                                       std::span<const AblationVariant> variants, bool shuffle = false) {
  if (variants.empty()) throw ValidationError("ablation needs at least one configuration");
  std::vector<AblationRow> rows;
  std::optional<std::vector<std::size_t>> folds;
  std::map<MappingLevel, TensorDataset> cache;
  for (const auto& v : variants) {
    auto it = cache.find(v.level);
    if (it == cache.end()) {
      PipelineConfig p = pipe;
      p.level = v.level;
      auto data = build_tensor_dataset(ds, cns_only, p);
      if (shuffle) shuffle_labels(data, tc.seed);
      it = cache.emplace(v.level, std::move(data)).first;
    }
    if (!folds) folds = by_data_folds(it->second, tc.folds, tc.seed);
    rows.push_back({v, train(it->second, with_combo(base, v.combo), tc, folds)});
  }
  return rows;
}

}  // namespace emomap::cnn
