#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "emomap/cnn/layers.hpp"
#include "emomap/error.hpp"
#include "emomap/rng.hpp"

namespace emomap::cnn {

struct NetworkConfig {
  std::vector<std::size_t> conv3d_maps{8, 16};
  std::size_t conv3d_kernel = 3;
  bool use_conv1d = true;
  std::size_t conv1d_kernel = 8;
  std::size_t conv1d_stride = 4;
  std::vector<std::size_t> fc_sizes{128, 32, 2};
  double dropout = 0.5;
  bool batch_norm = true;
};

enum class LayerCombo { conv3d, conv3d_conv3d, conv3d_conv1d, conv3d_conv3d_conv1d };

inline constexpr LayerCombo kLayerCombos[] = {LayerCombo::conv3d, LayerCombo::conv3d_conv3d,
                                              LayerCombo::conv3d_conv1d, LayerCombo::conv3d_conv3d_conv1d};

inline std::string_view to_string(LayerCombo c) {
  switch (c) {
    case LayerCombo::conv3d: return "3D";
    case LayerCombo::conv3d_conv3d: return "3D+3D";
    case LayerCombo::conv3d_conv1d: return "3D+1D";
    case LayerCombo::conv3d_conv3d_conv1d: return "3D+3D+1D";
  }
  return "?";
}

inline LayerCombo parse_layer_combo(std::string_view s) {
  for (auto c : kLayerCombos)
    if (to_string(c) == s) return c;
  throw ValidationError("unknown layer combination '" + std::string(s) + "'");
}

// Keeps the map widths of `base`; a single 3-D layer uses the first width.
inline NetworkConfig with_combo(NetworkConfig base, LayerCombo c) {
  if (base.conv3d_maps.empty()) throw ValidationError("network needs at least one conv3d width");
  const bool two = c == LayerCombo::conv3d_conv3d || c == LayerCombo::conv3d_conv3d_conv1d;
  if (two && base.conv3d_maps.size() < 2) base.conv3d_maps.push_back(base.conv3d_maps.back());
  base.conv3d_maps.resize(two ? 2 : 1);
  base.use_conv1d = c == LayerCombo::conv3d_conv1d || c == LayerCombo::conv3d_conv3d_conv1d;
  return base;
}

inline void validate(const NetworkConfig& c) {
  if (c.conv3d_maps.empty()) throw ValidationError("network needs at least one conv3d layer");
  for (auto m : c.conv3d_maps)
    if (m == 0) throw ValidationError("conv3d map count must be positive");
  if (c.fc_sizes.empty() || c.fc_sizes.back() != 2) throw ValidationError("the last fully connected layer must have width 2");
  for (auto m : c.fc_sizes)
    if (m == 0) throw ValidationError("fully connected width must be positive");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
}

struct StageShape {
  std::string stage;
  Shape shape;
};

// Shapes after each stage for one example of shape frames x X x Y x Z,
// computed without allocating parameters.
inline std::vector<StageShape> infer_shapes(const NetworkConfig& c, const Shape& example) {
  validate(c);
  if (example.size() != 4) throw ShapeError("example must be frames x X x Y x Z, got " + to_string(example));
  for (auto d : example)
    if (d == 0) throw ShapeError("example dimensions must be positive");
  std::vector<StageShape> out;
  Shape s{1, 1, example[0], example[1], example[2], example[3]};
  out.push_back({"input", s});
  for (std::size_t i = 0; i < c.conv3d_maps.size(); ++i) {
    s[1] = c.conv3d_maps[i];
    out.push_back({"conv3d" + std::to_string(i + 1), s});
  }
  if (c.use_conv1d) {
    if (s[2] < c.conv1d_kernel) {
      throw ValidationError(std::to_string(s[2]) + " frames is fewer than the conv1d kernel length " +
                            std::to_string(c.conv1d_kernel));
    }
    s[2] = (s[2] - c.conv1d_kernel) / c.conv1d_stride + 1;
    out.push_back({"conv1d", s});
  }
  out.push_back({"flatten", {1, shape_size(s)}});
  for (std::size_t i = 0; i < c.fc_sizes.size(); ++i) out.push_back({"fc" + std::to_string(i + 1), {1, c.fc_sizes[i]}});
  return out;
}

// Stage order: [conv3d -> batchnorm -> relu -> dropout] x n, [conv1d -> relu],
// then fc -> relu for every hidden width and a final linear fc to 2 logits.
// Input batches are B x 1 x frames x X x Y x Z.
template <class T>
class Network {
 public:
  Network(const NetworkConfig& cfg, const Shape& example, std::uint64_t seed) : cfg_(cfg), example_(example) {
    const auto shapes = infer_shapes(cfg, example);
    Rng init(derive_seed(seed, "init"));
    std::size_t in = 1;
    for (std::size_t i = 0; i < cfg.conv3d_maps.size(); ++i) {
      const auto tag = std::to_string(i + 1);
      auto conv = std::make_unique<Conv3d<T>>(in, cfg.conv3d_maps[i], cfg.conv3d_kernel, "conv3d" + tag);
      conv->init(init);
      if (i == 0) conv->set_input_grad(false);
      layers_.push_back(std::move(conv));
      if (cfg.batch_norm) layers_.push_back(std::make_unique<BatchNorm<T>>(cfg.conv3d_maps[i], 0.9, 1e-8, "bn" + tag));
      layers_.push_back(std::make_unique<ReLU<T>>("relu3d" + tag));
      if (cfg.dropout > 0.0) {
        layers_.push_back(std::make_unique<Dropout<T>>(cfg.dropout, derive_seed(seed, "dropout" + tag), "dropout" + tag));
      }
      in = cfg.conv3d_maps[i];
    }
    if (cfg.use_conv1d) {
      auto conv = std::make_unique<Conv1dTime<T>>(in, in, cfg.conv1d_kernel, cfg.conv1d_stride, "conv1d");
      conv->init(init);
      layers_.push_back(std::move(conv));
      layers_.push_back(std::make_unique<ReLU<T>>("relu1d"));
    }
    std::size_t features = 0;
    for (const auto& st : shapes)
      if (st.stage == "flatten") features = st.shape[1];
    for (std::size_t i = 0; i < cfg.fc_sizes.size(); ++i) {
      const auto tag = std::to_string(i + 1);
      auto fc = std::make_unique<Dense<T>>(features, cfg.fc_sizes[i], "fc" + tag);
      fc->init(init);
      layers_.push_back(std::move(fc));
      if (i + 1 < cfg.fc_sizes.size()) layers_.push_back(std::make_unique<ReLU<T>>("relufc" + tag));
      features = cfg.fc_sizes[i];
    }
  }

  const NetworkConfig& config() const noexcept { return cfg_; }
  const Shape& example_shape() const noexcept { return example_; }

  Tensor<T> forward(Tensor<T> x, bool train) {
    if (x.rank() == 5) {
      Shape s = x.shape();
      s.insert(s.begin() + 1, 1);
      x.reshape(s);
    }
    for (auto& l : layers_) x = l->forward(x, train);
    return x;
  }

  void backward(Tensor<T> g) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    for (auto& l : layers_)
      for (auto& p : l->params()) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto& l : layers_) l->zero_grad();
  }

  std::vector<std::unique_ptr<Layer<T>>>& layers() noexcept { return layers_; }

  // Running batch-norm statistics, named like parameters.
  std::vector<std::pair<std::string, std::vector<double>*>> buffers() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    for (auto& l : layers_) {
      if (auto* bn = dynamic_cast<BatchNorm<T>*>(l.get())) {
        out.emplace_back(bn->name() + ".running_mean", &bn->running_mean());
        out.emplace_back(bn->name() + ".running_var", &bn->running_var());
      }
    }
    return out;
  }

 private:
  NetworkConfig cfg_;
  Shape example_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace emomap::cnn
