#pragma once

// Layers with hand-written backward passes. Every layer caches what its
// backward pass needs during forward(); backward() must follow the forward()
// call whose gradient it computes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "emomap/cnn/tensor.hpp"
#include "emomap/error.hpp"
#include "emomap/rng.hpp"

namespace emomap::cnn {

template <class T>
struct ParamRef {
  std::string name;
  Tensor<T>* value;
  Tensor<T>* grad;
};

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual std::vector<ParamRef<T>> params() { return {}; }
  virtual std::string name() const = 0;

  void zero_grad() {
    for (auto& p : params()) p.grad->fill(T{});
  }
};

template <class T>
void he_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : w.flat()) v = static_cast<T>(rng.uniform(-limit, limit));
}

// ---------------------------------------------------------------------------

// Spatial 3-D cross-correlation applied to every frame independently
// (kernel 1 x k x k x k), zero "same" padding of k/2 cells.
// x: B x Cin x F x X x Y x Z -> B x Cout x F x X x Y x Z
template <class T>
class Conv3d : public Layer<T> {
 public:
  Conv3d(std::size_t in_maps, std::size_t out_maps, std::size_t kernel = 3, std::string name = "conv3d")
      : in_(in_maps), out_(out_maps), k_(kernel), name_(std::move(name)),
        weight_({out_maps, in_maps, kernel, kernel, kernel}), bias_({out_maps}),
        gweight_(weight_.shape()), gbias_(bias_.shape()) {
    if (kernel % 2 == 0 || kernel == 0) throw ValidationError("conv3d kernel must be odd");
  }

  void init(Rng& rng) {
    he_uniform(weight_, in_ * k_ * k_ * k_, rng);
    bias_.fill(T{});
  }

  // The first layer of a network never needs dL/dx.
  void set_input_grad(bool on) { need_input_grad_ = on; }

  Shape output_shape(const Shape& in) const override {
    check(in);
    return {in[0], out_, in[2], in[3], in[4], in[5]};
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    check(x.shape());
    geom(x.shape());
    const std::size_t B = x.dim(0), F = x.dim(2);
    // padded copy of the input
    padded_ = Tensor<T>({B, in_, F, vp_});
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t i = 0; i < in_; ++i)
        for (std::size_t f = 0; f < F; ++f) pad_into(&x[((b * in_ + i) * F + f) * v_], &padded_[((b * in_ + i) * F + f) * vp_]);

    Tensor<T> y({B, out_, F, X_, Y_, Z_});
    std::vector<T> acc(vp_);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t o = 0; o < out_; ++o) {
          std::fill(acc.begin(), acc.end(), bias_[o]);
          for (std::size_t i = 0; i < in_; ++i) {
            const T* xp = &padded_[((b * in_ + i) * F + f) * vp_];
            const T* w = &weight_[(o * in_ + i) * kk_];
            for (std::size_t k = 0; k < kk_; ++k) {
              const T wk = w[k];
              const T* src = xp + offsets_[k];
              T* __restrict dst = acc.data();
              for (std::size_t p = lo_; p < hi_; ++p) dst[p] += wk * src[p];
            }
          }
          unpad_from(acc.data(), &y[((b * out_ + o) * F + f) * v_]);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t B = gy.dim(0), F = gy.dim(2);
    Tensor<T> gx;
    Tensor<T> gxp;
    if (need_input_grad_) gxp = Tensor<T>({B, in_, F, vp_});
    std::vector<T> gpad(vp_);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t o = 0; o < out_; ++o) {
          const T* g = &gy[((b * out_ + o) * F + f) * v_];
          std::fill(gpad.begin(), gpad.end(), T{});
          pad_into(g, gpad.data());
          T gb{};
#pragma omp simd reduction(+ : gb)
          for (std::size_t p = 0; p < v_; ++p) gb += g[p];
          gbias_[o] += gb;
          for (std::size_t i = 0; i < in_; ++i) {
            const T* xp = &padded_[((b * in_ + i) * F + f) * vp_];
            const T* w = &weight_[(o * in_ + i) * kk_];
            T* gw = &gweight_[(o * in_ + i) * kk_];
            T* gxi = need_input_grad_ ? &gxp[((b * in_ + i) * F + f) * vp_] : nullptr;
            for (std::size_t k = 0; k < kk_; ++k) {
              const std::ptrdiff_t off = offsets_[k];
              const T* src = xp + off;
              T s{};
#pragma omp simd reduction(+ : s)
              for (std::size_t p = lo_; p < hi_; ++p) s += gpad[p] * src[p];
              gw[k] += s;
              if (gxi) {
                const T wk = w[k];
                T* __restrict dst = gxi + off;
                for (std::size_t p = lo_; p < hi_; ++p) dst[p] += wk * gpad[p];
              }
            }
          }
        }
      }
    }
    if (need_input_grad_) {
      gx = Tensor<T>({B, in_, F, X_, Y_, Z_});
      for (std::size_t s = 0; s < B * in_ * F; ++s) unpad_from(&gxp[s * vp_], &gx[s * v_]);
    }
    return gx;
  }

  std::vector<ParamRef<T>> params() override {
    return {{name_ + ".weight", &weight_, &gweight_}, {name_ + ".bias", &bias_, &gbias_}};
  }
  std::string name() const override { return name_; }

  Tensor<T>& weight() noexcept { return weight_; }
  Tensor<T>& bias() noexcept { return bias_; }

 private:
  void check(const Shape& in) const {
    if (in.size() != 6) throw ShapeError(name_ + ": expected B x C x F x X x Y x Z input, got " + to_string(in));
    if (in[1] != in_) throw ShapeError(name_ + ": expected " + std::to_string(in_) + " input maps, got " + to_string(in));
  }

  void geom(const Shape& in) {
    X_ = in[3];
    Y_ = in[4];
    Z_ = in[5];
    P_ = k_ / 2;
    Xp_ = X_ + 2 * P_;
    Yp_ = Y_ + 2 * P_;
    Zp_ = Z_ + 2 * P_;
    v_ = X_ * Y_ * Z_;
    vp_ = Xp_ * Yp_ * Zp_;
    kk_ = k_ * k_ * k_;
    const std::size_t sx = Yp_ * Zp_, sy = Zp_;
    lo_ = P_ * sx + P_ * sy + P_;
    hi_ = (X_ - 1 + P_) * sx + (Y_ - 1 + P_) * sy + (Z_ - 1 + P_) + 1;
    offsets_.resize(kk_);
    const auto p = static_cast<std::ptrdiff_t>(P_);
    for (std::size_t a = 0; a < k_; ++a)
      for (std::size_t b = 0; b < k_; ++b)
        for (std::size_t c = 0; c < k_; ++c)
          offsets_[(a * k_ + b) * k_ + c] = (static_cast<std::ptrdiff_t>(a) - p) * static_cast<std::ptrdiff_t>(sx) +
                                            (static_cast<std::ptrdiff_t>(b) - p) * static_cast<std::ptrdiff_t>(sy) +
                                            (static_cast<std::ptrdiff_t>(c) - p);
  }

  void pad_into(const T* src, T* dst) const {
    for (std::size_t x = 0; x < X_; ++x)
      for (std::size_t y = 0; y < Y_; ++y)
        std::copy_n(src + (x * Y_ + y) * Z_, Z_, dst + ((x + P_) * Yp_ + (y + P_)) * Zp_ + P_);
  }

  void unpad_from(const T* src, T* dst) const {
    for (std::size_t x = 0; x < X_; ++x)
      for (std::size_t y = 0; y < Y_; ++y)
        std::copy_n(src + ((x + P_) * Yp_ + (y + P_)) * Zp_ + P_, Z_, dst + (x * Y_ + y) * Z_);
  }

  std::size_t in_, out_, k_;
  std::string name_;
  Tensor<T> weight_, bias_, gweight_, gbias_;
  bool need_input_grad_ = true;
  Tensor<T> padded_;
  std::size_t X_ = 0, Y_ = 0, Z_ = 0, P_ = 0, Xp_ = 0, Yp_ = 0, Zp_ = 0, v_ = 0, vp_ = 0, kk_ = 0, lo_ = 0, hi_ = 0;
  std::vector<std::ptrdiff_t> offsets_;
};

// ---------------------------------------------------------------------------

// Temporal convolution (kernel k x 1 x 1 x 1, stride s along frames, valid).
// x: B x Cin x F x S... -> B x Cout x ((F - k) / s + 1) x S...
template <class T>
class Conv1dTime : public Layer<T> {
 public:
  Conv1dTime(std::size_t in_maps, std::size_t out_maps, std::size_t kernel = 8, std::size_t stride = 4,
             std::string name = "conv1d")
      : in_(in_maps), out_(out_maps), k_(kernel), s_(stride), name_(std::move(name)),
        weight_({out_maps, in_maps, kernel}), bias_({out_maps}), gweight_(weight_.shape()), gbias_(bias_.shape()) {
    if (kernel == 0 || stride == 0) throw ValidationError("conv1d kernel and stride must be positive");
  }

  void init(Rng& rng) {
    he_uniform(weight_, in_ * k_, rng);
    bias_.fill(T{});
  }

  Shape output_shape(const Shape& in) const override {
    check(in);
    Shape out = in;
    out[1] = out_;
    out[2] = (in[2] - k_) / s_ + 1;
    return out;
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const Shape os = output_shape(x.shape());
    input_ = x;
    const std::size_t B = x.dim(0), F = x.dim(2), Fo = os[2];
    const std::size_t V = x.size() / (B * in_ * F);
    Tensor<T> y(os);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < out_; ++o)
        for (std::size_t t = 0; t < Fo; ++t) {
          T* __restrict dst = &y[((b * out_ + o) * Fo + t) * V];
          std::fill_n(dst, V, bias_[o]);
          for (std::size_t i = 0; i < in_; ++i)
            for (std::size_t j = 0; j < k_; ++j) {
              const T w = weight_[(o * in_ + i) * k_ + j];
              const T* src = &x[((b * in_ + i) * F + t * s_ + j) * V];
              for (std::size_t v = 0; v < V; ++v) dst[v] += w * src[v];
            }
        }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const auto& x = input_;
    const std::size_t B = x.dim(0), F = x.dim(2), Fo = gy.dim(2);
    const std::size_t V = x.size() / (B * in_ * F);
    Tensor<T> gx(x.shape());
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < out_; ++o)
        for (std::size_t t = 0; t < Fo; ++t) {
          const T* g = &gy[((b * out_ + o) * Fo + t) * V];
          T gb{};
#pragma omp simd reduction(+ : gb)
          for (std::size_t v = 0; v < V; ++v) gb += g[v];
          gbias_[o] += gb;
          for (std::size_t i = 0; i < in_; ++i)
            for (std::size_t j = 0; j < k_; ++j) {
              const std::size_t at = ((b * in_ + i) * F + t * s_ + j) * V;
              const T* src = &x[at];
              T* __restrict gdst = &gx[at];
              const T w = weight_[(o * in_ + i) * k_ + j];
              T s{};
#pragma omp simd reduction(+ : s)
              for (std::size_t v = 0; v < V; ++v) {
                s += g[v] * src[v];
                gdst[v] += w * g[v];
              }
              gweight_[(o * in_ + i) * k_ + j] += s;
            }
        }
    return gx;
  }

  std::vector<ParamRef<T>> params() override {
    return {{name_ + ".weight", &weight_, &gweight_}, {name_ + ".bias", &bias_, &gbias_}};
  }
  std::string name() const override { return name_; }
  Tensor<T>& weight() noexcept { return weight_; }
  Tensor<T>& bias() noexcept { return bias_; }

 private:
  void check(const Shape& in) const {
    if (in.size() < 3 || in[1] != in_) throw ShapeError(name_ + ": bad input shape " + to_string(in));
    if (in[2] < k_) {
      throw ValidationError(name_ + ": " + std::to_string(in[2]) + " frames is fewer than the kernel length " +
                            std::to_string(k_));
    }
  }

  std::size_t in_, out_, k_, s_;
  std::string name_;
  Tensor<T> weight_, bias_, gweight_, gbias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------

// Per-map normalisation over every axis except axis 1. Running statistics:
// r <- momentum * r + (1 - momentum) * batch (biased batch variance).
template <class T>
class BatchNorm : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t maps, double momentum = 0.9, double eps = 1e-8, std::string name = "batchnorm")
      : c_(maps), momentum_(momentum), eps_(eps), name_(std::move(name)), gamma_({maps}, T{1}), beta_({maps}),
        ggamma_({maps}), gbeta_({maps}), running_mean_(maps, 0.0), running_var_(maps, 1.0) {}

  Shape output_shape(const Shape& in) const override {
    if (in.size() < 2 || in[1] != c_) throw ShapeError(name_ + ": bad input shape " + to_string(in));
    return in;
  }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    output_shape(x.shape());
    const std::size_t B = x.dim(0);
    const std::size_t inner = x.size() / (B * c_);
    if (train && B < 2) throw ValidationError(name_ + ": training-mode batch norm needs a batch of at least 2");
    Tensor<T> y(x.shape());
    xhat_ = Tensor<T>(x.shape());
    inv_std_.assign(c_, 0.0);
    const double n = static_cast<double>(B * inner);
    for (std::size_t c = 0; c < c_; ++c) {
      double mean, var;
      if (train) {
        double s = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
          const T* p = &x[(b * c_ + c) * inner];
          for (std::size_t k = 0; k < inner; ++k) s += p[k];
        }
        mean = s / n;
        double q = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
          const T* p = &x[(b * c_ + c) * inner];
          for (std::size_t k = 0; k < inner; ++k) q += (p[k] - mean) * (p[k] - mean);
        }
        var = q / n;
        running_mean_[c] = momentum_ * running_mean_[c] + (1.0 - momentum_) * mean;
        running_var_[c] = momentum_ * running_var_[c] + (1.0 - momentum_) * var;
      } else {
        mean = running_mean_[c];
        var = running_var_[c];
      }
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[c] = inv;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t at = (b * c_ + c) * inner;
        for (std::size_t k = 0; k < inner; ++k) {
          const T xh = static_cast<T>((x[at + k] - mean) * inv);
          xhat_[at + k] = xh;
          y[at + k] = gamma_[c] * xh + beta_[c];
        }
      }
    }
    train_ = train;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t B = gy.dim(0);
    const std::size_t inner = gy.size() / (B * c_);
    const double n = static_cast<double>(B * inner);
    Tensor<T> gx(gy.shape());
    for (std::size_t c = 0; c < c_; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t at = (b * c_ + c) * inner;
        for (std::size_t k = 0; k < inner; ++k) {
          sum_g += gy[at + k];
          sum_gx += static_cast<double>(gy[at + k]) * xhat_[at + k];
        }
      }
      gbeta_[c] += static_cast<T>(sum_g);
      ggamma_[c] += static_cast<T>(sum_gx);
      const double g = gamma_[c];
      const double inv = inv_std_[c];
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t at = (b * c_ + c) * inner;
        for (std::size_t k = 0; k < inner; ++k) {
          if (train_) {
            // dx = gamma * inv / n * (n dy - sum dy - xhat sum(dy xhat))
            gx[at + k] = static_cast<T>(g * inv / n * (n * gy[at + k] - sum_g - xhat_[at + k] * sum_gx));
          } else {
            gx[at + k] = static_cast<T>(g * inv * gy[at + k]);
          }
        }
      }
    }
    return gx;
  }

  std::vector<ParamRef<T>> params() override {
    return {{name_ + ".gamma", &gamma_, &ggamma_}, {name_ + ".beta", &beta_, &gbeta_}};
  }
  std::string name() const override { return name_; }

  Tensor<T>& gamma() noexcept { return gamma_; }
  Tensor<T>& beta() noexcept { return beta_; }
  const std::vector<double>& running_mean() const noexcept { return running_mean_; }
  const std::vector<double>& running_var() const noexcept { return running_var_; }
  std::vector<double>& running_mean() noexcept { return running_mean_; }
  std::vector<double>& running_var() noexcept { return running_var_; }

 private:
  std::size_t c_;
  double momentum_, eps_;
  std::string name_;
  Tensor<T> gamma_, beta_, ggamma_, gbeta_;
  std::vector<double> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
  bool train_ = true;
};

// ---------------------------------------------------------------------------

template <class T>
class ReLU : public Layer<T> {
 public:
  explicit ReLU(std::string name = "relu") : name_(std::move(name)) {}
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    Tensor<T> y(x.shape());
    mask_.resize(x.size());
    // branch-free: signs are random, so a branch mispredicts half the time
    for (std::size_t i = 0; i < x.size(); ++i) {
      const T m = x[i] > T{} ? T{1} : T{};
      mask_[i] = m;
      y[i] = x[i] * m;
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask_[i];
    return gx;
  }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  std::vector<T> mask_;
};

// Inverted dropout: kept units scaled by 1 / (1 - rate); identity when not training.
template <class T>
class Dropout : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t seed, std::string name = "dropout")
      : rate_(rate), rng_(seed), name_(std::move(name)) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
  }

  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }
  Shape output_shape(const Shape& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& x, bool train) override {
    active_ = train && rate_ > 0.0;
    if (!active_) return x;
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    // One engine draw per pass seeds a splitmix64 stream; each 64-bit word
    // gives two 32-bit uniforms and a unit is dropped when u < rate * 2^32.
    const auto threshold = static_cast<std::uint64_t>(std::ldexp(rate_, 32));
    const std::uint64_t base = rng_.next_u64();
    mask_.resize(x.size());
    for (std::size_t i = 0; i < mask_.size(); i += 2) {
      const std::uint64_t u = splitmix64(base + (i / 2) * 0x9E3779B97F4A7C15ULL);
      mask_[i] = static_cast<T>((u & 0xffffffffu) >= threshold) * scale;
      if (i + 1 < mask_.size()) mask_[i + 1] = static_cast<T>((u >> 32) >= threshold) * scale;
    }
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask_[i];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    if (!active_) return gy;
    Tensor<T> gx(gy.shape());
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * mask_[i];
    return gx;
  }
  std::string name() const override { return name_; }
  const std::vector<T>& mask() const noexcept { return mask_; }

 private:
  double rate_;
  Rng rng_;
  std::string name_;
  std::vector<T> mask_;
  bool active_ = false;
};

// ---------------------------------------------------------------------------

// Fully connected; any input is flattened to B x (size / B).
template <class T>
class Dense : public Layer<T> {
 public:
  Dense(std::size_t in, std::size_t out, std::string name = "fc")
      : in_(in), out_(out), name_(std::move(name)), weight_({out, in}), bias_({out}), gweight_({out, in}),
        gbias_({out}) {}

  void init(Rng& rng) {
    he_uniform(weight_, in_, rng);
    bias_.fill(T{});
  }

  Shape output_shape(const Shape& in) const override {
    if (in.empty() || shape_size(in) != in[0] * in_) {
      throw ShapeError(name_ + ": expected " + std::to_string(in_) + " features per example, got " + to_string(in));
    }
    return {in[0], out_};
  }

  Tensor<T> forward(const Tensor<T>& x, bool) override {
    const Shape os = output_shape(x.shape());
    input_ = x;
    const std::size_t B = os[0];
    Tensor<T> y(os);
    for (std::size_t b = 0; b < B; ++b) {
      const T* xb = &x[b * in_];
      for (std::size_t o = 0; o < out_; ++o) {
        const T* w = &weight_[o * in_];
        T s = bias_[o];
#pragma omp simd reduction(+ : s)
        for (std::size_t i = 0; i < in_; ++i) s += w[i] * xb[i];
        y[b * out_ + o] = s;
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) override {
    const std::size_t B = gy.dim(0);
    Tensor<T> gx(input_.shape());
    for (std::size_t b = 0; b < B; ++b) {
      const T* xb = &input_[b * in_];
      T* __restrict gxb = &gx[b * in_];
      for (std::size_t o = 0; o < out_; ++o) {
        const T g = gy[b * out_ + o];
        if (g == T{}) continue;
        gbias_[o] += g;
        const T* w = &weight_[o * in_];
        T* __restrict gw = &gweight_[o * in_];
        for (std::size_t i = 0; i < in_; ++i) {
          gw[i] += g * xb[i];
          gxb[i] += g * w[i];
        }
      }
    }
    return gx;
  }

  std::vector<ParamRef<T>> params() override {
    return {{name_ + ".weight", &weight_, &gweight_}, {name_ + ".bias", &bias_, &gbias_}};
  }
  std::string name() const override { return name_; }
  Tensor<T>& weight() noexcept { return weight_; }
  Tensor<T>& bias() noexcept { return bias_; }

 private:
  std::size_t in_, out_;
  std::string name_;
  Tensor<T> weight_, bias_, gweight_, gbias_;
  Tensor<T> input_;
};

// ---------------------------------------------------------------------------

template <class T>
struct LossAndGrad {
  T loss{};
  std::vector<T> grad;  // dL/dlogits
};

// -log softmax(logits)[label], stabilised by subtracting the max logit.
template <class T>
LossAndGrad<T> softmax_cross_entropy(std::span<const T> logits, std::size_t label) {
  if (label >= logits.size()) throw ValidationError("label index out of range");
  const T mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (T v : logits) z += std::exp(static_cast<double>(v - mx));
  const double log_z = std::log(z);
  LossAndGrad<T> out;
  out.loss = static_cast<T>(log_z - static_cast<double>(logits[label] - mx));
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad[i] = static_cast<T>(std::exp(static_cast<double>(logits[i] - mx) - log_z) - (i == label ? 1.0 : 0.0));
  }
  return out;
}

template <class T>
std::vector<T> softmax(std::span<const T> logits) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (T v : logits) z += std::exp(static_cast<double>(v - mx));
  std::vector<T> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = static_cast<T>(std::exp(static_cast<double>(logits[i] - mx)) / z);
  return p;
}

// Mean loss over the batch; the gradient carries the 1 / B factor.
template <class T>
std::pair<T, Tensor<T>> batch_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (labels.size() != B) throw ShapeError("label count differs from batch size");
  Tensor<T> grad(logits.shape());
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    auto r = softmax_cross_entropy<T>(std::span<const T>(&logits[b * C], C), static_cast<std::size_t>(labels[b]));
    total += r.loss;
    for (std::size_t c = 0; c < C; ++c) grad[b * C + c] = r.grad[c] / static_cast<T>(B);
  }
  return {static_cast<T>(total / static_cast<double>(B)), std::move(grad)};
}

}  // namespace emomap::cnn
