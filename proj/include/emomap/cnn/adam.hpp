#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "emomap/cnn/layers.hpp"
#include "emomap/error.hpp"

namespace emomap::cnn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l2 = 1e-3;  // added to every gradient as l2 * theta
};

template <class T>
struct AdamState {
  std::vector<T> m, v;
  std::uint64_t t = 0;
};

template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& st, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("adam: parameter and gradient sizes differ");
  if (st.m.empty()) {
    st.m.assign(params.size(), T{});
    st.v.assign(params.size(), T{});
  }
  if (st.m.size() != params.size()) throw ShapeError("adam: state size differs from parameters");
  ++st.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]) + cfg.l2 * static_cast<double>(params[i]);
    const double m = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g;
    const double v = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g * g;
    st.m[i] = static_cast<T>(m);
    st.v[i] = static_cast<T>(v);
    params[i] = static_cast<T>(params[i] - cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps));
  }
}

template <class T>
class Adam {
 public:
  Adam(std::vector<ParamRef<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg), state_(params_.size()) {
    if (!(cfg.lr > 0.0)) throw ValidationError("learning rate must be positive");
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      adam_step<T>(params_[i].value->flat(), std::span<const T>(params_[i].grad->flat()), state_[i], cfg_);
    }
  }

 private:
  std::vector<ParamRef<T>> params_;
  AdamConfig cfg_;
  std::vector<AdamState<T>> state_;
};

}  // namespace emomap::cnn
