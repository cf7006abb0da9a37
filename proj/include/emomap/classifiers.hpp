#pragma once

// Small reference classifiers for the leakage audit: exact k-NN, CART with
// Gini gain, and a linear SVM trained by stochastic subgradient descent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emomap/error.hpp"
#include "emomap/rng.hpp"

namespace emomap {

// Row-major feature table with binary labels in {0, 1}.
struct Samples {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const noexcept { return {x.data() + i * dim, dim}; }

  void push(std::span<const double> features, int label) {
    if (y.empty() && dim == 0) dim = features.size();
    if (features.size() != dim) throw ValidationError("feature length differs within one sample table");
    x.insert(x.end(), features.begin(), features.end());
    y.push_back(label);
  }
};

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw ValidationError("accuracy: size mismatch or empty");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

inline int majority_label(std::span<const int> y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  return 2 * pos > static_cast<std::ptrdiff_t>(y.size()) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// k-NN

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

// Majority vote among the k nearest Euclidean neighbours; distance ties are
// broken by the lower training index.
inline std::vector<int> knn_predict(const Samples& train, const Samples& test, std::size_t k) {
  if (train.size() == 0) throw ValidationError("knn: empty training set");
  if (k == 0 || k % 2 == 0) throw ValidationError("knn: k must be odd");
  if (k > train.size()) throw ValidationError("knn: k exceeds training set size");
  if (test.size() > 0 && test.dim != train.dim) throw ValidationError("knn: feature length mismatch");
  std::vector<int> out(test.size());
  std::vector<std::pair<double, std::size_t>> dist(train.size());
  for (std::size_t q = 0; q < test.size(); ++q) {
    const auto xq = test.row(q);
    for (std::size_t i = 0; i < train.size(); ++i) dist[i] = {squared_distance(xq, train.row(i)), i};
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::size_t pos = 0;
    for (std::size_t j = 0; j < k; ++j) pos += train.y[dist[j].second] == 1;
    out[q] = 2 * pos > k ? 1 : 0;
  }
  return out;
}

inline double knn_classify(const Samples& train, const Samples& test, std::size_t k) {
  return accuracy(knn_predict(train, test, k), test.y);
}

// ---------------------------------------------------------------------------
// CART

struct SplitChoice {
  int feature = -1;  // -1: no split with positive gain
  double threshold = 0.0;
  double gain = 0.0;
};

inline double gini(std::size_t pos, std::size_t n) noexcept {
  if (n == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(n);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

// Gains within this tolerance count as ties.
inline constexpr double kGainTolerance = 1e-12;

// Best axis-aligned split of `idx` (x <= threshold goes left). Thresholds are
// midpoints between consecutive distinct values; ties prefer the lowest
// feature index, then the lowest threshold.
inline SplitChoice best_split(const Samples& s, std::span<const std::size_t> idx) {
  SplitChoice best;
  const std::size_t n = idx.size();
  if (n < 2) return best;
  std::size_t total_pos = 0;
  for (auto i : idx) total_pos += s.y[i] == 1;
  const double parent = gini(total_pos, n);
  std::vector<std::pair<double, int>> col(n);
  for (std::size_t f = 0; f < s.dim; ++f) {
    for (std::size_t k = 0; k < n; ++k) col[k] = {s.x[idx[k] * s.dim + f], s.y[idx[k]]};
    std::sort(col.begin(), col.end());
    std::size_t left_pos = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left_pos += col[k].second == 1;
      if (col[k].first == col[k + 1].first) continue;
      const std::size_t nl = k + 1, nr = n - nl;
      const double child = (static_cast<double>(nl) * gini(left_pos, nl) +
                            static_cast<double>(nr) * gini(total_pos - left_pos, nr)) /
                           static_cast<double>(n);
      const double gain = parent - child;
      if (gain > best.gain + kGainTolerance) {
        best = {static_cast<int>(f), 0.5 * (col[k].first + col[k + 1].first), gain};
      }
    }
  }
  return best;
}

class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };

  void fit(const Samples& s, std::size_t max_depth) {
    if (s.size() == 0) throw ValidationError("tree: empty training set");
    if (max_depth < 1) throw ValidationError("tree: max_depth must be >= 1");
    nodes_.clear();
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    build(s, idx, 0, max_depth);
  }

  int predict(std::span<const double> x) const {
    int at = 0;
    while (nodes_[at].feature >= 0) {
      at = x[nodes_[at].feature] <= nodes_[at].threshold ? nodes_[at].left : nodes_[at].right;
    }
    return nodes_[at].label;
  }

  std::vector<int> predict(const Samples& test) const {
    std::vector<int> out(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) out[i] = predict(test.row(i));
    return out;
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& root() const { return nodes_.at(0); }

 private:
  int build(const Samples& s, std::vector<std::size_t>& idx, std::size_t depth, std::size_t max_depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    std::vector<int> labels;
    labels.reserve(idx.size());
    for (auto i : idx) labels.push_back(s.y[i]);
    nodes_[id].label = majority_label(labels);
    if (depth >= max_depth) return id;
    const auto split = best_split(s, idx);
    if (split.feature < 0) return id;
    std::vector<std::size_t> left, right;
    for (auto i : idx) {
      (s.x[i * s.dim + split.feature] <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const int l = build(s, left, depth + 1, max_depth);
    const int r = build(s, right, depth + 1, max_depth);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<Node> nodes_;
};

inline double tree_classify(const Samples& train, const Samples& test, std::size_t max_depth) {
  DecisionTree t;
  t.fit(train, max_depth);
  return accuracy(t.predict(test), test.y);
}

// ---------------------------------------------------------------------------
// Linear SVM

// Hinge loss + (lambda/2)|w|^2 by SGD. Weight step eta_t = eta0 / (1 + lambda eta0 t)
// with the shrink factor clamped at 0; the bias is unregularised with step
// eta0 / sqrt(t).
class LinearSvm {
 public:
  struct Params {
    std::size_t epochs = 20;
    double lambda = 1e-3;
    double eta0 = 0.1;
    std::uint64_t seed = 0;
  };

  void fit(const Samples& s, const Params& p) {
    if (s.size() == 0) throw ValidationError("svm: empty training set");
    w_.assign(s.dim, 0.0);
    b_ = 0.0;
    Rng rng(p.seed);
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t t = 0;
    for (std::size_t e = 0; e < p.epochs; ++e) {
      rng.shuffle(order);
      for (auto i : order) {
        ++t;
        const double eta = p.eta0 / (1.0 + p.lambda * p.eta0 * static_cast<double>(t));
        const double eta_b = p.eta0 / std::sqrt(static_cast<double>(t));
        const double y = s.y[i] == 1 ? 1.0 : -1.0;
        const auto x = s.row(i);
        const double margin = y * decision(x);
        const double shrink = std::max(0.0, 1.0 - eta * p.lambda);
        for (auto& w : w_) w *= shrink;
        if (margin < 1.0) {
          for (std::size_t d = 0; d < w_.size(); ++d) w_[d] += eta * y * x[d];
          b_ += eta_b * y;
        }
      }
    }
  }

  double decision(std::span<const double> x) const noexcept {
    double v = b_;
    for (std::size_t d = 0; d < w_.size(); ++d) v += w_[d] * x[d];
    return v;
  }

  std::vector<int> predict(const Samples& test) const {
    std::vector<int> out(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) out[i] = decision(test.row(i)) >= 0.0 ? 1 : 0;
    return out;
  }

  const std::vector<double>& weights() const noexcept { return w_; }
  double bias() const noexcept { return b_; }

 private:
  std::vector<double> w_;
  double b_ = 0.0;
};

inline double linear_svm_classify(const Samples& train, const Samples& test, std::size_t epochs, double lambda,
                                  std::uint64_t seed = 0) {
  LinearSvm svm;
  svm.fit(train, {epochs, lambda, 0.1, seed});
  return accuracy(svm.predict(test), test.y);
}

}  // namespace emomap
