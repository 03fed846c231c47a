#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/rng.hpp"

namespace rashomon {

// Small CART regression forest over continuous inputs, used as the
// Bayesian-optimization surrogate. The spread of per-tree predictions stands
// in for posterior uncertainty.
struct SurrogateOptions {
  std::size_t n_trees = 32;
  std::size_t min_samples_leaf = 1;
  double feature_fraction = 1.0;
};

class SurrogateForest {
 public:
  using Options = SurrogateOptions;

  struct Estimate {
    double mean = 0.0;
    double sd = 0.0;
  };

  SurrogateForest(std::span<const std::vector<double>> x, std::span<const double> y, std::uint64_t seed,
                  Options opt = {})
      : opt_(opt) {
    if (x.empty() || x.size() != y.size()) throw ArgumentError("surrogate needs matching, non-empty x and y");
    dims_ = x.front().size();
    for (std::size_t t = 0; t < opt_.n_trees; ++t) {
      Rng rng(derive_seed(seed, fnv1a("surrogate"), t));
      std::vector<std::size_t> rows(x.size());
      for (auto& r : rows) r = static_cast<std::size_t>(rng.index(x.size()));
      std::vector<Node> nodes;
      grow(nodes, x, y, rows, rng);
      trees_.push_back(std::move(nodes));
    }
  }

  Estimate estimate(std::span<const double> point) const {
    std::vector<double> preds;
    preds.reserve(trees_.size());
    for (const auto& t : trees_) preds.push_back(predict_tree(t, point));
    const double mean = std::accumulate(preds.begin(), preds.end(), 0.0) / static_cast<double>(preds.size());
    double ss = 0.0;
    for (auto p : preds) ss += (p - mean) * (p - mean);
    return {mean, std::sqrt(ss / static_cast<double>(preds.size()))};
  }

 private:
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  static double predict_tree(const std::vector<Node>& nodes, std::span<const double> point) {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(point[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
  }

  std::int32_t grow(std::vector<Node>& nodes, std::span<const std::vector<double>> x, std::span<const double> y,
                    std::vector<std::size_t> rows, Rng& rng) const {
    const auto id = static_cast<std::int32_t>(nodes.size());
    double mean = 0.0;
    for (auto r : rows) mean += y[r];
    mean /= static_cast<double>(rows.size());
    nodes.push_back(Node{-1, 0.0, -1, -1, mean});

    const std::size_t min_leaf = std::max<std::size_t>(opt_.min_samples_leaf, 1);
    if (rows.size() < 2 * min_leaf) return id;

    std::vector<std::size_t> features(dims_);
    std::iota(features.begin(), features.end(), std::size_t{0});
    const auto take = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(opt_.feature_fraction * static_cast<double>(dims_))), 1, dims_);
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(features[i], features[i + static_cast<std::size_t>(rng.index(dims_ - i))]);
    }
    features.resize(take);
    std::sort(features.begin(), features.end());

    // Minimise the summed squared error of the two children.
    double best_sse = 0.0;
    for (auto r : rows) best_sse += (y[r] - mean) * (y[r] - mean);
    const double parent_sse = best_sse;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order = rows;
    for (auto f : features) {
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a][f] < x[b][f]; });
      double left_sum = 0.0, left_sq = 0.0, total_sum = 0.0, total_sq = 0.0;
      for (auto r : order) {
        total_sum += y[r];
        total_sq += y[r] * y[r];
      }
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_sum += y[order[i]];
        left_sq += y[order[i]] * y[order[i]];
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double a = x[order[i]][f], b = x[order[i + 1]][f];
        if (!(a < b)) continue;
        const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                           ((total_sq - left_sq) - (total_sum - left_sum) * (total_sum - left_sum) / static_cast<double>(nr));
        if (sse < best_sse - 1e-15) {
          best_sse = sse;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (a + b);
        }
      }
    }
    if (best_feature < 0 || best_sse >= parent_sse) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(r);
    rows.clear();
    nodes[static_cast<std::size_t>(id)].feature = best_feature;
    nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
    const auto l = grow(nodes, x, y, std::move(left), rng);
    const auto r = grow(nodes, x, y, std::move(right), rng);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  Options opt_;
  std::size_t dims_ = 0;
  std::vector<std::vector<Node>> trees_;
};

// Expected improvement over `best` for a minimisation problem.
inline double expected_improvement(double mean, double sd, double best) {
  const double gap = best - mean;
  if (sd <= 1e-12) return std::max(gap, 0.0);
  const double z = gap / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return gap * cdf + sd * pdf;
}

}  // namespace rashomon
