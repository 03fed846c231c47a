#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/dataset.hpp"
#include "rashomon/rng.hpp"

namespace rashomon {

enum class Impurity { gini, entropy };

inline std::string_view to_string(Impurity k) { return k == Impurity::gini ? "gini" : "entropy"; }

inline Impurity parse_impurity(std::string_view s) {
  if (s == "gini") return Impurity::gini;
  if (s == "entropy") return Impurity::entropy;
  throw ArgumentError("unknown impurity '" + std::string(s) + "'");
}

// Gini (1 - sum p^2) or entropy in bits (0 log 0 = 0) of a class histogram.
template <typename Count>
double impurity(std::span<const Count> counts, Impurity kind) {
  double total = 0.0;
  for (auto c : counts) {
    if (c < Count{0}) throw ArgumentError("class counts must be non-negative");
    total += static_cast<double>(c);
  }
  if (total <= 0.0) throw ArgumentError("impurity of an empty histogram is undefined");
  double acc = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / total;
    if (kind == Impurity::gini) {
      acc += p * p;
    } else if (p > 0.0) {
      acc -= p * std::log2(p);
    }
  }
  return kind == Impurity::gini ? 1.0 - acc : acc;
}

inline double impurity(std::initializer_list<double> counts, Impurity kind) {
  return impurity(std::span<const double>(counts.begin(), counts.size()), kind);
}

// Splits with a smaller impurity decrease (or gain) count as no improvement;
// candidates closer than this to the running best keep the lower column.
inline constexpr double kSplitTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Node storage shared by classification and boosting trees
// ---------------------------------------------------------------------------

// Binary test on one encoded column: rows with a 0 go left, rows with a 1 go
// right. Leaves carry `value` (a class distribution, or one boosting score).
struct TreeNode {
  std::int32_t column = -1;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t depth = 0;
  std::vector<double> value;

  bool is_leaf() const noexcept { return column < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::size_t n_cols = 0;

  std::size_t leaf_of(std::span<const std::uint8_t> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[i].column)] ? nodes[i].right : nodes[i].left);
    }
    return i;
  }

  const std::vector<double>& route(std::span<const std::uint8_t> row) const {
    if (row.size() != n_cols) {
      throw ArgumentError("row width " + std::to_string(row.size()) + " does not match tree width " +
                          std::to_string(n_cols));
    }
    return nodes[leaf_of(row)].value;
  }

  // Columns referenced by any internal node, ascending.
  std::vector<std::size_t> used_columns() const {
    std::vector<std::size_t> cols;
    for (const auto& n : nodes) {
      if (!n.is_leaf()) cols.push_back(static_cast<std::size_t>(n.column));
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    return cols;
  }

  bool operator==(const Tree&) const = default;
};

// ---------------------------------------------------------------------------
// Classification tree
// ---------------------------------------------------------------------------

struct TreeParams {
  int max_depth = 6;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  Impurity impurity = Impurity::gini;

  bool operator==(const TreeParams&) const = default;
};

struct DecisionTree {
  Tree tree;
  TreeParams params;
  std::uint64_t seed = 0;
  std::size_t n_classes = 0;

  std::vector<double> predict(std::span<const std::uint8_t> row) const { return tree.route(row); }

  std::vector<std::vector<double>> predict(const EncodedMatrix& m) const {
    std::vector<std::vector<double>> out;
    out.reserve(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(predict(m.row(r)));
    return out;
  }

  bool operator==(const DecisionTree&) const = default;
};

struct SplitChoice {
  std::size_t column = 0;
  double decrease = 0.0;
};

namespace detail {

// Class histogram of the rows that have a 1 in each candidate column, laid out
// column-major as ones[col * k + class]. Only active columns are visited.
inline std::vector<double> ones_histograms(const EncodedMatrix& m, std::span<const std::size_t> rows,
                                           std::span<const std::uint8_t> candidate) {
  const std::size_t k = m.n_classes();
  std::vector<double> ones(m.cols() * k, 0.0);
  for (auto r : rows) {
    const auto label = m.label(r);
    for (auto c : m.active(r)) {
      if (candidate[c]) ones[c * k + label] += 1.0;
    }
  }
  return ones;
}

}  // namespace detail

// Column among `columns` with the largest weighted impurity decrease of its 0/1
// partition. Returns nothing when no candidate improves by more than the split
// tolerance or every improving candidate leaves a side below min_samples_leaf.
inline std::optional<SplitChoice> best_split(const EncodedMatrix& m, std::span<const std::size_t> rows,
                                             std::span<const std::size_t> columns, Impurity kind,
                                             std::size_t min_samples_leaf = 1) {
  if (rows.empty()) throw ArgumentError("best_split needs at least one row");
  const std::size_t k = m.n_classes();
  std::vector<double> parent(k, 0.0);
  for (auto r : rows) parent[m.label(r)] += 1.0;
  const double n = static_cast<double>(rows.size());
  const double parent_impurity = impurity(std::span<const double>(parent), kind);
  if (parent_impurity <= 0.0) return std::nullopt;

  std::vector<std::uint8_t> candidate(m.cols(), 0);
  for (auto c : columns) {
    if (c >= m.cols()) throw ArgumentError("candidate column out of range");
    candidate[c] = 1;
  }
  const auto ones = detail::ones_histograms(m, rows, candidate);
  const std::size_t min_leaf = std::max<std::size_t>(min_samples_leaf, 1);

  std::optional<SplitChoice> best;
  std::vector<double> left(k), right(k);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (!candidate[c]) continue;
    double n_right = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      right[j] = ones[c * k + j];
      left[j] = parent[j] - right[j];
      n_right += right[j];
    }
    const double n_left = n - n_right;
    if (n_left < static_cast<double>(min_leaf) || n_right < static_cast<double>(min_leaf)) continue;
    const double child = n_left / n * impurity(std::span<const double>(left), kind) +
                         n_right / n * impurity(std::span<const double>(right), kind);
    const double decrease = parent_impurity - child;
    if (decrease <= kSplitTolerance) continue;
    if (!best || decrease > best->decrease + kSplitTolerance) best = SplitChoice{c, decrease};
  }
  return best;
}

namespace detail {

inline std::vector<double> distribution(const EncodedMatrix& m, std::span<const std::size_t> rows) {
  std::vector<double> dist(m.n_classes(), 0.0);
  for (auto r : rows) dist[m.label(r)] += 1.0;
  for (auto& p : dist) p /= static_cast<double>(rows.size());
  return dist;
}

// Per-node column sample of ceil(fraction * width) columns, ascending.
inline std::vector<std::size_t> sample_columns(std::size_t width, double fraction, std::uint64_t seed,
                                               std::size_t node) {
  std::vector<std::size_t> cols(width);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  if (fraction >= 1.0) return cols;
  const auto take =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(width))), 1, width);
  Rng rng(derive_seed(seed, fnv1a("columns"), node));
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(width - i));
    std::swap(cols[i], cols[j]);
  }
  cols.resize(take);
  std::sort(cols.begin(), cols.end());
  return cols;
}

class ClassificationGrower {
 public:
  ClassificationGrower(const EncodedMatrix& m, const TreeParams& p, std::uint64_t seed, double feature_fraction)
      : m_(m), p_(p), seed_(seed), fraction_(feature_fraction) {}

  Tree grow(std::vector<std::size_t> rows) {
    tree_.n_cols = m_.cols();
    grow_node(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow_node(std::vector<std::size_t> rows, int depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, -1, -1, depth, distribution(m_, rows)});

    if (depth >= p_.max_depth || rows.size() < p_.min_samples_split) return id;
    const auto columns = sample_columns(m_.cols(), fraction_, seed_, static_cast<std::size_t>(id));
    const auto split = best_split(m_, rows, columns, p_.impurity, p_.min_samples_leaf);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (m_.at(r, split->column) ? right : left).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[static_cast<std::size_t>(id)].column = static_cast<std::int32_t>(split->column);
    tree_.nodes[static_cast<std::size_t>(id)].value.clear();
    const auto l = grow_node(std::move(left), depth + 1);
    const auto r = grow_node(std::move(right), depth + 1);
    tree_.nodes[static_cast<std::size_t>(id)].left = l;
    tree_.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const EncodedMatrix& m_;
  const TreeParams& p_;
  std::uint64_t seed_;
  double fraction_;
  Tree tree_;
};

}  // namespace detail

// CART growth over all rows of `train`. `rows` overrides the training rows
// (repeats allowed, used for bootstrap samples) and `feature_fraction` < 1
// draws a fresh column sample at every node from `seed`.
inline DecisionTree fit_tree(const EncodedMatrix& train, const TreeParams& params, std::uint64_t seed,
                             std::optional<std::vector<std::size_t>> rows = std::nullopt,
                             double feature_fraction = 1.0) {
  if (train.rows() == 0) throw ArgumentError("cannot fit a tree on an empty matrix");
  if (params.max_depth < 1) throw ArgumentError("max_depth must be at least 1");
  std::vector<std::size_t> idx;
  if (rows) {
    idx = std::move(*rows);
    if (idx.empty()) throw ArgumentError("cannot fit a tree on an empty row sample");
  } else {
    idx.resize(train.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  detail::ClassificationGrower grower(train, params, seed, feature_fraction);
  return DecisionTree{grower.grow(std::move(idx)), params, seed, train.n_classes()};
}

inline std::vector<double> predict_tree(const DecisionTree& tree, std::span<const std::uint8_t> row) {
  return tree.predict(row);
}

}  // namespace rashomon
