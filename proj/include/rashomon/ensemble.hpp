#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/dataset.hpp"
#include "rashomon/rng.hpp"
#include "rashomon/tree.hpp"

namespace rashomon {

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct ForestParams {
  int n_trees = 100;
  int max_depth = 8;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  double feature_fraction = 0.5;
  bool bootstrap = true;
  Impurity impurity = Impurity::gini;
  std::uint64_t seed = 0;

  TreeParams tree_params() const { return {max_depth, min_samples_leaf, min_samples_split, impurity}; }
  bool operator==(const ForestParams&) const = default;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::size_t n_classes = 0;

  void predict_into(std::span<const std::uint8_t> row, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : trees) {
      const auto& dist = t.tree.route(row);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += dist[k];
    }
    for (auto& p : out) p /= static_cast<double>(trees.size());
  }

  bool operator==(const RandomForest&) const = default;
};

inline RandomForest fit_forest(const EncodedMatrix& train, const ForestParams& p) {
  if (train.rows() == 0) throw ArgumentError("cannot fit a forest on an empty matrix");
  if (p.n_trees < 1) throw ArgumentError("n_trees must be at least 1");
  if (!(p.feature_fraction > 0.0 && p.feature_fraction <= 1.0)) {
    throw ArgumentError("feature_fraction must lie in (0, 1]");
  }
  RandomForest forest{{}, p, train.n_classes()};
  forest.trees.reserve(static_cast<std::size_t>(p.n_trees));
  for (int t = 0; t < p.n_trees; ++t) {
    const auto tree_seed = derive_seed(p.seed, fnv1a("tree"), static_cast<std::uint64_t>(t));
    std::optional<std::vector<std::size_t>> rows;
    if (p.bootstrap) {
      Rng rng(derive_seed(p.seed, fnv1a("bootstrap"), static_cast<std::uint64_t>(t)));
      rows.emplace(train.rows());
      for (auto& r : *rows) r = static_cast<std::size_t>(rng.index(train.rows()));
      std::sort(rows->begin(), rows->end());
    }
    forest.trees.push_back(fit_tree(train, p.tree_params(), tree_seed, std::move(rows), p.feature_fraction));
  }
  return forest;
}

// ---------------------------------------------------------------------------
// Gradient-boosted trees
// ---------------------------------------------------------------------------

enum class Growth { depthwise, leafwise };

inline std::string_view to_string(Growth g) { return g == Growth::depthwise ? "depthwise" : "leafwise"; }

inline Growth parse_growth(std::string_view s) {
  if (s == "depthwise") return Growth::depthwise;
  if (s == "leafwise") return Growth::leafwise;
  throw ArgumentError("unknown growth mode '" + std::string(s) + "'");
}

struct GbdtParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  Growth growth = Growth::depthwise;
  int max_depth = 3;    // binding for depthwise growth
  int max_leaves = 31;  // binding for leafwise growth
  std::size_t min_samples_leaf = 1;
  double l2_reg = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const GbdtParams&) const = default;
};

// Additive score model. Binary problems keep one score per row (logistic
// link); K > 2 classes keep K scores (softmax link).
struct GradientBoosting {
  std::vector<double> base_score;
  std::vector<std::vector<Tree>> rounds;  // rounds[r][output]
  GbdtParams params;
  std::size_t n_classes = 0;

  std::size_t n_outputs() const noexcept { return n_classes == 2 ? 1 : n_classes; }

  void raw_scores(std::span<const std::uint8_t> row, std::span<double> scores) const {
    std::copy(base_score.begin(), base_score.end(), scores.begin());
    for (const auto& round : rounds) {
      for (std::size_t o = 0; o < round.size(); ++o) scores[o] += round[o].route(row)[0];
    }
  }

  void predict_into(std::span<const std::uint8_t> row, std::span<double> out) const {
    if (n_classes == 2) {
      double s = 0.0;
      raw_scores(row, std::span<double>(&s, 1));
      const double p = 1.0 / (1.0 + std::exp(-s));
      out[0] = 1.0 - p;
      out[1] = p;
      return;
    }
    raw_scores(row, out);
    softmax(out);
  }

  static void softmax(std::span<double> v) {
    const double hi = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (auto& x : v) {
      x = std::exp(x - hi);
      sum += x;
    }
    for (auto& x : v) x /= sum;
  }

  bool operator==(const GradientBoosting&) const = default;
};

namespace detail {

inline constexpr double kMinProbability = 1e-15;
inline constexpr double kMinHessian = 1e-16;

// Second-order regression tree grower on per-row gradients and hessians.
class BoostingGrower {
 public:
  BoostingGrower(const EncodedMatrix& m, std::span<const double> grad, std::span<const double> hess,
                 const GbdtParams& p)
      : m_(m), g_(grad), h_(hess), p_(p) {}

  Tree grow() {
    tree_ = Tree{};
    tree_.n_cols = m_.cols();
    std::vector<std::size_t> all(m_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    open_.clear();
    open_.push_back(make_leaf(std::move(all), 0));
    if (p_.growth == Growth::depthwise) {
      grow_depthwise();
    } else {
      grow_leafwise();
    }
    return std::move(tree_);
  }

 private:
  struct Candidate {
    std::size_t column = 0;
    double gain = 0.0;
  };

  struct OpenLeaf {
    std::size_t node = 0;
    std::vector<std::size_t> rows;
    std::optional<Candidate> split;
  };

  double score(double g, double h) const { return g * g / (h + p_.l2_reg); }

  OpenLeaf make_leaf(std::vector<std::size_t> rows, int depth) {
    double G = 0.0, H = 0.0;
    for (auto r : rows) {
      G += g_[r];
      H += h_[r];
    }
    const auto id = tree_.nodes.size();
    tree_.nodes.push_back(TreeNode{-1, -1, -1, depth, {-G / (H + p_.l2_reg) * p_.learning_rate}});
    OpenLeaf leaf{id, std::move(rows), std::nullopt};
    leaf.split = find_split(leaf.rows, G, H);
    return leaf;
  }

  std::optional<Candidate> find_split(std::span<const std::size_t> rows, double G, double H) const {
    const std::size_t min_leaf = std::max<std::size_t>(p_.min_samples_leaf, 1);
    if (rows.size() < 2 * min_leaf) return std::nullopt;
    const std::size_t width = m_.cols();
    std::vector<double> gs(width, 0.0), hs(width, 0.0);
    std::vector<std::size_t> ns(width, 0);
    for (auto r : rows) {
      for (auto c : m_.active(r)) {
        gs[c] += g_[r];
        hs[c] += h_[r];
        ++ns[c];
      }
    }
    const double parent = score(G, H);
    std::optional<Candidate> best;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t n_right = ns[c];
      const std::size_t n_left = rows.size() - n_right;
      if (n_right < min_leaf || n_left < min_leaf) continue;
      const double gain = 0.5 * (score(G - gs[c], H - hs[c]) + score(gs[c], hs[c]) - parent);
      if (gain <= kSplitTolerance) continue;
      if (!best || gain > best->gain + kSplitTolerance) best = Candidate{c, gain};
    }
    return best;
  }

  // Turns an open leaf into an internal node; children are appended in
  // (left, right) order.
  std::pair<OpenLeaf, OpenLeaf> split(OpenLeaf leaf) {
    const auto column = leaf.split->column;
    std::vector<std::size_t> left, right;
    for (auto r : leaf.rows) (m_.at(r, column) ? right : left).push_back(r);
    const int depth = tree_.nodes[leaf.node].depth + 1;
    auto l = make_leaf(std::move(left), depth);
    auto r = make_leaf(std::move(right), depth);
    auto& node = tree_.nodes[leaf.node];
    node.column = static_cast<std::int32_t>(column);
    node.left = static_cast<std::int32_t>(l.node);
    node.right = static_cast<std::int32_t>(r.node);
    node.value.clear();
    return {std::move(l), std::move(r)};
  }

  void grow_depthwise() {
    std::deque<OpenLeaf> level(std::make_move_iterator(open_.begin()), std::make_move_iterator(open_.end()));
    while (!level.empty()) {
      auto leaf = std::move(level.front());
      level.pop_front();
      if (tree_.nodes[leaf.node].depth >= p_.max_depth || !leaf.split) continue;
      auto [l, r] = split(std::move(leaf));
      level.push_back(std::move(l));
      level.push_back(std::move(r));
    }
  }

  void grow_leafwise() {
    std::size_t leaves = 1;
    while (leaves < static_cast<std::size_t>(std::max(p_.max_leaves, 1))) {
      std::optional<std::size_t> pick;
      for (std::size_t i = 0; i < open_.size(); ++i) {
        if (!open_[i].split) continue;
        if (!pick || open_[i].split->gain > open_[*pick].split->gain + kSplitTolerance) pick = i;
      }
      if (!pick) break;
      auto leaf = std::move(open_[*pick]);
      open_.erase(open_.begin() + static_cast<std::ptrdiff_t>(*pick));
      auto [l, r] = split(std::move(leaf));
      open_.push_back(std::move(l));
      open_.push_back(std::move(r));
      ++leaves;
    }
  }

  const EncodedMatrix& m_;
  std::span<const double> g_;
  std::span<const double> h_;
  const GbdtParams& p_;
  Tree tree_;
  std::vector<OpenLeaf> open_;
};

}  // namespace detail

// Mean negative log-likelihood of the labels under `probs`.
inline double log_loss(const std::vector<std::vector<double>>& probs, std::span<const std::uint32_t> labels) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc -= std::log(std::max(probs[i][labels[i]], detail::kMinProbability));
  }
  return acc / static_cast<double>(probs.size());
}

// Newton boosting. Leaf values are -G / (H + l2_reg) scaled by the learning
// rate. When `loss_trace` is given it receives the training log-loss before
// the first round and after every round.
inline GradientBoosting fit_gbdt(const EncodedMatrix& train, const GbdtParams& p,
                                 std::vector<double>* loss_trace = nullptr) {
  if (train.rows() == 0) throw ArgumentError("cannot fit boosting on an empty matrix");
  if (train.n_classes() < 2) throw ArgumentError("boosting needs at least two classes");
  if (p.n_rounds < 0) throw ArgumentError("n_rounds must be non-negative");
  if (!(p.learning_rate > 0.0 && p.learning_rate <= 1.0)) throw ArgumentError("learning_rate must lie in (0, 1]");
  if (p.l2_reg < 0.0) throw ArgumentError("l2_reg must be non-negative");

  const std::size_t n = train.rows();
  const std::size_t k = train.n_classes();
  GradientBoosting model;
  model.params = p;
  model.n_classes = k;

  std::vector<double> prior(k, 0.0);
  for (auto l : train.labels()) prior[l] += 1.0;
  for (auto& q : prior) q = std::max(q / static_cast<double>(n), detail::kMinProbability);
  if (k == 2) {
    model.base_score = {std::log(prior[1] / prior[0])};
  } else {
    for (auto q : prior) model.base_score.push_back(std::log(q));
  }

  const std::size_t outputs = model.n_outputs();
  std::vector<double> scores(n * outputs);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.base_score.begin(), model.base_score.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * outputs));
  }
  std::vector<std::vector<double>> probs(n, std::vector<double>(k));
  auto refresh = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (k == 2) {
        const double q = 1.0 / (1.0 + std::exp(-scores[i]));
        probs[i][0] = 1.0 - q;
        probs[i][1] = q;
      } else {
        std::copy_n(scores.begin() + static_cast<std::ptrdiff_t>(i * k), k, probs[i].begin());
        GradientBoosting::softmax(probs[i]);
      }
    }
  };
  refresh();
  if (loss_trace) loss_trace->push_back(log_loss(probs, train.labels()));

  std::vector<double> grad(n), hess(n);
  for (int round = 0; round < p.n_rounds; ++round) {
    std::vector<Tree> trees;
    for (std::size_t o = 0; o < outputs; ++o) {
      const std::size_t cls = k == 2 ? 1 : o;
      for (std::size_t i = 0; i < n; ++i) {
        const double q = probs[i][cls];
        const double y = train.label(i) == cls ? 1.0 : 0.0;
        grad[i] = q - y;
        hess[i] = std::max(q * (1.0 - q), detail::kMinHessian);
      }
      detail::BoostingGrower grower(train, grad, hess, p);
      trees.push_back(grower.grow());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = train.row(i);
      for (std::size_t o = 0; o < outputs; ++o) scores[i * outputs + o] += trees[o].route(row)[0];
    }
    model.rounds.push_back(std::move(trees));
    refresh();
    if (loss_trace) loss_trace->push_back(log_loss(probs, train.labels()));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Trained models
// ---------------------------------------------------------------------------

enum class Family { dtree, rforest, gbdt_depthwise, gbdt_leafwise };

inline constexpr std::array<Family, 4> kFamilies{Family::dtree, Family::rforest, Family::gbdt_depthwise,
                                                 Family::gbdt_leafwise};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::dtree:
      return "dtree";
    case Family::rforest:
      return "rforest";
    case Family::gbdt_depthwise:
      return "gbdt_depthwise";
    case Family::gbdt_leafwise:
      return "gbdt_leafwise";
  }
  return "unknown";
}

inline Family parse_family(std::string_view s) {
  for (auto f : kFamilies) {
    if (to_string(f) == s) return f;
  }
  throw ArgumentError("unknown model family '" + std::string(s) + "'");
}

using ModelPayload = std::variant<DecisionTree, RandomForest, GradientBoosting>;

struct TrainedModel {
  Family family = Family::dtree;
  ModelPayload payload;
  double valid_accuracy = 0.0;
  std::uint64_t model_id = 0;
  std::uint64_t seed = 0;

  std::size_t n_classes() const {
    return std::visit([](const auto& p) { return p.n_classes; }, payload);
  }

  std::size_t width() const {
    return std::visit(
        [](const auto& p) -> std::size_t {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, DecisionTree>) {
            return p.tree.n_cols;
          } else if constexpr (std::is_same_v<T, RandomForest>) {
            return p.trees.front().tree.n_cols;
          } else {
            if (!p.rounds.empty()) return p.rounds.front().front().n_cols;
            return static_cast<std::size_t>(-1);  // prior-only model accepts any width
          }
        },
        payload);
  }

  void predict_into(std::span<const std::uint8_t> row, std::span<double> out) const {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, DecisionTree>) {
            const auto& dist = p.tree.route(row);
            std::copy(dist.begin(), dist.end(), out.begin());
          } else {
            p.predict_into(row, out);
          }
        },
        payload);
  }
};

namespace detail {

inline void check_width(const TrainedModel& model, const EncodedMatrix& rows) {
  const auto w = model.width();
  if (w != static_cast<std::size_t>(-1) && w != rows.cols()) {
    throw ArgumentError("matrix width " + std::to_string(rows.cols()) + " does not match model width " +
                        std::to_string(w));
  }
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

inline std::vector<std::vector<double>> predict(const TrainedModel& model, const EncodedMatrix& rows) {
  detail::check_width(model, rows);
  std::vector<std::vector<double>> out(rows.rows(), std::vector<double>(model.n_classes()));
  for (std::size_t r = 0; r < rows.rows(); ++r) model.predict_into(rows.row(r), out[r]);
  return out;
}

// Predicted class per row; probability ties go to the lowest class index.
inline std::vector<std::uint32_t> predict_labels(const TrainedModel& model, const EncodedMatrix& rows) {
  detail::check_width(model, rows);
  std::vector<double> buf(model.n_classes());
  std::vector<std::uint32_t> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    model.predict_into(rows.row(r), buf);
    out[r] = static_cast<std::uint32_t>(detail::argmax(buf));
  }
  return out;
}

// Fraction of rows whose argmax prediction equals the label. Loss is
// 1 - accuracy everywhere downstream.
inline double accuracy(const TrainedModel& model, const EncodedMatrix& data) {
  if (data.rows() == 0) throw ArgumentError("accuracy needs at least one row");
  const auto predicted = predict_labels(model, data);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.rows(); ++r) hits += predicted[r] == data.label(r);
  return static_cast<double>(hits) / static_cast<double>(data.rows());
}

inline double loss(const TrainedModel& model, const EncodedMatrix& data) { return 1.0 - accuracy(model, data); }

}  // namespace rashomon
