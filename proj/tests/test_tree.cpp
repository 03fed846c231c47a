#include "rashomon/tree.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace rashomon;

namespace {

EncodedMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, std::size_t classes) {
  std::vector<std::uint8_t> cells(rows * cols);
  for (auto& c : cells) c = static_cast<std::uint8_t>(rng.index(2));
  std::vector<std::uint32_t> labels(rows);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(classes));
  return EncodedMatrix(rows, cols, std::move(cells), {}, std::move(labels), classes);
}

std::vector<std::size_t> all_rows(const EncodedMatrix& m) {
  std::vector<std::size_t> r(m.rows());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

// Oracle: textbook impurity straight from class frequencies.
double oracle_impurity(const std::vector<double>& counts, Impurity kind) {
  double n = 0.0;
  for (auto c : counts) n += c;
  double v = kind == Impurity::gini ? 1.0 : 0.0;
  for (auto c : counts) {
    if (c == 0.0) continue;
    const double p = c / n;
    v += kind == Impurity::gini ? -p * p : -p * std::log(p) / std::log(2.0);
  }
  return v;
}

struct OracleSplit {
  std::optional<std::size_t> column;
  double decrease = 0.0;
};

// Oracle: evaluate every column's partition independently, keep the lowest
// column among those within tolerance of the maximum.
OracleSplit brute_force_split(const EncodedMatrix& m, const std::vector<std::size_t>& rows, Impurity kind,
                              std::size_t min_leaf) {
  const auto k = m.n_classes();
  std::vector<double> parent(k, 0.0);
  for (auto r : rows) parent[m.label(r)] += 1;
  const double p_imp = oracle_impurity(parent, kind);
  std::vector<double> decreases(m.cols(), -1.0);
  for (std::size_t c = 0; c < m.cols(); ++c) {
    std::vector<double> left(k, 0.0), right(k, 0.0);
    double nl = 0, nr = 0;
    for (auto r : rows) {
      if (m.at(r, c)) {
        right[m.label(r)] += 1;
        nr += 1;
      } else {
        left[m.label(r)] += 1;
        nl += 1;
      }
    }
    if (nl < min_leaf || nr < min_leaf) continue;
    const double n = nl + nr;
    decreases[c] = p_imp - (nl / n * oracle_impurity(left, kind) + nr / n * oracle_impurity(right, kind));
  }
  OracleSplit out;
  double best = -1.0;
  for (auto d : decreases) best = std::max(best, d);
  if (best <= kSplitTolerance) return out;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (decreases[c] >= best - 1e-9) {
      out.column = c;
      out.decrease = decreases[c];
      break;
    }
  }
  return out;
}

// Oracle: naive recursive grower returning the predicted class for one row.
std::vector<double> naive_grow_predict(const EncodedMatrix& m, const std::vector<std::size_t>& rows,
                                       const TreeParams& p, int depth, std::span<const std::uint8_t> probe) {
  std::vector<double> dist(m.n_classes(), 0.0);
  for (auto r : rows) dist[m.label(r)] += 1.0 / static_cast<double>(rows.size());
  if (depth >= p.max_depth || rows.size() < p.min_samples_split) return dist;
  const auto split = brute_force_split(m, rows, p.impurity, p.min_samples_leaf);
  if (!split.column) return dist;
  std::vector<std::size_t> side;
  for (auto r : rows) {
    if (m.at(r, *split.column) == probe[*split.column]) side.push_back(r);
  }
  return naive_grow_predict(m, side, p, depth + 1, probe);
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST(Impurity, KnownValues) {
  EXPECT_DOUBLE_EQ(impurity({5, 5}, Impurity::gini), 0.5);
  EXPECT_DOUBLE_EQ(impurity({10, 0}, Impurity::gini), 0.0);
  EXPECT_DOUBLE_EQ(impurity({4, 4}, Impurity::entropy), 1.0);
  EXPECT_THROW(impurity({0, 0}, Impurity::gini), ArgumentError);
}

TEST(Impurity, BoundsForRandomHistograms) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const auto k = 2 + rng.index(5);
    std::vector<double> counts(k);
    for (auto& c : counts) c = static_cast<double>(rng.index(20));
    counts[0] += 1;
    const double g = impurity(std::span<const double>(counts), Impurity::gini);
    const double e = impurity(std::span<const double>(counts), Impurity::entropy);
    EXPECT_GE(g, 0.0);
    EXPECT_LE(g, 1.0 - 1.0 / static_cast<double>(k) + 1e-12);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, std::log2(static_cast<double>(k)) + 1e-12);
    EXPECT_NEAR(g, oracle_impurity(counts, Impurity::gini), 1e-12);
    EXPECT_NEAR(e, oracle_impurity(counts, Impurity::entropy), 1e-12);
  }
}

TEST(BestSplit, PerfectSeparator) {
  // Column 1 equals the label; column 0 is noise.
  EncodedMatrix m(4, 2, {1, 0, 0, 0, 1, 1, 0, 1}, {}, {0, 0, 1, 1}, 2);
  const std::vector<std::size_t> rows{0, 1, 2, 3}, cols{0, 1};
  const auto s = best_split(m, rows, cols, Impurity::gini);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->column, 1u);
  EXPECT_DOUBLE_EQ(s->decrease, 0.5);
}

TEST(BestSplit, PureNodeHasNoSplit) {
  EncodedMatrix m(3, 2, {1, 0, 0, 1, 1, 1}, {}, {1, 1, 1}, 2);
  const std::vector<std::size_t> rows{0, 1, 2}, cols{0, 1};
  EXPECT_FALSE(best_split(m, rows, cols, Impurity::gini));
}

TEST(BestSplit, RespectsMinSamplesLeaf) {
  EncodedMatrix m(4, 1, {1, 0, 0, 0}, {}, {1, 0, 0, 0}, 2);
  const std::vector<std::size_t> rows{0, 1, 2, 3}, cols{0};
  EXPECT_TRUE(best_split(m, rows, cols, Impurity::gini, 1));
  EXPECT_FALSE(best_split(m, rows, cols, Impurity::gini, 2));
}

TEST(BestSplit, MatchesBruteForceOnRandomInstances) {
  Rng rng(2024);
  for (int t = 0; t < 300; ++t) {
    const auto rows = 2 + rng.index(24);
    const auto cols = 1 + rng.index(10);
    const auto classes = 2 + rng.index(2);
    const auto m = random_matrix(rng, rows, cols, classes);
    const auto kind = rng.index(2) ? Impurity::gini : Impurity::entropy;
    const auto min_leaf = 1 + rng.index(3);
    std::vector<std::size_t> all_cols(cols);
    std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});
    const auto r = all_rows(m);
    const auto got = best_split(m, r, all_cols, kind, min_leaf);
    const auto want = brute_force_split(m, r, kind, min_leaf);
    ASSERT_EQ(got.has_value(), want.column.has_value()) << "instance " << t;
    if (got) {
      EXPECT_EQ(got->column, *want.column) << "instance " << t;
      EXPECT_NEAR(got->decrease, want.decrease, 1e-12);
      EXPECT_GE(got->decrease, 0.0);
      const auto counts = [&] {
        std::vector<double> c(classes, 0.0);
        for (auto i : r) c[m.label(i)] += 1;
        return c;
      }();
      EXPECT_LE(got->decrease, oracle_impurity(counts, kind) + 1e-12);
    }
  }
}

TEST(FitTree, SeparableDataIsLearnedExactly) {
  // label = (a == 2) OR (b == 1), a with three levels and b with two.
  std::vector<std::uint8_t> cells;
  std::vector<std::uint32_t> labels;
  for (int rep = 0; rep < 4; ++rep) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 2; ++b) {
        for (int l = 0; l < 3; ++l) cells.push_back(static_cast<std::uint8_t>(a == l));
        for (int l = 0; l < 2; ++l) cells.push_back(static_cast<std::uint8_t>(b == l));
        labels.push_back(static_cast<std::uint32_t>(a == 2 || b == 1));
      }
    }
  }
  EncodedMatrix m(24, 5, cells, {{"a", 0, 3}, {"b", 3, 2}}, labels, 2);
  const auto t = fit_tree(m, {3, 1, 2, Impurity::gini}, 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto p = t.predict(m.row(r));
    EXPECT_DOUBLE_EQ(p[m.label(r)], 1.0);
  }
}

TEST(FitTree, DepthOneHasAtMostThreeNodes) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_matrix(rng, 40, 6, 3);
    const auto tree = fit_tree(m, {1, 1, 2, Impurity::entropy}, 0);
    EXPECT_LE(tree.tree.nodes.size(), 3u);
  }
}

TEST(FitTree, StructuralInvariants) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const auto m = random_matrix(rng, 60, 8, 3);
    TreeParams p{static_cast<int>(1 + rng.index(6)), 1 + rng.index(4), 2 + rng.index(6), Impurity::gini};
    const auto tree = fit_tree(m, p, 0);
    std::vector<int> parents(tree.tree.nodes.size(), 0);
    for (const auto& n : tree.tree.nodes) {
      EXPECT_LE(n.depth, p.max_depth);
      if (n.is_leaf()) {
        double sum = 0;
        for (auto v : n.value) sum += v;
        EXPECT_NEAR(sum, 1.0, 1e-9);
      } else {
        ++parents[static_cast<std::size_t>(n.left)];
        ++parents[static_cast<std::size_t>(n.right)];
        EXPECT_EQ(tree.tree.nodes[static_cast<std::size_t>(n.left)].depth, n.depth + 1);
      }
    }
    EXPECT_EQ(parents[0], 0);
    for (std::size_t i = 1; i < parents.size(); ++i) EXPECT_EQ(parents[i], 1);
  }
}

TEST(FitTree, MatchesNaiveRecursiveGrower) {
  Rng rng(77);
  for (int t = 0; t < 40; ++t) {
    const auto m = random_matrix(rng, 30, 8, 2 + rng.index(2));
    TreeParams p{static_cast<int>(1 + rng.index(5)), 1 + rng.index(3), 2 + rng.index(4),
                 rng.index(2) ? Impurity::gini : Impurity::entropy};
    const auto tree = fit_tree(m, p, 0);
    const auto rows = all_rows(m);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto want = naive_grow_predict(m, rows, p, 0, m.row(r));
      const auto got = tree.predict(m.row(r));
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
      EXPECT_EQ(argmax(got), argmax(want));
    }
  }
}

TEST(FitTree, Deterministic) {
  Rng rng(4);
  const auto m = random_matrix(rng, 80, 10, 3);
  EXPECT_EQ(fit_tree(m, {6, 2, 4, Impurity::gini}, 5), fit_tree(m, {6, 2, 4, Impurity::gini}, 5));
  const auto sub = fit_tree(m, {6, 1, 2, Impurity::gini}, 5, std::nullopt, 0.4);
  EXPECT_EQ(sub, fit_tree(m, {6, 1, 2, Impurity::gini}, 5, std::nullopt, 0.4));
}

TEST(PredictTree, StumpPriorAndWidthCheck) {
  EncodedMatrix m(10, 2, std::vector<std::uint8_t>(20, 1), {}, {0, 0, 0, 0, 0, 0, 0, 1, 1, 1}, 2);
  const auto t = fit_tree(m, {4, 1, 2, Impurity::gini}, 0);
  ASSERT_EQ(t.tree.nodes.size(), 1u);
  const std::vector<std::uint8_t> probe{0, 1};
  const auto p = predict_tree(t, probe);
  EXPECT_DOUBLE_EQ(p[0], 0.7);
  EXPECT_DOUBLE_EQ(p[1], 0.3);
  const std::vector<std::uint8_t> wrong{0, 1, 1};
  EXPECT_THROW(predict_tree(t, wrong), ArgumentError);
}

TEST(PredictTree, BatchEqualsRowByRow) {
  Rng rng(12);
  const auto m = random_matrix(rng, 50, 7, 2);
  const auto t = fit_tree(m, {5, 1, 2, Impurity::gini}, 0);
  const auto batch = t.predict(m);
  for (std::size_t r = 0; r < m.rows(); ++r) EXPECT_EQ(batch[r], predict_tree(t, m.row(r)));
}

TEST(PredictTree, FullyGrownPureTreeMemorizes) {
  // Distinct rows: every row is its own pattern over 4 binary columns.
  std::vector<std::uint8_t> cells;
  std::vector<std::uint32_t> labels;
  for (std::uint32_t v = 0; v < 16; ++v) {
    for (int b = 0; b < 4; ++b) cells.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    labels.push_back((v * 7 + 3) % 3);
  }
  EncodedMatrix m(16, 4, cells, {}, labels, 3);
  const auto t = fit_tree(m, {12, 1, 2, Impurity::entropy}, 0);
  for (std::size_t r = 0; r < 16; ++r) EXPECT_DOUBLE_EQ(t.predict(m.row(r))[m.label(r)], 1.0);
}
