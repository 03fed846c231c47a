#include "rashomon/rashomon_set.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace rashomon;

namespace {

ModelSpace space_with(const std::vector<double>& accuracies) {
  ModelSpace ms;
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    ms.models.push_back(TrainedModel{Family::dtree, DecisionTree{}, accuracies[i], i, 0});
    ms.origins.push_back(Origin::random);
    ms.params.push_back(json::object());
  }
  return ms;
}

// Accuracies that are multiples of 1/n_valid, as produced by a real holdout.
ModelSpace random_space(std::uint64_t seed, std::size_t n_models, std::size_t n_valid) {
  Rng rng(seed);
  std::vector<double> acc;
  for (std::size_t i = 0; i < n_models; ++i) {
    acc.push_back(static_cast<double>(rng.integer(n_valid / 2, n_valid)) / static_cast<double>(n_valid));
  }
  return space_with(acc);
}

std::vector<std::uint64_t> direct_filter(const ModelSpace& ms, double eps) {
  double best = 1.0;
  for (const auto& m : ms.models) best = std::min(best, 1.0 - m.valid_accuracy);
  std::vector<std::uint64_t> out;
  for (const auto& m : ms.models) {
    if (1.0 - m.valid_accuracy <= best + eps) out.push_back(m.model_id);
  }
  return out;
}

}  // namespace

TEST(SelectReference, Examples) {
  EXPECT_EQ(select_reference(space_with({0.80, 0.86, 0.84})), 1u);
  EXPECT_EQ(select_reference(space_with({0.80, 0.86, 0.86})), 1u);
  EXPECT_EQ(select_reference(space_with({0.50})), 0u);
  EXPECT_THROW(select_reference(space_with({})), ArgumentError);
}

TEST(ExtractRashomon, ThresholdArithmetic) {
  const auto set = extract_rashomon(space_with({0.86, 0.84, 0.80}), 0.05);
  const std::vector<std::uint64_t> expected{0, 1};
  EXPECT_EQ(set.member_ids, expected);
  EXPECT_EQ(set.reference_id, 0u);
  EXPECT_EQ(set.epsilon, 0.05);
}

TEST(ExtractRashomon, ZeroEpsilonKeepsTies) {
  const auto set = extract_rashomon(space_with({0.7, 0.9, 0.8, 0.9}), 0.0);
  const std::vector<std::uint64_t> expected{1, 3};
  EXPECT_EQ(set.member_ids, expected);
  EXPECT_EQ(set.reference_id, 1u);
}

TEST(ExtractRashomon, NegativeEpsilonRejected) {
  EXPECT_THROW(extract_rashomon(space_with({0.5}), -0.01), ArgumentError);
}

TEST(RashomonSummary, Examples) {
  const auto ms = space_with({0.5, 0.7});
  const auto s = rashomon_summary(ms, extract_rashomon(ms, 1.0));
  EXPECT_DOUBLE_EQ(s.space.mean, 0.6);
  EXPECT_DOUBLE_EQ(s.set.mean, 0.6);
  EXPECT_EQ(s.set_size, 2u);
  EXPECT_EQ(s.space_size, 2u);

  const auto single = rashomon_summary(ms, extract_rashomon(ms, 0.0));
  EXPECT_EQ(single.set_size, 1u);
  EXPECT_EQ(single.set.sd, 0.0);
  EXPECT_EQ(csv::fixed(single.set.sd, 3), "0.000");
}

TEST(MeanSd, SampleStandardDeviation) {
  const auto r = mean_sd({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  EXPECT_DOUBLE_EQ(r.mean, 5.0);
  EXPECT_NEAR(r.sd, std::sqrt(32.0 / 7.0), 1e-12);
}

TEST(EpsilonSweep, Examples) {
  const auto ms = space_with({0.6, 0.9, 0.85, 0.7});
  const auto sweep = epsilon_sweep(ms, {0.0, 0.05, 1.0});
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_LE(sweep[0].second, sweep[1].second);
  EXPECT_LE(sweep[1].second, sweep[2].second);
  EXPECT_EQ(sweep[2].second, ms.size());
  EXPECT_TRUE(epsilon_sweep(ms, {}).empty());
  EXPECT_THROW(epsilon_sweep(ms, {0.1, 0.05}), ArgumentError);
}

TEST(EpsilonSweep, MatchesDirectFilteringAndIsReproducible) {
  const auto ms = random_space(4, 120, 60);
  std::vector<double> eps;
  for (int i = 0; i <= 40; ++i) eps.push_back(0.0125 * i);
  const auto a = epsilon_sweep(ms, eps);
  const auto b = epsilon_sweep(ms, eps);
  EXPECT_EQ(a, b);
  std::size_t steps = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    EXPECT_EQ(a[i].first, eps[i]);
    EXPECT_EQ(a[i].second, direct_filter(ms, eps[i]).size());
    if (i > 0 && a[i].second > a[i - 1].second) ++steps;
  }
  EXPECT_GT(steps, 3u);
}

TEST(RashomonProperties, SoundnessContainmentMonotonicity) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto ms = random_space(seed, 50, 37);
    const auto ref = select_reference(ms);
    const double ref_loss = empirical_loss(ms.model(ref));
    std::vector<std::uint64_t> previous;
    for (double eps : {0.0, 0.01, 0.03, 0.05, 0.1, 0.3, 1.0}) {
      const auto set = extract_rashomon(ms, eps);
      EXPECT_EQ(set.reference_id, ref);
      EXPECT_TRUE(std::binary_search(set.member_ids.begin(), set.member_ids.end(), ref));
      EXPECT_GE(set.size(), 1u);
      EXPECT_LE(set.size(), ms.size());
      EXPECT_TRUE(std::is_sorted(set.member_ids.begin(), set.member_ids.end()));
      EXPECT_EQ(std::set<std::uint64_t>(set.member_ids.begin(), set.member_ids.end()).size(), set.size());
      for (auto id : set.member_ids) {
        EXPECT_LT(id, ms.size());
        EXPECT_LE(empirical_loss(ms.model(id)), ref_loss + eps);
        EXPECT_GE(empirical_loss(ms.model(id)), ref_loss);
      }
      EXPECT_TRUE(std::includes(set.member_ids.begin(), set.member_ids.end(), previous.begin(), previous.end()));
      EXPECT_EQ(set.member_ids, direct_filter(ms, eps));
      previous = set.member_ids;
    }
  }
}
