#include "rashomon/discrepancy.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rashomon;

namespace {

const std::vector<std::string> kSix{"age_band", "disability", "highest_education", "gender", "imd_band", "region"};

std::vector<PviRecord> records_for(std::uint64_t id, const std::vector<std::string>& vars,
                                   const std::vector<double>& drops) {
  std::vector<PviRecord> out;
  for (std::size_t i = 0; i < vars.size(); ++i) out.push_back({id, vars[i], 0.9, {drops[i]}, drops[i]});
  return out;
}

Ranking ranking(std::vector<std::string> order) { return {std::move(order), 0, false}; }

// Counts concordant minus discordant pairs by comparing positions directly.
double brute_tau(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto pos = [](const std::vector<std::string>& r, const std::string& v) {
    return std::find(r.begin(), r.end(), v) - r.begin();
  };
  const auto n = a.size();
  int c = 0, d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i >= j) continue;
      const auto sa = pos(a, a[i]) - pos(a, a[j]);
      const auto sb = pos(b, a[i]) - pos(b, a[j]);
      (sa * sb > 0 ? c : d) += 1;
    }
  }
  return static_cast<double>(c - d) / static_cast<double>(n * (n - 1) / 2);
}

PviReport report_from(const std::vector<std::vector<double>>& drops_per_model,
                      const std::vector<std::string>& vars) {
  PviReport rep;
  rep.course = "AAA";
  rep.setup = "binary";
  for (std::size_t m = 0; m < drops_per_model.size(); ++m) {
    for (auto& r : records_for(m, vars, drops_per_model[m])) rep.records.push_back(r);
  }
  return rep;
}

RashomonSet set_of(std::size_t n, std::uint64_t reference = 0) {
  RashomonSet s;
  s.reference_id = reference;
  for (std::size_t i = 0; i < n; ++i) s.member_ids.push_back(i);
  return s;
}

}  // namespace

TEST(RankVariables, Examples) {
  const std::vector<std::string> abc{"a", "b", "c"};
  const auto r = rank_variables(records_for(0, abc, {0.3, 0.1, 0.2}), abc);
  const std::vector<std::string> expected{"a", "c", "b"};
  EXPECT_EQ(r.order, expected);
  EXPECT_FALSE(r.tie_note);

  const auto tied = rank_variables(records_for(0, kSix, {0.1, 0.1, 0.1, 0.1, 0.1, 0.1}), kSix);
  EXPECT_EQ(tied.order, kSix);
  EXPECT_TRUE(tied.tie_note);

  const std::vector<std::string> one{"x"};
  EXPECT_EQ(rank_variables(records_for(3, one, {-0.2}), one).order, one);
}

TEST(RankVariables, MissingVariable) {
  const std::vector<std::string> ab{"a", "b"};
  const std::vector<std::string> abc{"a", "b", "c"};
  EXPECT_THROW(rank_variables(records_for(0, ab, {0.1, 0.2}), abc), ArgumentError);
}

TEST(RankVariables, IsAPermutationOfTheVariables) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> drops(6);
    for (auto& d : drops) d = static_cast<double>(rng.integer(-3, 6)) / 30.0;
    const auto r = rank_variables(records_for(0, kSix, drops), kSix);
    auto sorted = r.order;
    auto want = kSix;
    std::sort(sorted.begin(), sorted.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(sorted, want);
    for (std::size_t i = 1; i < r.order.size(); ++i) {
      const auto prev = std::find(kSix.begin(), kSix.end(), r.order[i - 1]) - kSix.begin();
      const auto cur = std::find(kSix.begin(), kSix.end(), r.order[i]) - kSix.begin();
      EXPECT_GE(drops[prev], drops[cur]);
      if (drops[prev] == drops[cur]) {
        EXPECT_LT(prev, cur);
      }
    }
  }
}

TEST(KendallTau, Examples) {
  const auto id = ranking(kSix);
  EXPECT_DOUBLE_EQ(kendall_tau(id, id), 1.0);
  auto rev = kSix;
  std::reverse(rev.begin(), rev.end());
  EXPECT_DOUBLE_EQ(kendall_tau(id, ranking(rev)), -1.0);
  auto swapped = kSix;
  std::swap(swapped[2], swapped[3]);
  EXPECT_DOUBLE_EQ(kendall_tau(id, ranking(swapped)), 13.0 / 15.0);
  EXPECT_DOUBLE_EQ(kendall_tau(id, ranking(swapped)), brute_tau(kSix, swapped));
}

TEST(KendallTau, MismatchedVariableSets) {
  EXPECT_THROW(kendall_tau(ranking({"a", "b"}), ranking({"a", "c"})), ArgumentError);
  EXPECT_THROW(kendall_tau(ranking({"a", "b"}), ranking({"a", "b", "c"})), ArgumentError);
}

TEST(KendallTau, MatchesPairCountingOverAllPermutations) {
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<std::string> base;
    for (std::size_t i = 0; i < n; ++i) base.push_back(std::string(1, static_cast<char>('a' + i)));
    std::vector<std::vector<std::string>> perms;
    auto p = base;
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    for (const auto& a : perms) {
      for (const auto& b : perms) {
        const double tau = kendall_tau(ranking(a), ranking(b));
        if (n >= 2) {
          EXPECT_NEAR(tau, brute_tau(a, b), 1e-15);
        }
        EXPECT_EQ(tau, kendall_tau(ranking(b), ranking(a)));
        EXPECT_GE(tau, -1.0);
        EXPECT_LE(tau, 1.0);
      }
    }
  }
}

TEST(KendallTau, SixVariablesGiveMultiplesOfOneFifteenth) {
  auto p = kSix;
  std::sort(p.begin(), p.end());
  const auto first = ranking(p);
  do {
    const double k = kendall_tau(first, ranking(p)) * 15.0;
    EXPECT_NEAR(k, std::round(k), 1e-12);
  } while (std::next_permutation(p.begin(), p.end()));
}

TEST(Viod, UnanimousSet) {
  const auto rep = report_from({{0.3, 0.2, 0.1}, {0.6, 0.4, 0.2}, {0.5, 0.3, 0.0}}, {"a", "b", "c"});
  const auto v = viod(rep, set_of(3));
  EXPECT_EQ(v.viod_min, 1.0);
  EXPECT_EQ(v.viod_max, 1.0);
  EXPECT_EQ(v.n_members, 3u);
  EXPECT_EQ(v.taus.size(), 2u);
  EXPECT_EQ(v.reported_mode, ViodMode::min);
}

TEST(Viod, SingletonSetIsUndefined) {
  const auto rep = report_from({{0.3, 0.2}}, {"a", "b"});
  try {
    viod(rep, set_of(1));
    FAIL() << "expected an error";
  } catch (const ArgumentError& e) {
    EXPECT_STREQ(e.what(), "VIOD undefined for singleton set");
  }
  EXPECT_TRUE(tau_distribution(rep, set_of(1)).empty());
}

TEST(Viod, ExtremesComeFromNonReferenceMembers) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n_models = 2 + rng.index(10);
    std::vector<std::vector<double>> drops(n_models, std::vector<double>(6));
    for (auto& m : drops) {
      for (auto& d : m) d = static_cast<double>(rng.integer(-5, 20)) / 70.0;
    }
    const auto ref = rng.index(n_models);
    const auto rep = report_from(drops, kSix);
    const auto set = set_of(n_models, ref);
    const auto v = viod(rep, set, ViodMode::max, kSix);
    ASSERT_EQ(v.taus.size(), n_models - 1);
    EXPECT_LE(v.viod_min, v.viod_max);
    EXPECT_NE(v.argmin_id, ref);
    EXPECT_NE(v.argmax_id, ref);
    EXPECT_EQ(v.reported(), v.viod_max);
    double lo = 2.0, hi = -2.0;
    for (const auto& [id, tau] : v.taus) {
      EXPECT_NE(id, ref);
      EXPECT_GE(tau, -1.0);
      EXPECT_LE(tau, 1.0);
      EXPECT_NEAR(tau * 15.0, std::round(tau * 15.0), 1e-12);
      lo = std::min(lo, tau);
      hi = std::max(hi, tau);
    }
    EXPECT_EQ(v.viod_min, lo);
    EXPECT_EQ(v.viod_max, hi);
    const auto argmin = std::find_if(v.taus.begin(), v.taus.end(), [&](const auto& p) { return p.first == v.argmin_id; });
    ASSERT_NE(argmin, v.taus.end());
    EXPECT_EQ(argmin->second, lo);
  }
}

TEST(ViodMode, Parse) {
  EXPECT_EQ(parse_viod_mode("min"), ViodMode::min);
  EXPECT_EQ(parse_viod_mode("max"), ViodMode::max);
  EXPECT_THROW(parse_viod_mode("mean"), ArgumentError);
}
