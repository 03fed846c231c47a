#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/search.hpp"

namespace rashomon {

// Empirical loss used for set membership.
inline double empirical_loss(const TrainedModel& m) { return 1.0 - m.valid_accuracy; }

struct RashomonSet {
  std::uint64_t reference_id = 0;
  std::vector<std::uint64_t> member_ids;  // ascending, includes the reference
  double epsilon = 0.0;
  std::string loss_metric = "1-accuracy";

  std::size_t size() const noexcept { return member_ids.size(); }
};

// Minimal validation loss; ties go to the lowest model id.
inline std::uint64_t select_reference(const ModelSpace& space) {
  if (space.size() == 0) throw ArgumentError("cannot select a reference model from an empty space");
  std::size_t best = 0;
  for (std::size_t i = 1; i < space.size(); ++i) {
    if (empirical_loss(space.models[i]) < empirical_loss(space.models[best])) best = i;
  }
  return space.models[best].model_id;
}

inline RashomonSet extract_rashomon(const ModelSpace& space, double epsilon) {
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be non-negative");
  RashomonSet set;
  set.reference_id = select_reference(space);
  set.epsilon = epsilon;
  const double bound = empirical_loss(space.model(set.reference_id)) + epsilon;
  for (const auto& m : space.models) {
    if (empirical_loss(m) <= bound) set.member_ids.push_back(m.model_id);
  }
  return set;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for fewer than two values
};

inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  for (auto x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (auto x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

struct RashomonSummary {
  MeanSd space;
  MeanSd set;
  std::size_t space_size = 0;
  std::size_t set_size = 0;
};

inline RashomonSummary rashomon_summary(const ModelSpace& space, const RashomonSet& set) {
  std::vector<double> all, members;
  for (const auto& m : space.models) all.push_back(m.valid_accuracy);
  for (auto id : set.member_ids) members.push_back(space.model(id).valid_accuracy);
  return {mean_sd(all), mean_sd(members), all.size(), members.size()};
}

// Set size at each epsilon, computed independently.
inline std::vector<std::pair<double, std::size_t>> epsilon_sweep(const ModelSpace& space,
                                                                 const std::vector<double>& epsilons) {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] >= 0.0)) throw ArgumentError("epsilons must be non-negative");
    if (i > 0 && epsilons[i] < epsilons[i - 1]) throw ArgumentError("epsilons must be ascending");
  }
  std::vector<std::pair<double, std::size_t>> out;
  for (auto e : epsilons) out.emplace_back(e, extract_rashomon(space, e).size());
  return out;
}

}  // namespace rashomon
