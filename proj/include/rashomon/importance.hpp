#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/dataset.hpp"
#include "rashomon/ensemble.hpp"
#include "rashomon/parallel.hpp"
#include "rashomon/rashomon_set.hpp"
#include "rashomon/rng.hpp"

namespace rashomon {

struct PviConfig {
  std::size_t repeats = 10;
  std::string metric = "accuracy";
  std::uint64_t seed = 0;
};

struct PviRecord {
  std::uint64_t model_id = 0;
  std::string variable;
  double baseline = 0.0;
  std::vector<double> drops;  // baseline - permuted accuracy, one per repeat; may be negative
  double mean_drop = 0.0;
};

struct PviReport {
  std::vector<PviRecord> records;  // member-major, variables in schema order
  PviConfig config;
  std::string course;
  std::string setup;
};

// Row permutation used for one (variable, repeat); shared by every model so
// models are compared on the same shuffles.
inline std::vector<std::size_t> permutation_for(std::size_t n_rows, std::uint64_t seed, std::size_t variable,
                                                std::size_t repeat) {
  Rng rng(derive_seed(seed, fnv1a("pvi"), variable, repeat));
  return rng.permutation(n_rows);
}

// Moves the whole one-hot block of `variable` with a single row permutation;
// other columns and labels are untouched.
inline EncodedMatrix permute_variable(const EncodedMatrix& m, std::string_view variable, std::uint64_t seed) {
  const auto& g = m.group(variable);
  Rng rng(seed);
  const auto perm = rng.permutation(m.rows());
  return m.with_group_rows(g, perm);
}

inline std::vector<PviRecord> pvi_for_model(const TrainedModel& model, const EncodedMatrix& valid,
                                            const PviConfig& cfg) {
  if (valid.rows() == 0) throw ArgumentError("permutation importance needs validation rows");
  if (cfg.repeats < 1) throw ArgumentError("permutation importance needs at least one repeat");
  const double baseline = accuracy(model, valid);
  std::vector<PviRecord> out;
  for (std::size_t j = 0; j < valid.groups().size(); ++j) {
    const auto& g = valid.groups()[j];
    PviRecord rec{model.model_id, g.name, baseline, {}, 0.0};
    for (std::size_t i = 0; i < cfg.repeats; ++i) {
      const auto perm = permutation_for(valid.rows(), cfg.seed, j, i);
      rec.drops.push_back(baseline - accuracy(model, valid.with_group_rows(g, perm)));
    }
    double sum = 0.0;
    for (auto d : rec.drops) sum += d;
    rec.mean_drop = sum / static_cast<double>(rec.drops.size());
    out.push_back(std::move(rec));
  }
  return out;
}

inline PviReport pvi_over_set(const RashomonSet& set, const ModelSpace& space, const EncodedMatrix& valid,
                              const PviConfig& cfg, std::size_t workers = 1) {
  if (set.member_ids.empty()) throw ArgumentError("Rashomon set is empty");
  std::vector<std::vector<PviRecord>> per_model(set.member_ids.size());
  parallel_for(set.member_ids.size(), workers, [&](std::size_t i) {
    per_model[i] = pvi_for_model(space.model(set.member_ids[i]), valid, cfg);
  });
  PviReport report;
  report.config = cfg;
  for (auto& v : per_model) {
    for (auto& r : v) report.records.push_back(std::move(r));
  }
  return report;
}

}  // namespace rashomon
