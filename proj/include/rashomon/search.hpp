#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rashomon/common.hpp"
#include "rashomon/csv.hpp"
#include "rashomon/dataset.hpp"
#include "rashomon/ensemble.hpp"
#include "rashomon/model_io.hpp"
#include "rashomon/parallel.hpp"
#include "rashomon/rng.hpp"
#include "rashomon/surrogate.hpp"

namespace rashomon {

// ---------------------------------------------------------------------------
// Parameter space
// ---------------------------------------------------------------------------

struct Dimension {
  enum class Kind { integer, real, choice };
  enum class Scale { linear, log };

  std::string name;
  Kind kind = Kind::real;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::string> choices;
  Scale scale = Scale::linear;

  static Dimension integer(std::string name, std::int64_t lo, std::int64_t hi, Scale s = Scale::linear) {
    return {std::move(name), Kind::integer, static_cast<double>(lo), static_cast<double>(hi), {}, s};
  }
  static Dimension real(std::string name, double lo, double hi, Scale s = Scale::linear) {
    return {std::move(name), Kind::real, lo, hi, {}, s};
  }
  static Dimension choice(std::string name, std::vector<std::string> options) {
    return {std::move(name), Kind::choice, 0.0, 0.0, std::move(options), Scale::linear};
  }

  void validate() const {
    if (kind == Kind::choice) {
      if (choices.empty()) throw ConfigError("dimension '" + name + "' has no choices");
      return;
    }
    if (!(lo < hi)) throw ConfigError("dimension '" + name + "' has a degenerate range");
    if (scale == Scale::log && lo <= 0.0) throw ConfigError("log-scaled dimension '" + name + "' needs lo > 0");
  }

  json sample(Rng& rng) const {
    switch (kind) {
      case Kind::choice:
        return choices[static_cast<std::size_t>(rng.index(choices.size()))];
      case Kind::integer: {
        const auto a = static_cast<std::int64_t>(lo), b = static_cast<std::int64_t>(hi);
        if (scale == Scale::linear) return rng.integer(a, b);
        const double v = std::exp(rng.uniform(std::log(lo), std::log(hi + 1.0)));
        return std::clamp(static_cast<std::int64_t>(std::floor(v)), a, b);
      }
      case Kind::real:
        if (scale == Scale::linear) return rng.uniform(lo, hi);
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    }
    return nullptr;
  }

  // Position of a value in the unit interval, following the declared scale.
  double encode(const json& v) const {
    if (kind == Kind::choice) {
      const auto s = v.get<std::string>();
      const auto it = std::find(choices.begin(), choices.end(), s);
      if (it == choices.end()) throw ArgumentError("value '" + s + "' is not a choice of '" + name + "'");
      return choices.size() == 1 ? 0.0
                                 : static_cast<double>(it - choices.begin()) / static_cast<double>(choices.size() - 1);
    }
    const double x = v.get<double>();
    if (scale == Scale::log) return (std::log(x) - std::log(lo)) / (std::log(hi) - std::log(lo));
    return (x - lo) / (hi - lo);
  }

  bool contains(const json& v) const {
    if (kind == Kind::choice) {
      return v.is_string() && std::find(choices.begin(), choices.end(), v.get<std::string>()) != choices.end();
    }
    if (kind == Kind::integer && !v.is_number_integer()) return false;
    if (!v.is_number()) return false;
    const double x = v.get<double>();
    return x >= lo && x <= hi;
  }
};

struct FamilySpace {
  Family family = Family::dtree;
  std::vector<Dimension> dims;

  json sample(Rng& rng) const {
    json params = json::object();
    for (const auto& d : dims) params[d.name] = d.sample(rng);
    return params;
  }

  std::vector<double> encode(const json& params) const {
    std::vector<double> x;
    x.reserve(dims.size());
    for (const auto& d : dims) x.push_back(d.encode(params.at(d.name)));
    return x;
  }
};

struct ParamSpace {
  std::vector<FamilySpace> families;

  const FamilySpace& of(Family f) const {
    for (const auto& s : families) {
      if (s.family == f) return s;
    }
    throw ArgumentError("family '" + std::string(to_string(f)) + "' is not in the parameter space");
  }

  void validate() const {
    if (families.empty()) throw ConfigError("parameter space has no families");
    for (const auto& f : families) {
      for (const auto& d : f.dims) d.validate();
    }
  }

  // Default ranges. Tree ranges straddle common CART defaults; boosting ranges
  // put the learning rate on a log scale.
  static ParamSpace defaults() {
    using S = Dimension::Scale;
    const std::vector<std::string> impurities{"gini", "entropy"};
    return {{
        {Family::dtree,
         {Dimension::integer("max_depth", 1, 12), Dimension::integer("min_samples_leaf", 1, 32),
          Dimension::integer("min_samples_split", 2, 64), Dimension::choice("impurity", impurities)}},
        {Family::rforest,
         {Dimension::integer("n_trees", 10, 150), Dimension::integer("max_depth", 1, 12),
          Dimension::integer("min_samples_leaf", 1, 32), Dimension::real("feature_fraction", 0.1, 1.0),
          Dimension::choice("impurity", impurities)}},
        {Family::gbdt_depthwise,
         {Dimension::integer("n_rounds", 10, 300), Dimension::real("learning_rate", 0.01, 0.3, S::log),
          Dimension::integer("max_depth", 2, 8), Dimension::integer("min_samples_leaf", 1, 32)}},
        {Family::gbdt_leafwise,
         {Dimension::integer("n_rounds", 10, 300), Dimension::real("learning_rate", 0.01, 0.3, S::log),
          Dimension::integer("max_leaves", 4, 64), Dimension::integer("min_samples_leaf", 1, 32)}},
    }};
  }
};

// ---------------------------------------------------------------------------
// Candidate fitting
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
T param_or(const json& p, const char* key, T fallback) {
  return p.contains(key) ? p.at(key).get<T>() : fallback;
}

}  // namespace detail

// Fits one candidate from sampled hyperparameters. Keys missing from `params`
// keep their struct defaults.
inline ModelPayload fit_candidate(Family family, const json& params, const EncodedMatrix& train, std::uint64_t seed) {
  switch (family) {
    case Family::dtree: {
      TreeParams p;
      p.max_depth = detail::param_or(params, "max_depth", p.max_depth);
      p.min_samples_leaf = detail::param_or(params, "min_samples_leaf", p.min_samples_leaf);
      p.min_samples_split = detail::param_or(params, "min_samples_split", p.min_samples_split);
      p.impurity = parse_impurity(detail::param_or<std::string>(params, "impurity", "gini"));
      return fit_tree(train, p, seed);
    }
    case Family::rforest: {
      ForestParams p;
      p.n_trees = detail::param_or(params, "n_trees", p.n_trees);
      p.max_depth = detail::param_or(params, "max_depth", p.max_depth);
      p.min_samples_leaf = detail::param_or(params, "min_samples_leaf", p.min_samples_leaf);
      p.min_samples_split = detail::param_or(params, "min_samples_split", p.min_samples_split);
      p.feature_fraction = detail::param_or(params, "feature_fraction", p.feature_fraction);
      p.bootstrap = detail::param_or(params, "bootstrap", p.bootstrap);
      p.impurity = parse_impurity(detail::param_or<std::string>(params, "impurity", "gini"));
      p.seed = seed;
      return fit_forest(train, p);
    }
    case Family::gbdt_depthwise:
    case Family::gbdt_leafwise: {
      GbdtParams p;
      p.growth = family == Family::gbdt_depthwise ? Growth::depthwise : Growth::leafwise;
      p.n_rounds = detail::param_or(params, "n_rounds", p.n_rounds);
      p.learning_rate = detail::param_or(params, "learning_rate", p.learning_rate);
      p.max_depth = detail::param_or(params, "max_depth", p.max_depth);
      p.max_leaves = detail::param_or(params, "max_leaves", p.max_leaves);
      p.min_samples_leaf = detail::param_or(params, "min_samples_leaf", p.min_samples_leaf);
      p.l2_reg = detail::param_or(params, "l2_reg", p.l2_reg);
      p.seed = seed;
      return fit_gbdt(train, p);
    }
  }
  throw ArgumentError("unknown family");
}

enum class Origin { random, bayes };

inline std::string_view to_string(Origin o) { return o == Origin::random ? "random" : "bayes"; }

inline Origin parse_origin(std::string_view s) {
  if (s == "random") return Origin::random;
  if (s == "bayes") return Origin::bayes;
  throw ArgumentError("unknown origin '" + std::string(s) + "'");
}

struct Trial {
  Family family = Family::dtree;
  json params;
  std::uint64_t seed = 0;
  double valid_accuracy = 0.0;
  Origin origin = Origin::random;
  std::size_t index = 0;  // sample index within (origin, family)
  std::optional<ModelPayload> payload;
};

inline void evaluate_trial(Trial& t, const EncodedMatrix& train, const EncodedMatrix& valid) {
  try {
    TrainedModel m{t.family, fit_candidate(t.family, t.params, train, t.seed), 0.0, 0, t.seed};
    t.valid_accuracy = accuracy(m, valid);
    t.payload = std::move(m.payload);
  } catch (const Error& e) {
    throw Error(std::string(to_string(t.origin)) + " trial " + std::string(to_string(t.family)) + "#" +
                std::to_string(t.index) + " " + t.params.dump() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Random search
// ---------------------------------------------------------------------------

// n_evals independent draws; family i % |families|. Trial i's sample and fit
// seed depend only on (master_seed, i).
inline std::vector<Trial> random_search(const ParamSpace& space, std::size_t n_evals, const EncodedMatrix& train,
                                        const EncodedMatrix& valid, std::uint64_t master_seed,
                                        std::size_t workers = 1) {
  if (n_evals < 1) throw ArgumentError("random search needs at least one evaluation");
  space.validate();
  const std::size_t nf = space.families.size();
  std::vector<Trial> trials(n_evals);
  for (std::size_t i = 0; i < n_evals; ++i) {
    const auto& fam = space.families[i % nf];
    Rng rng(derive_seed(master_seed, fnv1a("random"), i));
    trials[i].family = fam.family;
    trials[i].params = fam.sample(rng);
    trials[i].seed = derive_seed(master_seed, fnv1a("random-fit"), i);
    trials[i].origin = Origin::random;
    trials[i].index = i / nf;
  }
  parallel_for(n_evals, workers, [&](std::size_t i) { evaluate_trial(trials[i], train, valid); });
  return trials;
}

// ---------------------------------------------------------------------------
// Bayesian optimisation
// ---------------------------------------------------------------------------

struct BayesOptions {
  std::size_t n_init = 8;
  std::size_t n_iter = 30;
  std::size_t pool_size = 256;
  SurrogateForest::Options surrogate{};
};

struct Evaluation {
  json params;
  double loss = 0.0;
};

// Generic sequential model-based minimisation: n_init random points, then
// n_iter rounds of (fit surrogate forest, score a random candidate pool by
// expected improvement, evaluate the best candidate). `objective(params, k)`
// receives the evaluation index k.
template <typename Objective>
std::vector<Evaluation> bayes_minimize(const FamilySpace& space, const BayesOptions& opt, std::uint64_t seed,
                                       Objective&& objective) {
  if (opt.n_iter < 1) throw ArgumentError("bayes_opt needs n_iter >= 1");
  if (opt.n_init < 2) throw ArgumentError("bayes_opt needs n_init >= 2");
  if (opt.pool_size < 1) throw ArgumentError("bayes_opt needs a non-empty candidate pool");
  std::vector<Evaluation> history;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  auto run = [&](json params) {
    const auto k = history.size();
    const double loss = objective(params, k);
    x.push_back(space.encode(params));
    y.push_back(loss);
    history.push_back({std::move(params), loss});
  };
  for (std::size_t t = 0; t < opt.n_init; ++t) {
    Rng rng(derive_seed(seed, fnv1a("init"), t));
    run(space.sample(rng));
  }
  for (std::size_t it = 0; it < opt.n_iter; ++it) {
    const SurrogateForest surrogate(x, y, derive_seed(seed, fnv1a("fit"), it), opt.surrogate);
    const double best = *std::min_element(y.begin(), y.end());
    Rng rng(derive_seed(seed, fnv1a("pool"), it));
    json pick;
    double pick_ei = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < opt.pool_size; ++c) {
      auto candidate = space.sample(rng);
      const auto e = surrogate.estimate(space.encode(candidate));
      const double ei = expected_improvement(e.mean, e.sd, best);
      if (ei > pick_ei) {
        pick_ei = ei;
        pick = std::move(candidate);
      }
    }
    run(std::move(pick));
  }
  return history;
}

// Per family: warm-up plus iterations on validation loss. Families are
// independent and run in parallel; trials come back in (family, index) order.
inline std::vector<Trial> bayes_opt(const ParamSpace& space, std::size_t n_iter, std::size_t n_init,
                                    const EncodedMatrix& train, const EncodedMatrix& valid, std::uint64_t master_seed,
                                    std::size_t workers = 1) {
  space.validate();
  BayesOptions opt;
  opt.n_iter = n_iter;
  opt.n_init = n_init;
  std::vector<std::vector<Trial>> per_family(space.families.size());
  parallel_for(space.families.size(), workers, [&](std::size_t f) {
    const auto& fam = space.families[f];
    const auto family_seed = derive_seed(master_seed, fnv1a("bayes"), static_cast<std::uint64_t>(fam.family));
    auto& out = per_family[f];
    bayes_minimize(fam, opt, family_seed, [&](const json& params, std::size_t k) {
      Trial t;
      t.family = fam.family;
      t.params = params;
      t.seed = derive_seed(family_seed, fnv1a("fit"), k);
      t.origin = Origin::bayes;
      t.index = k;
      evaluate_trial(t, train, valid);
      out.push_back(std::move(t));
      return 1.0 - out.back().valid_accuracy;
    });
  });
  std::vector<Trial> trials;
  for (auto& v : per_family) {
    for (auto& t : v) trials.push_back(std::move(t));
  }
  return trials;
}

// ---------------------------------------------------------------------------
// Model space
// ---------------------------------------------------------------------------

struct SearchConfig {
  std::size_t n_random = 200;
  bool bayes = true;
  std::size_t bayes_iter = 30;
  std::size_t bayes_init = 26;

  std::size_t total(std::size_t n_families) const {
    return n_random + (bayes ? (bayes_iter + bayes_init) * n_families : 0);
  }
};

struct ModelSpace {
  std::vector<TrainedModel> models;
  std::vector<Origin> origins;
  std::vector<json> params;
  std::string fingerprint;
  std::uint64_t master_seed = 0;

  std::size_t size() const noexcept { return models.size(); }
  const TrainedModel& model(std::uint64_t id) const { return models.at(static_cast<std::size_t>(id)); }
};

// Random plus Bayesian trials, ids assigned in (origin, family, index) order.
inline ModelSpace build_model_space(const SearchConfig& cfg, const ParamSpace& space, const EncodedMatrix& train,
                                    const EncodedMatrix& valid, std::uint64_t master_seed, std::size_t workers = 1) {
  std::vector<Trial> trials;
  if (cfg.n_random > 0) trials = random_search(space, cfg.n_random, train, valid, master_seed, workers);
  if (cfg.bayes) {
    auto b = bayes_opt(space, cfg.bayes_iter, cfg.bayes_init, train, valid, master_seed, workers);
    for (auto& t : b) trials.push_back(std::move(t));
  }
  if (trials.empty()) throw ConfigError("search configuration produces an empty model space");

  auto family_rank = [&](Family f) {
    for (std::size_t i = 0; i < space.families.size(); ++i) {
      if (space.families[i].family == f) return i;
    }
    return space.families.size();
  };
  std::stable_sort(trials.begin(), trials.end(), [&](const Trial& a, const Trial& b) {
    if (a.origin != b.origin) return a.origin < b.origin;
    if (a.family != b.family) return family_rank(a.family) < family_rank(b.family);
    return a.index < b.index;
  });

  ModelSpace ms;
  ms.master_seed = master_seed;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    auto& t = trials[i];
    if (!t.payload) evaluate_trial(t, train, valid);
    ms.models.push_back(TrainedModel{t.family, std::move(*t.payload), t.valid_accuracy, i, t.seed});
    ms.origins.push_back(t.origin);
    ms.params.push_back(std::move(t.params));
  }
  return ms;
}

// Convenience overload: splits are encoded here.
inline ModelSpace build_model_space(const SearchConfig& cfg, const SplitPair& split, std::uint64_t master_seed,
                                    std::size_t workers = 1) {
  return build_model_space(cfg, ParamSpace::defaults(), one_hot_encode(split.train), one_hot_encode(split.valid),
                           master_seed, workers);
}

// ---------------------------------------------------------------------------
// Registry persistence: models/<id>.json plus registry.csv
// ---------------------------------------------------------------------------

inline std::string format_accuracy(double a) { return csv::fixed(a, 10); }

inline void write_registry(const std::filesystem::path& dir, const ModelSpace& ms) {
  std::filesystem::create_directories(dir / "models");
  std::ofstream reg(dir / "registry.csv", std::ios::binary);
  if (!reg) throw IngestError("cannot write " + (dir / "registry.csv").string());
  csv::Writer w(reg);
  w.row("model_id", "family", "origin", "params", "seed", "valid_accuracy");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const auto& m = ms.models[i];
    w.row(std::to_string(m.model_id), std::string(to_string(m.family)), std::string(to_string(ms.origins[i])),
          ms.params[i].dump(), std::to_string(m.seed), format_accuracy(m.valid_accuracy));
    std::ofstream out(dir / "models" / (std::to_string(m.model_id) + ".json"), std::ios::binary);
    out << to_json(m).dump() << '\n';
  }
  std::ofstream fp(dir / "space.fingerprint", std::ios::binary);
  fp << ms.fingerprint << '\n' << ms.master_seed << '\n';
}

inline ModelSpace read_registry(const std::filesystem::path& dir) {
  const auto table = csv::read_file(dir / "registry.csv");
  ModelSpace ms;
  const auto origin_col = table.column("origin");
  const auto params_col = table.column("params");
  if (origin_col == csv::Table::npos || params_col == csv::Table::npos) {
    throw DataError((dir / "registry.csv").string() + ": missing columns");
  }
  for (const auto& rec : table.records) {
    const auto id = rec.at(0);
    std::ifstream in(dir / "models" / (id + ".json"));
    if (!in) throw IngestError("missing model payload " + (dir / "models" / (id + ".json")).string());
    auto m = model_from_json(json::parse(in));
    if (m.model_id != ms.models.size()) throw DataError("registry model ids are not dense");
    ms.models.push_back(std::move(m));
    ms.origins.push_back(parse_origin(rec.at(origin_col)));
    ms.params.push_back(json::parse(rec.at(params_col)));
  }
  std::ifstream fp(dir / "space.fingerprint");
  if (fp) {
    std::getline(fp, ms.fingerprint);
    fp >> ms.master_seed;
  }
  return ms;
}

}  // namespace rashomon
