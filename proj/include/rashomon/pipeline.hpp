#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rashomon/common.hpp"
#include "rashomon/csv.hpp"
#include "rashomon/dataset.hpp"
#include "rashomon/discrepancy.hpp"
#include "rashomon/importance.hpp"
#include "rashomon/rashomon_set.hpp"
#include "rashomon/search.hpp"

namespace rashomon {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  enum class Source { oulad, synthetic };

  Source source = Source::oulad;
  std::filesystem::path oulad_dir = "data/oulad";
  std::vector<std::string> courses{"AAA", "BBB", "DDD", "EEE"};
  std::size_t synthetic_rows = 2000;
  std::uint64_t synthetic_seed = 7;
  PlantedSpec synthetic{{{"A", 3, 0.9}, {"B", 4, 0.5}, {"C", 5, 0.25}, {"D", 4, 0.0}}, 3};

  std::vector<TargetMode> target_modes{TargetMode::binary, TargetMode::multiclass};
  double split_ratio = 0.25;
  std::uint64_t master_seed = 42;
  SearchConfig search{};
  double epsilon = 0.05;
  std::size_t pvi_repeats = 10;
  ViodMode viod_mode = ViodMode::min;
  std::filesystem::path output_dir = "runs/default";

  // Data partitions processed by the run, as (setup, course) pairs.
  std::vector<std::pair<TargetMode, std::string>> setups() const {
    std::vector<std::pair<TargetMode, std::string>> out;
    const std::vector<std::string> synthetic_tag{"SYN"};
    for (auto mode : target_modes) {
      for (const auto& c : source == Source::oulad ? courses : synthetic_tag) out.emplace_back(mode, c);
    }
    return out;
  }
};

// Carries every violation found while validating a configuration.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<std::string> errors)
      : ConfigError(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string s = "invalid configuration:";
    for (const auto& e : errors) s += "\n  " + e;
    return s;
  }

  std::vector<std::string> errors_;
};

namespace detail {

class ConfigReader {
 public:
  std::vector<std::string> errors;

  void allow(const json& obj, const std::string& path, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) {
      errors.push_back(path + ": expected an object");
      return;
    }
    for (const auto& [k, v] : obj.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        errors.push_back((path.empty() ? k : path + "." + k) + ": unknown key");
      }
    }
  }

  template <typename T>
  void read(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    const auto field = path.empty() ? std::string(key) : path + "." + key;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      errors.push_back(field + ": wrong type");
    }
  }

  const json& child(const json& obj, const char* key) {
    static const json empty = json::object();
    if (obj.is_object() && obj.contains(key)) return obj.at(key);
    return empty;
  }
};

}  // namespace detail

// Parses, checks and materializes every default. Throws ConfigErrors listing
// each violation with its field path.
inline RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  detail::ConfigReader r;
  r.allow(doc, "", {"data", "target_modes", "split", "master_seed", "search", "epsilon", "pvi", "viod_mode",
                    "output_dir"});

  const auto& data = r.child(doc, "data");
  r.allow(data, "data", {"source", "oulad_dir", "courses", "synthetic"});
  std::string source = "oulad";
  r.read(data, "data", "source", source);
  if (source == "oulad") {
    cfg.source = RunConfig::Source::oulad;
  } else if (source == "synthetic") {
    cfg.source = RunConfig::Source::synthetic;
  } else {
    r.errors.push_back("data.source: must be 'oulad' or 'synthetic'");
  }
  std::string oulad_dir = cfg.oulad_dir.string();
  r.read(data, "data", "oulad_dir", oulad_dir);
  cfg.oulad_dir = oulad_dir;
  r.read(data, "data", "courses", cfg.courses);
  if (cfg.source == RunConfig::Source::oulad) {
    if (cfg.courses.empty()) r.errors.push_back("data.courses: at least one course is required");
    for (const auto& c : cfg.courses) {
      if (std::find(oulad::kCourses.begin(), oulad::kCourses.end(), c) == oulad::kCourses.end()) {
        r.errors.push_back("data.courses: unknown course '" + c + "'");
      }
    }
  }

  const auto& syn = r.child(data, "synthetic");
  r.allow(syn, "data.synthetic", {"n_rows", "seed", "n_classes", "variables"});
  r.read(syn, "data.synthetic", "n_rows", cfg.synthetic_rows);
  r.read(syn, "data.synthetic", "seed", cfg.synthetic_seed);
  r.read(syn, "data.synthetic", "n_classes", cfg.synthetic.n_classes);
  if (syn.contains("variables")) {
    cfg.synthetic.variables.clear();
    if (!syn.at("variables").is_array()) r.errors.push_back("data.synthetic.variables: expected an array");
    std::size_t i = 0;
    for (const auto& v : syn.at("variables")) {
      const auto path = "data.synthetic.variables[" + std::to_string(i++) + "]";
      r.allow(v, path, {"name", "levels", "strength"});
      PlantedVariable pv;
      r.read(v, path, "name", pv.name);
      r.read(v, path, "levels", pv.levels);
      r.read(v, path, "strength", pv.strength);
      cfg.synthetic.variables.push_back(pv);
    }
  }
  if (cfg.source == RunConfig::Source::synthetic) {
    try {
      cfg.synthetic.validate();
    } catch (const Error& e) {
      r.errors.push_back(std::string("data.synthetic: ") + e.what());
    }
    if (cfg.synthetic_rows < 50) r.errors.push_back("data.synthetic.n_rows: must be at least 50");
  }

  if (doc.is_object() && doc.contains("target_modes")) {
    std::vector<std::string> modes;
    r.read(doc, "", "target_modes", modes);
    cfg.target_modes.clear();
    for (const auto& m : modes) {
      try {
        cfg.target_modes.push_back(parse_target_mode(m));
      } catch (const Error&) {
        r.errors.push_back("target_modes: unknown mode '" + m + "'");
      }
    }
    if (modes.empty()) r.errors.push_back("target_modes: at least one mode is required");
  }
  if (cfg.source == RunConfig::Source::synthetic && cfg.synthetic.n_classes != 3 &&
      std::find(cfg.target_modes.begin(), cfg.target_modes.end(), TargetMode::multiclass) != cfg.target_modes.end()) {
    r.errors.push_back("data.synthetic.n_classes: multiclass target mode needs 3 classes");
  }

  const auto& split = r.child(doc, "split");
  r.allow(split, "split", {"ratio"});
  r.read(split, "split", "ratio", cfg.split_ratio);
  if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) r.errors.push_back("split.ratio: must lie in (0, 1)");

  if (doc.is_object() && doc.contains("master_seed")) {
    r.read(doc, "", "master_seed", cfg.master_seed);
  }

  const auto& search = r.child(doc, "search");
  r.allow(search, "search", {"n_random", "bayes"});
  r.read(search, "search", "n_random", cfg.search.n_random);
  const auto& bayes = r.child(search, "bayes");
  r.allow(bayes, "search.bayes", {"enabled", "n_iter", "n_init"});
  r.read(bayes, "search.bayes", "enabled", cfg.search.bayes);
  r.read(bayes, "search.bayes", "n_iter", cfg.search.bayes_iter);
  r.read(bayes, "search.bayes", "n_init", cfg.search.bayes_init);
  if (cfg.search.bayes) {
    if (cfg.search.bayes_iter < 1) r.errors.push_back("search.bayes.n_iter: must be at least 1");
    if (cfg.search.bayes_init < 2) r.errors.push_back("search.bayes.n_init: must be at least 2");
  }
  if (cfg.search.n_random == 0 && !cfg.search.bayes) r.errors.push_back("search: model space would be empty");

  r.read(doc, "", "epsilon", cfg.epsilon);
  if (!(cfg.epsilon >= 0.0)) r.errors.push_back("epsilon: must be non-negative");

  const auto& pvi = r.child(doc, "pvi");
  r.allow(pvi, "pvi", {"repeats"});
  r.read(pvi, "pvi", "repeats", cfg.pvi_repeats);
  if (cfg.pvi_repeats < 1) r.errors.push_back("pvi.repeats: must be at least 1");

  std::string mode = "min";
  r.read(doc, "", "viod_mode", mode);
  if (mode == "min" || mode == "max") {
    cfg.viod_mode = parse_viod_mode(mode);
  } else {
    r.errors.push_back("viod_mode: must be 'min' or 'max'");
  }

  std::string out = cfg.output_dir.string();
  r.read(doc, "", "output_dir", out);
  cfg.output_dir = out;

  if (!r.errors.empty()) throw ConfigErrors(std::move(r.errors));
  return cfg;
}

inline RunConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigErrors({path.string() + ": " + e.what()});
  }
  return parse_config(doc);
}

// Fully materialized configuration; feeding it back to parse_config yields the
// same RunConfig.
inline json to_json(const RunConfig& c) {
  json variables = json::array();
  for (const auto& v : c.synthetic.variables) {
    variables.push_back({{"name", v.name}, {"levels", v.levels}, {"strength", v.strength}});
  }
  json modes = json::array();
  for (auto m : c.target_modes) modes.push_back(to_string(m));
  return {
      {"data",
       {{"source", c.source == RunConfig::Source::oulad ? "oulad" : "synthetic"},
        {"oulad_dir", c.oulad_dir.string()},
        {"courses", c.courses},
        {"synthetic",
         {{"n_rows", c.synthetic_rows},
          {"seed", c.synthetic_seed},
          {"n_classes", c.synthetic.n_classes},
          {"variables", variables}}}}},
      {"target_modes", modes},
      {"split", {{"ratio", c.split_ratio}}},
      {"master_seed", c.master_seed},
      {"search",
       {{"n_random", c.search.n_random},
        {"bayes", {{"enabled", c.search.bayes}, {"n_iter", c.search.bayes_iter}, {"n_init", c.search.bayes_init}}}}},
      {"epsilon", c.epsilon},
      {"pvi", {{"repeats", c.pvi_repeats}}},
      {"viod_mode", to_string(c.viod_mode)},
      {"output_dir", c.output_dir.string()},
  };
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

enum class Stage { ingest, space, rashomon, pvi, viod };

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest:
      return "ingest";
    case Stage::space:
      return "space";
    case Stage::rashomon:
      return "rashomon";
    case Stage::pvi:
      return "pvi";
    case Stage::viod:
      return "viod";
  }
  return "unknown";
}

// Error raised inside the pipeline, tagged with the stage and partition.
class StageError : public Error {
 public:
  StageError(Stage stage, std::string context, const std::string& message)
      : Error(std::string(to_string(stage)) + " [" + context + "]: " + message),
        stage_(stage),
        context_(std::move(context)) {}

  Stage stage() const noexcept { return stage_; }
  const std::string& context() const noexcept { return context_; }

 private:
  Stage stage_;
  std::string context_;
};

struct SetupResult {
  TargetMode mode = TargetMode::binary;
  std::string course;
  std::size_t n_rows = 0;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
  std::vector<std::string> variables;
  ModelSpace space;
  bool space_reused = false;
  std::optional<RashomonSet> set;
  std::optional<RashomonSummary> summary;
  std::optional<PviReport> pvi;
  std::optional<ViodReport> viod;  // empty for singleton sets
  std::vector<std::pair<std::uint64_t, double>> taus;

  std::string setup() const { return std::string(to_string(mode)); }
  std::string tag() const { return setup() + "_" + course; }
};

struct RunResult {
  RunConfig config;
  std::vector<SetupResult> setups;
};

struct RunOptions {
  std::size_t workers = 1;
  Stage until = Stage::viod;
  std::ostream* log = nullptr;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::uint64_t hash_matrix(std::uint64_t h, const EncodedMatrix& m) {
  h = derive_seed(h, m.rows(), m.cols(), m.n_classes());
  std::uint64_t acc = 0xcbf29ce484222325ULL;
  for (auto c : m.cells()) acc = (acc ^ c) * 0x100000001b3ULL;
  for (auto l : m.labels()) acc = (acc ^ l) * 0x100000001b3ULL;
  return derive_seed(h, acc);
}

inline TabularDataset load_setup_data(const RunConfig& cfg, TargetMode mode, const std::string& course) {
  if (cfg.source == RunConfig::Source::oulad) return load_oulad(cfg.oulad_dir, course, mode);
  auto d = synth_generate(cfg.synthetic_rows, cfg.synthetic, cfg.synthetic_seed);
  return mode == TargetMode::binary ? make_binary(std::move(d)) : d;
}

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IngestError("cannot write " + p.string());
  return out;
}

inline std::string fmt(double v) { return csv::fixed(v, 10); }

}  // namespace detail

// Seeds for one partition, derived from the master seed and the partition name.
struct SetupSeeds {
  std::uint64_t split;
  std::uint64_t space;
  std::uint64_t pvi;

  static SetupSeeds of(std::uint64_t master, TargetMode mode, std::string_view course) {
    const auto key = derive_seed(master, fnv1a(course), static_cast<std::uint64_t>(mode));
    // The split ignores the target mode so binary and multiclass runs share rows.
    return {derive_seed(master, fnv1a("split"), fnv1a(course)), derive_seed(key, fnv1a("space")),
            derive_seed(key, fnv1a("pvi"))};
  }
};

inline void write_reports(const std::filesystem::path& out, const RunResult& run);

// Full workflow: per (setup, course) ingest, split, model space, Rashomon set,
// permutation importance and VIOD. Writes every artifact under
// config.output_dir. The model space of a partition is reloaded instead of
// refitted when its fingerprint matches.
inline RunResult run_pipeline(const RunConfig& cfg, const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  const auto& out = cfg.output_dir;
  fs::create_directories(out);
  fs::remove(out / "FAILED");
  {
    auto f = detail::open_out(out / "config.resolved.json");
    f << to_json(cfg).dump(2) << '\n';
  }
  RunResult run{cfg, {}};
  Stage stage = Stage::ingest;
  std::string context = "setup";
  try {
    for (const auto& [mode, course] : cfg.setups()) {
      SetupResult res;
      res.mode = mode;
      res.course = course;
      context = res.tag();
      const auto seeds = SetupSeeds::of(cfg.master_seed, mode, course);
      const auto dir = out / res.tag();
      fs::create_directories(dir);

      stage = Stage::ingest;
      const auto data = detail::load_setup_data(cfg, mode, course);
      data.validate();
      const auto split = stratified_split(data, cfg.split_ratio, seeds.split);
      const auto train = one_hot_encode(split.train);
      const auto valid = one_hot_encode(split.valid);
      res.n_rows = data.size();
      res.n_train = split.train.size();
      res.n_valid = split.valid.size();
      for (const auto& g : valid.groups()) res.variables.push_back(g.name);
      {
        json info = {{"setup", res.setup()},
                     {"course", course},
                     {"n_rows", res.n_rows},
                     {"n_train", res.n_train},
                     {"n_valid", res.n_valid},
                     {"target_levels", data.target_levels},
                     {"class_counts", data.class_counts()},
                     {"encoded_width", train.cols()},
                     {"variables", res.variables}};
        auto f = detail::open_out(dir / "dataset.json");
        f << info.dump(2) << '\n';
      }
      if (opt.log) *opt.log << "[" << res.tag() << "] " << res.n_rows << " rows\n";
      if (opt.until == Stage::ingest) {
        run.setups.push_back(std::move(res));
        continue;
      }

      stage = Stage::space;
      json fp_doc = {{"search", {cfg.search.n_random, cfg.search.bayes, cfg.search.bayes_iter, cfg.search.bayes_init}},
                     {"ratio", cfg.split_ratio},
                     {"seed", seeds.space},
                     {"data", detail::hash_matrix(detail::hash_matrix(0, train), valid)}};
      const auto fingerprint = detail::hex64(fnv1a(fp_doc.dump()));
      bool reused = false;
      if (fs::exists(dir / "space.fingerprint") && fs::exists(dir / "registry.csv")) {
        std::ifstream fp(dir / "space.fingerprint");
        std::string line;
        std::getline(fp, line);
        if (line == fingerprint) {
          res.space = read_registry(dir);
          reused = res.space.size() == cfg.search.total(ParamSpace::defaults().families.size());
        }
      }
      if (!reused) {
        res.space = build_model_space(cfg.search, ParamSpace::defaults(), train, valid, seeds.space, opt.workers);
        res.space.fingerprint = fingerprint;
        if (fs::exists(dir / "models")) fs::remove_all(dir / "models");
        write_registry(dir, res.space);
      }
      res.space_reused = reused;
      if (opt.log) {
        *opt.log << "[" << res.tag() << "] model space " << res.space.size() << (reused ? " (reused)" : "") << "\n";
      }
      if (opt.until == Stage::space) {
        run.setups.push_back(std::move(res));
        continue;
      }

      stage = Stage::rashomon;
      res.set = extract_rashomon(res.space, cfg.epsilon);
      res.summary = rashomon_summary(res.space, *res.set);
      {
        json j = {{"reference_id", res.set->reference_id},
                  {"epsilon", res.set->epsilon},
                  {"loss_metric", res.set->loss_metric},
                  {"member_ids", res.set->member_ids}};
        auto f = detail::open_out(dir / "rashomon_set.json");
        f << j.dump() << '\n';
      }
      if (opt.until == Stage::rashomon) {
        run.setups.push_back(std::move(res));
        continue;
      }

      stage = Stage::pvi;
      PviConfig pcfg;
      pcfg.repeats = cfg.pvi_repeats;
      pcfg.seed = seeds.pvi;
      res.pvi = pvi_over_set(*res.set, res.space, valid, pcfg, opt.workers);
      res.pvi->course = course;
      res.pvi->setup = res.setup();
      if (opt.until == Stage::pvi) {
        run.setups.push_back(std::move(res));
        continue;
      }

      stage = Stage::viod;
      res.taus = tau_distribution(*res.pvi, *res.set, res.variables);
      if (res.set->size() >= 2) {
        res.viod = viod(*res.pvi, *res.set, cfg.viod_mode, res.variables);
      }
      run.setups.push_back(std::move(res));
    }
    stage = opt.until;
    context = "reports";
    write_reports(out, run);
  } catch (const Error& e) {
    auto f = detail::open_out(out / "FAILED");
    f << "stage: " << to_string(stage) << "\ncontext: " << context << "\nerror: " << e.what() << '\n';
    throw StageError(stage, context, e.what());
  } catch (const std::exception& e) {
    auto f = detail::open_out(out / "FAILED");
    f << "stage: " << to_string(stage) << "\ncontext: " << context << "\nerror: " << e.what() << '\n';
    throw StageError(stage, context, e.what());
  }
  return run;
}

// Table-style rows echoed by the CLI and stored in run_summary.json.
inline json run_summary(const RunResult& run) {
  json rows = json::array();
  for (const auto& s : run.setups) {
    json row = {{"setup", s.setup()}, {"course", s.course}, {"n_rows", s.n_rows}, {"space_size", s.space.size()}};
    if (s.summary) {
      row["space_mean"] = s.summary->space.mean;
      row["space_sd"] = s.summary->space.sd;
      row["set_mean"] = s.summary->set.mean;
      row["set_sd"] = s.summary->set.sd;
      row["set_size"] = s.summary->set_size;
      row["reference_id"] = s.set->reference_id;
      row["reference_accuracy"] = s.space.model(s.set->reference_id).valid_accuracy;
    }
    if (s.viod) {
      row["viod_min"] = s.viod->viod_min;
      row["viod_max"] = s.viod->viod_max;
      row["viod_reported"] = s.viod->reported();
      row["viod_mode"] = to_string(s.viod->reported_mode);
      double mean_tau = 0.0;
      for (const auto& [id, tau] : s.taus) mean_tau += tau;
      row["mean_tau"] = mean_tau / static_cast<double>(s.taus.size());
    }
    rows.push_back(std::move(row));
  }
  return {{"master_seed", run.config.master_seed}, {"epsilon", run.config.epsilon}, {"rows", rows}};
}

inline void write_reports(const std::filesystem::path& out, const RunResult& run) {
  const auto family_of = [](const SetupResult& s, std::uint64_t id) {
    return std::string(to_string(s.space.model(id).family));
  };

  bool have_set = false, have_pvi = false, have_viod = false;
  for (const auto& s : run.setups) {
    have_set = have_set || s.summary.has_value();
    have_pvi = have_pvi || s.pvi.has_value();
    have_viod = have_viod || !s.taus.empty() || s.viod.has_value();
  }

  if (have_set) {
    auto f = detail::open_out(out / "rashomon_summary.csv");
    csv::Writer w(f);
    w.row("setup", "course", "space_mean", "space_sd", "set_mean", "set_sd", "set_size", "space_size", "reference_id",
          "epsilon");
    for (const auto& s : run.setups) {
      if (!s.summary) continue;
      w.row(s.setup(), s.course, detail::fmt(s.summary->space.mean), detail::fmt(s.summary->space.sd),
            detail::fmt(s.summary->set.mean), detail::fmt(s.summary->set.sd), std::to_string(s.summary->set_size),
            std::to_string(s.summary->space_size), std::to_string(s.set->reference_id), detail::fmt(s.set->epsilon));
    }
  }

  if (have_pvi) {
    auto lf = detail::open_out(out / "pvi_long.csv");
    csv::Writer lw(lf);
    lw.row("setup", "course", "model_id", "family", "variable", "repeat", "drop");
    auto sf = detail::open_out(out / "pvi_summary.csv");
    csv::Writer sw(sf);
    sw.row("setup", "course", "variable", "n_models", "mean", "min", "q1", "median", "q3", "max");
    for (const auto& s : run.setups) {
      if (!s.pvi) continue;
      std::map<std::string, std::vector<double>> per_variable;
      for (const auto& r : s.pvi->records) {
        for (std::size_t i = 0; i < r.drops.size(); ++i) {
          lw.row(s.setup(), s.course, std::to_string(r.model_id), family_of(s, r.model_id), r.variable,
                 std::to_string(i), detail::fmt(r.drops[i]));
        }
        per_variable[r.variable].push_back(r.mean_drop);
      }
      for (const auto& v : s.variables) {
        const auto& means = per_variable[v];
        double mean = 0.0;
        for (auto x : means) mean += x;
        mean /= static_cast<double>(means.size());
        sw.row(s.setup(), s.course, v, std::to_string(means.size()), detail::fmt(mean),
               detail::fmt(detail::quantile(means, 0.0)), detail::fmt(detail::quantile(means, 0.25)),
               detail::fmt(detail::quantile(means, 0.5)), detail::fmt(detail::quantile(means, 0.75)),
               detail::fmt(detail::quantile(means, 1.0)));
      }
    }
  }

  if (have_viod) {
    auto vf = detail::open_out(out / "viod.csv");
    csv::Writer vw(vf);
    vw.row("setup", "course", "viod_min", "viod_max", "reported_mode", "n_members", "viod_reported", "argmin_id",
           "argmax_id", "tie_note");
    auto tf = detail::open_out(out / "tau_long.csv");
    csv::Writer tw(tf);
    tw.row("setup", "course", "model_id", "family", "tau");
    for (const auto& s : run.setups) {
      if (!s.pvi) continue;
      if (s.viod) {
        vw.row(s.setup(), s.course, detail::fmt(s.viod->viod_min), detail::fmt(s.viod->viod_max),
               std::string(to_string(s.viod->reported_mode)), std::to_string(s.viod->n_members),
               detail::fmt(s.viod->reported()), std::to_string(s.viod->argmin_id), std::to_string(s.viod->argmax_id),
               s.viod->tie_note ? "1" : "0");
      } else {
        vw.row(s.setup(), s.course, "NA", "NA", std::string(to_string(run.config.viod_mode)),
               std::to_string(s.set->size()), "NA", "NA", "NA", "0");
      }
      for (const auto& [id, tau] : s.taus) {
        tw.row(s.setup(), s.course, std::to_string(id), family_of(s, id), detail::fmt(tau));
      }
    }
  }

  if (have_viod) {
    auto f = detail::open_out(out / "run_summary.json");
    f << run_summary(run).dump(2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Report re-emission from an existing run directory
// ---------------------------------------------------------------------------

// Joins rashomon_summary.csv and viod.csv of a finished run into one table.
inline json report_from_directory(const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  if (!fs::exists(out / "rashomon_summary.csv")) {
    throw IngestError("no rashomon_summary.csv in " + out.string() + "; run the pipeline first");
  }
  const auto summary = csv::read_file(out / "rashomon_summary.csv");
  std::optional<csv::Table> viod_table;
  if (fs::exists(out / "viod.csv")) viod_table = csv::read_file(out / "viod.csv");
  json rows = json::array();
  for (const auto& rec : summary.records) {
    json row = json::object();
    for (std::size_t i = 0; i < summary.header.size() && i < rec.size(); ++i) row[summary.header[i]] = rec[i];
    if (viod_table) {
      for (const auto& v : viod_table->records) {
        if (v.size() >= 2 && v[0] == rec[0] && v[1] == rec[1]) {
          for (std::size_t i = 2; i < viod_table->header.size() && i < v.size(); ++i) {
            row[viod_table->header[i]] = v[i];
          }
        }
      }
    }
    rows.push_back(std::move(row));
  }
  return {{"rows", rows}};
}

}  // namespace rashomon
