#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/csv.hpp"
#include "rashomon/rng.hpp"

namespace rashomon {

inline constexpr std::string_view kMissingLevel = "Missing";

enum class TargetMode { binary, multiclass };

inline std::string_view to_string(TargetMode m) { return m == TargetMode::binary ? "binary" : "multiclass"; }

inline TargetMode parse_target_mode(std::string_view s) {
  if (s == "binary") return TargetMode::binary;
  if (s == "multiclass") return TargetMode::multiclass;
  throw ArgumentError("unknown target mode '" + std::string(s) + "'");
}

struct ColumnSchema {
  std::string name;
  std::vector<std::string> levels;

  std::optional<std::uint32_t> level_index(std::string_view level) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (levels[i] == level) return static_cast<std::uint32_t>(i);
    }
    return std::nullopt;
  }
};

// One observation. Cells hold level indices into the matching ColumnSchema.
struct Row {
  std::vector<std::uint32_t> cells;
  std::uint32_t label = 0;

  bool operator==(const Row&) const = default;
};

struct TabularDataset {
  std::vector<ColumnSchema> schema;
  std::vector<Row> rows;
  std::vector<std::string> target_levels;
  std::string course_tag;

  std::size_t size() const noexcept { return rows.size(); }

  std::string_view cell(std::size_t row, std::size_t column) const {
    return schema[column].levels[rows[row].cells[column]];
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(target_levels.size(), 0);
    for (const auto& r : rows) ++counts[r.label];
    return counts;
  }

  // Throws DataError on the first violated invariant.
  void validate() const {
    if (rows.empty()) throw DataError("dataset '" + course_tag + "' has no rows");
    if (target_levels.empty()) throw DataError("dataset has no target levels");
    for (const auto& col : schema) {
      if (col.levels.empty()) throw DataError("column '" + col.name + "' has no levels");
      for (std::size_t i = 0; i < col.levels.size(); ++i) {
        if (col.levels[i].empty()) throw DataError("column '" + col.name + "' has an empty level name");
        for (std::size_t j = 0; j < i; ++j) {
          if (col.levels[i] == col.levels[j]) {
            throw DataError("column '" + col.name + "' repeats level '" + col.levels[i] + "'");
          }
        }
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.cells.size() != schema.size()) {
        throw DataError("row " + std::to_string(r) + " has " + std::to_string(row.cells.size()) +
                        " cells, schema has " + std::to_string(schema.size()));
      }
      for (std::size_t c = 0; c < schema.size(); ++c) {
        if (row.cells[c] >= schema[c].levels.size()) {
          throw DataError("row " + std::to_string(r) + " column '" + schema[c].name + "' level out of range");
        }
      }
      if (row.label >= target_levels.size()) throw DataError("row " + std::to_string(r) + " label out of range");
    }
  }

  TabularDataset subset(std::span<const std::size_t> indices) const {
    TabularDataset out{schema, {}, target_levels, course_tag};
    out.rows.reserve(indices.size());
    for (auto i : indices) out.rows.push_back(rows[i]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Encoded matrix
// ---------------------------------------------------------------------------

// Contiguous block of one-hot columns belonging to one original variable.
struct VariableGroup {
  std::string name;
  std::size_t first = 0;
  std::size_t count = 0;

  bool operator==(const VariableGroup&) const = default;
};

// Dense 0/1 design matrix plus integer labels.
//
// Alongside the dense storage a per-row list of the columns that are 1 is kept;
// tree growth walks only those, which for one-hot data is one entry per
// variable instead of one per level.
class EncodedMatrix {
 public:
  EncodedMatrix() = default;

  // `groups` must partition [0, n_cols) in order. An empty list assigns every
  // column its own group named "c<index>".
  EncodedMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::uint8_t> cells,
                std::vector<VariableGroup> groups, std::vector<std::uint32_t> labels, std::size_t n_classes)
      : n_rows_(n_rows),
        n_cols_(n_cols),
        cells_(std::move(cells)),
        groups_(std::move(groups)),
        labels_(std::move(labels)),
        n_classes_(n_classes) {
    if (cells_.size() != n_rows_ * n_cols_) throw ArgumentError("cell buffer does not match matrix shape");
    if (labels_.size() != n_rows_) throw ArgumentError("label count does not match row count");
    for (auto l : labels_) {
      if (l >= n_classes_) throw ArgumentError("label outside class range");
    }
    for (auto v : cells_) {
      if (v > 1) throw ArgumentError("encoded cells must be 0 or 1");
    }
    if (groups_.empty()) {
      for (std::size_t c = 0; c < n_cols_; ++c) groups_.push_back({"c" + std::to_string(c), c, 1});
    }
    std::size_t next = 0;
    for (const auto& g : groups_) {
      if (g.first != next || g.count == 0) throw ArgumentError("variable groups must partition the columns");
      next += g.count;
    }
    if (next != n_cols_) throw ArgumentError("variable groups must partition the columns");
    rebuild_active();
  }

  std::size_t rows() const noexcept { return n_rows_; }
  std::size_t cols() const noexcept { return n_cols_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  std::uint8_t at(std::size_t r, std::size_t c) const noexcept { return cells_[r * n_cols_ + c]; }

  std::span<const std::uint8_t> row(std::size_t r) const noexcept {
    return {cells_.data() + r * n_cols_, n_cols_};
  }

  // Columns equal to 1 in row r, ascending.
  std::span<const std::uint32_t> active(std::size_t r) const noexcept {
    return {active_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::uint32_t label(std::size_t r) const noexcept { return labels_[r]; }
  const std::vector<VariableGroup>& groups() const noexcept { return groups_; }
  std::span<const std::uint8_t> cells() const noexcept { return cells_; }

  const VariableGroup& group(std::string_view name) const {
    for (const auto& g : groups_) {
      if (g.name == name) return g;
    }
    throw ArgumentError("unknown variable '" + std::string(name) + "'");
  }

  // Every row has exactly one 1 inside every group.
  bool is_one_hot() const noexcept {
    for (std::size_t r = 0; r < n_rows_; ++r) {
      for (const auto& g : groups_) {
        unsigned sum = 0;
        for (std::size_t c = g.first; c < g.first + g.count; ++c) sum += at(r, c);
        if (sum != 1) return false;
      }
    }
    return true;
  }

  // Same matrix with the columns of `g` in row r taken from row source[r].
  EncodedMatrix with_group_rows(const VariableGroup& g, std::span<const std::size_t> source) const {
    EncodedMatrix out = *this;
    for (std::size_t r = 0; r < n_rows_; ++r) {
      for (std::size_t c = g.first; c < g.first + g.count; ++c) {
        out.cells_[r * n_cols_ + c] = cells_[source[r] * n_cols_ + c];
      }
    }
    out.rebuild_active();
    return out;
  }

  bool operator==(const EncodedMatrix& o) const {
    return n_rows_ == o.n_rows_ && n_cols_ == o.n_cols_ && cells_ == o.cells_ && groups_ == o.groups_ &&
           labels_ == o.labels_ && n_classes_ == o.n_classes_;
  }

 private:
  void rebuild_active() {
    offsets_.assign(n_rows_ + 1, 0);
    active_.clear();
    for (std::size_t r = 0; r < n_rows_; ++r) {
      for (std::size_t c = 0; c < n_cols_; ++c) {
        if (cells_[r * n_cols_ + c]) active_.push_back(static_cast<std::uint32_t>(c));
      }
      offsets_[r + 1] = active_.size();
    }
  }

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::uint8_t> cells_;
  std::vector<VariableGroup> groups_;
  std::vector<std::uint32_t> labels_;
  std::size_t n_classes_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> active_;
};

// One column per (variable, level) in schema order; labels coded by position
// in target_levels.
inline EncodedMatrix one_hot_encode(const TabularDataset& d) {
  std::vector<VariableGroup> groups;
  std::size_t width = 0;
  for (const auto& col : d.schema) {
    groups.push_back({col.name, width, col.levels.size()});
    width += col.levels.size();
  }
  std::vector<std::uint8_t> cells(d.rows.size() * width, 0);
  std::vector<std::uint32_t> labels;
  labels.reserve(d.rows.size());
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    for (std::size_t c = 0; c < d.schema.size(); ++c) {
      cells[r * width + groups[c].first + d.rows[r].cells[c]] = 1;
    }
    labels.push_back(d.rows[r].label);
  }
  return EncodedMatrix(d.rows.size(), width, std::move(cells), std::move(groups), std::move(labels),
                       d.target_levels.size());
}

// ---------------------------------------------------------------------------
// Targets and splitting
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& binary_levels() {
  static const std::vector<std::string> levels{"Fail", "Pass"};
  return levels;
}

inline const std::vector<std::string>& multiclass_levels() {
  static const std::vector<std::string> levels{"Fail", "Pass", "Distinction"};
  return levels;
}

// Folds Distinction into Pass. Already-binary input is returned unchanged.
inline TabularDataset make_binary(TabularDataset d) {
  if (d.target_levels == binary_levels()) return d;
  if (d.target_levels != multiclass_levels()) {
    throw ArgumentError("make_binary expects target levels [Fail, Pass, Distinction]");
  }
  for (auto& r : d.rows) {
    if (r.label == 2) r.label = 1;
  }
  d.target_levels = binary_levels();
  return d;
}

struct SplitPair {
  TabularDataset train;
  TabularDataset valid;
  std::uint64_t seed = 0;
  double ratio = 0.25;
  // Positions of each partition's rows in the input dataset, ascending.
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> valid_index;
};

// Stratified holdout. `ratio` is the validation fraction. The validation size
// is round(ratio * n); per-class quotas use largest remainders so each class
// lands within one row of its proportional share.
inline SplitPair stratified_split(const TabularDataset& d, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split ratio must lie in (0, 1)");
  const auto counts = d.class_counts();
  std::vector<std::vector<std::size_t>> by_class(counts.size());
  for (std::size_t i = 0; i < d.rows.size(); ++i) by_class[d.rows[i].label].push_back(i);

  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 1) {
      throw StratificationError("class '" + d.target_levels[k] + "' has fewer than 2 rows");
    }
  }
  std::size_t present = 0;
  for (auto c : counts) present += c > 0;
  if (present < 2) throw StratificationError("stratified split needs at least two populated classes");

  const double n = static_cast<double>(d.rows.size());
  const auto total = static_cast<std::size_t>(std::floor(ratio * n + 0.5));
  std::vector<std::size_t> quota(counts.size(), 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double exact = ratio * static_cast<double>(counts[k]);
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
    if (counts[remainders[i].second] == 0) continue;
    ++quota[remainders[i].second];
    ++assigned;
  }
  // Keep at least one row of every populated class on both sides.
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) continue;
    quota[k] = std::clamp<std::size_t>(quota[k], 1, counts[k] - 1);
  }

  SplitPair out;
  out.seed = seed;
  out.ratio = ratio;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& idx = by_class[k];
    Rng rng(derive_seed(seed, fnv1a("split"), k));
    rng.shuffle(std::span<std::size_t>(idx));
    out.valid_index.insert(out.valid_index.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[k]));
    out.train_index.insert(out.train_index.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[k]), idx.end());
  }
  std::sort(out.valid_index.begin(), out.valid_index.end());
  std::sort(out.train_index.begin(), out.train_index.end());
  out.train = d.subset(out.train_index);
  out.valid = d.subset(out.valid_index);
  return out;
}

// ---------------------------------------------------------------------------
// OULAD demographics
// ---------------------------------------------------------------------------

namespace oulad {

inline constexpr std::array<std::string_view, 4> kCourses{"AAA", "BBB", "DDD", "EEE"};

// Predictors in table order, with their levels in table order.
inline std::vector<ColumnSchema> demographic_schema() {
  return {
      {"age_band", {"0-35", "35-55", "55<="}},
      {"disability", {"TRUE", "FALSE"}},
      {"highest_education",
       {"Lower Than A Level", "A Level or Equivalent", "HE Qualification", "Post Graduate Qualification"}},
      {"gender", {"F", "M"}},
      {"imd_band",
       {"0-10%", "10-20%", "20-30%", "30-40%", "40-50%", "50-60%", "60-70%", "70-80%", "80-90%", "90-100%",
        std::string(kMissingLevel)}},
      {"region",
       {"East Anglian Region", "East Midlands Region", "Ireland", "London Region", "North Region",
        "North Western Region", "Scotland", "South East Region", "South Region", "South West Region", "Wales",
        "West Midlands Region", "Yorkshire Region"}},
  };
}

// Maps raw studentInfo spellings onto schema level names.
inline std::string normalize(std::string_view column, std::string_view raw) {
  std::string v(raw);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.erase(v.begin());
  if (column == "imd_band") {
    if (v.empty() || v == "?" || v == "NA") return std::string(kMissingLevel);
    if (v.back() != '%') v.push_back('%');  // the raw file spells one band "10-20"
    return v;
  }
  if (column == "age_band" && (v == "55+" || v == "55<=")) return "55<=";
  if (column == "disability") {
    if (v == "Y" || v == "TRUE") return "TRUE";
    if (v == "N" || v == "FALSE") return "FALSE";
  }
  if (column == "highest_education" && v == "No Formal quals") return "Lower Than A Level";
  return v;
}

inline TabularDataset load(const std::filesystem::path& data_dir, std::string_view course, TargetMode mode) {
  if (std::find(kCourses.begin(), kCourses.end(), course) == kCourses.end()) {
    throw ArgumentError("unknown course code '" + std::string(course) + "' (expected AAA, BBB, DDD or EEE)");
  }
  const auto path = data_dir / "studentInfo.csv";
  if (!std::filesystem::exists(path)) throw IngestError("missing OULAD file " + path.string());
  const auto table = csv::read_file(path);

  TabularDataset d;
  d.schema = demographic_schema();
  d.target_levels = multiclass_levels();
  d.course_tag = std::string(course);

  const auto module_col = table.column("code_module");
  const auto result_col = table.column("final_result");
  if (module_col == csv::Table::npos) throw DataError(path.string() + ": missing column code_module");
  if (result_col == csv::Table::npos) throw DataError(path.string() + ": missing column final_result");
  std::vector<std::size_t> cols;
  for (const auto& s : d.schema) {
    const auto c = table.column(s.name);
    if (c == csv::Table::npos) throw DataError(path.string() + ": missing column " + s.name);
    cols.push_back(c);
  }

  for (std::size_t i = 0; i < table.records.size(); ++i) {
    const auto& rec = table.records[i];
    if (rec.size() != table.header.size()) {
      throw DataError(path.string() + ": record " + std::to_string(i + 2) + " has " +
                      std::to_string(rec.size()) + " fields");
    }
    if (rec[module_col] != course) continue;
    const auto& result = rec[result_col];
    if (result == "Withdrawn") continue;
    Row row;
    if (result == "Fail") {
      row.label = 0;
    } else if (result == "Pass") {
      row.label = 1;
    } else if (result == "Distinction") {
      row.label = 2;
    } else {
      throw DataError(path.string() + ": unknown final_result '" + result + "'");
    }
    for (std::size_t c = 0; c < d.schema.size(); ++c) {
      const auto value = normalize(d.schema[c].name, rec[cols[c]]);
      const auto level = d.schema[c].level_index(value);
      if (!level) {
        throw DataError(path.string() + ": column " + d.schema[c].name + " has unexpected value '" + value + "'");
      }
      row.cells.push_back(*level);
    }
    d.rows.push_back(std::move(row));
  }
  if (d.rows.empty()) throw DataError("course " + std::string(course) + " has no completed students");
  return mode == TargetMode::binary ? make_binary(std::move(d)) : d;
}

}  // namespace oulad

inline TabularDataset load_oulad(const std::filesystem::path& data_dir, std::string_view course, TargetMode mode) {
  return oulad::load(data_dir, course, mode);
}

// ---------------------------------------------------------------------------
// Synthetic data with planted importance
// ---------------------------------------------------------------------------

struct PlantedVariable {
  std::string name;
  std::size_t levels = 4;
  double strength = 0.0;  // in [0, 1]; 0 marks pure noise
};

struct PlantedSpec {
  std::vector<PlantedVariable> variables;
  // 2 -> [Fail, Pass]; 3 -> [Fail, Pass, Distinction].
  std::size_t n_classes = 2;
  // Logit scale applied to the weighted sum of level effects.
  double signal_scale = 3.0;
  // Latent score above which a passing row becomes Distinction.
  double distinction_threshold = 1.5;

  void validate() const {
    if (variables.empty()) throw ArgumentError("planted spec needs at least one variable");
    std::size_t noise = 0;
    for (const auto& v : variables) {
      if (v.name.empty()) throw ArgumentError("planted variable needs a name");
      if (v.levels == 0) throw ArgumentError("planted variable '" + v.name + "' needs at least one level");
      if (!(v.strength >= 0.0 && v.strength <= 1.0)) {
        throw ArgumentError("planted variable '" + v.name + "' strength must lie in [0, 1]");
      }
      noise += v.strength == 0.0;
    }
    if (noise > 1) throw ArgumentError("at most one planted variable may be pure noise");
    if (n_classes != 2 && n_classes != 3) throw ArgumentError("planted spec supports 2 or 3 classes");
  }

  // Variable names by decreasing strength (stable on ties).
  std::vector<std::string> strength_order() const {
    std::vector<const PlantedVariable*> sorted;
    for (const auto& v : variables) sorted.push_back(&v);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto a, auto b) { return a->strength > b->strength; });
    std::vector<std::string> names;
    for (auto v : sorted) names.push_back(v->name);
    return names;
  }
};

// Level effects of each variable: evenly spaced in [-1, 1], shuffled per
// variable. Exposed so tests can recompute the generating logit.
inline std::vector<std::vector<double>> planted_effects(const PlantedSpec& spec, std::uint64_t seed) {
  std::vector<std::vector<double>> effects;
  for (std::size_t v = 0; v < spec.variables.size(); ++v) {
    const auto levels = spec.variables[v].levels;
    std::vector<double> e(levels, 0.0);
    for (std::size_t l = 0; l < levels && levels > 1; ++l) {
      e[l] = -1.0 + 2.0 * static_cast<double>(l) / static_cast<double>(levels - 1);
    }
    Rng rng(derive_seed(seed, fnv1a("effects"), v));
    rng.shuffle(std::span<double>(e));
    effects.push_back(std::move(e));
  }
  return effects;
}

// Rows with uniformly drawn levels; the label is a thresholded latent score
// scale * sum_v strength_v * effect_v(level) + logistic noise. Fail when the
// latent is negative, otherwise Pass (or Distinction above the threshold).
inline TabularDataset synth_generate(std::size_t n_rows, const PlantedSpec& spec, std::uint64_t seed) {
  if (n_rows < 50) throw ArgumentError("synthetic datasets need at least 50 rows");
  spec.validate();
  const auto effects = planted_effects(spec, seed);

  TabularDataset d;
  d.course_tag = "SYN";
  d.target_levels = spec.n_classes == 3 ? multiclass_levels() : binary_levels();
  for (const auto& v : spec.variables) {
    ColumnSchema col{v.name, {}};
    for (std::size_t l = 0; l < v.levels; ++l) col.levels.push_back("L" + std::to_string(l));
    d.schema.push_back(std::move(col));
  }

  Rng cells(derive_seed(seed, fnv1a("cells")));
  Rng noise(derive_seed(seed, fnv1a("noise")));
  d.rows.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    Row row;
    double logit = 0.0;
    for (std::size_t v = 0; v < spec.variables.size(); ++v) {
      const auto level = static_cast<std::uint32_t>(cells.index(spec.variables[v].levels));
      row.cells.push_back(level);
      logit += spec.variables[v].strength * effects[v][level];
    }
    const double latent = spec.signal_scale * logit + noise.logistic();
    if (latent < 0.0) {
      row.label = 0;
    } else if (spec.n_classes == 3 && latent >= spec.distinction_threshold) {
      row.label = 2;
    } else {
      row.label = 1;
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

}  // namespace rashomon
