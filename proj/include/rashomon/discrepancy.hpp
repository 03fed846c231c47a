#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rashomon/common.hpp"
#include "rashomon/importance.hpp"
#include "rashomon/rashomon_set.hpp"

namespace rashomon {

struct Ranking {
  std::vector<std::string> order;  // most important first
  std::uint64_t model_id = 0;
  bool tie_note = false;  // some mean drops were exactly equal
};

// Descending mean drop. Exact ties keep `canonical` order (the schema order)
// and set tie_note.
inline Ranking rank_variables(std::span<const PviRecord> records, const std::vector<std::string>& canonical) {
  if (records.empty()) throw ArgumentError("no importance records to rank");
  Ranking r;
  r.model_id = records.front().model_id;
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t v = 0; v < canonical.size(); ++v) {
    const auto it = std::find_if(records.begin(), records.end(), [&](const PviRecord& rec) {
      return rec.variable == canonical[v];
    });
    if (it == records.end()) throw ArgumentError("no importance record for variable '" + canonical[v] + "'");
    if (it->model_id != r.model_id) throw ArgumentError("records span more than one model");
    keyed.emplace_back(it->mean_drop, v);
  }
  if (records.size() != canonical.size()) throw ArgumentError("records do not match the variable set");
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    r.order.push_back(canonical[keyed[i].second]);
    if (i > 0 && keyed[i].first == keyed[i - 1].first) r.tie_note = true;
  }
  return r;
}

// Kendall tau-a between two strict orderings of the same variables.
inline double kendall_tau(const Ranking& a, const Ranking& b) {
  const auto n = a.order.size();
  if (n != b.order.size()) throw ArgumentError("rankings cover different variable sets");
  std::map<std::string_view, std::size_t> pos_b;
  for (std::size_t i = 0; i < n; ++i) pos_b.emplace(b.order[i], i);
  if (pos_b.size() != n) throw ArgumentError("ranking contains duplicate variables");
  std::vector<std::size_t> mapped;  // position in b of a's i-th variable
  for (const auto& v : a.order) {
    const auto it = pos_b.find(v);
    if (it == pos_b.end()) throw ArgumentError("rankings cover different variable sets");
    mapped.push_back(it->second);
  }
  if (n < 2) return 1.0;
  long long score = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) score += mapped[i] < mapped[j] ? 1 : -1;
  }
  return static_cast<double>(score) / static_cast<double>(n * (n - 1) / 2);
}

enum class ViodMode { min, max };

inline std::string_view to_string(ViodMode m) { return m == ViodMode::min ? "min" : "max"; }

inline ViodMode parse_viod_mode(std::string_view s) {
  if (s == "min") return ViodMode::min;
  if (s == "max") return ViodMode::max;
  throw ArgumentError("unknown VIOD mode '" + std::string(s) + "'");
}

struct ViodReport {
  std::string course;
  std::string setup;
  std::vector<std::pair<std::uint64_t, double>> taus;  // non-reference members, ascending id
  double viod_min = 0.0;
  double viod_max = 0.0;
  std::uint64_t argmin_id = 0;
  std::uint64_t argmax_id = 0;
  ViodMode reported_mode = ViodMode::min;
  std::size_t n_members = 0;
  bool tie_note = false;  // any ranking involved had tied importances

  double reported() const noexcept { return reported_mode == ViodMode::min ? viod_min : viod_max; }
};

// Rankings of every model present in the report, keyed by model id.
inline std::map<std::uint64_t, Ranking> rankings_by_model(const PviReport& report,
                                                          const std::vector<std::string>& canonical) {
  std::map<std::uint64_t, std::vector<PviRecord>> grouped;
  for (const auto& r : report.records) grouped[r.model_id].push_back(r);
  std::map<std::uint64_t, Ranking> out;
  for (const auto& [id, recs] : grouped) out.emplace(id, rank_variables(recs, canonical));
  return out;
}

// Variable names in first-appearance order of the report.
inline std::vector<std::string> report_variables(const PviReport& report) {
  std::vector<std::string> vars;
  for (const auto& r : report.records) {
    if (r.model_id != report.records.front().model_id) break;
    vars.push_back(r.variable);
  }
  return vars;
}

// Kendall tau of every non-reference member against the reference, ascending id.
inline std::vector<std::pair<std::uint64_t, double>> tau_distribution(const PviReport& report, const RashomonSet& set,
                                                                      const std::vector<std::string>& canonical) {
  const auto rankings = rankings_by_model(report, canonical);
  auto lookup = [&](std::uint64_t id) -> const Ranking& {
    const auto it = rankings.find(id);
    if (it == rankings.end()) throw ArgumentError("importance report lacks model " + std::to_string(id));
    return it->second;
  };
  const auto& reference = lookup(set.reference_id);
  std::vector<std::pair<std::uint64_t, double>> taus;
  for (auto id : set.member_ids) {
    if (id == set.reference_id) continue;
    taus.emplace_back(id, kendall_tau(reference, lookup(id)));
  }
  return taus;
}

inline std::vector<std::pair<std::uint64_t, double>> tau_distribution(const PviReport& report, const RashomonSet& set) {
  return tau_distribution(report, set, report_variables(report));
}

inline ViodReport viod(const PviReport& report, const RashomonSet& set, ViodMode mode,
                       const std::vector<std::string>& canonical) {
  if (set.member_ids.size() < 2) throw ArgumentError("VIOD undefined for singleton set");
  ViodReport out;
  out.course = report.course;
  out.setup = report.setup;
  out.reported_mode = mode;
  out.n_members = set.member_ids.size();
  out.taus = tau_distribution(report, set, canonical);
  for (const auto& [id, r] : rankings_by_model(report, canonical)) out.tie_note = out.tie_note || r.tie_note;
  out.viod_min = out.viod_max = out.taus.front().second;
  out.argmin_id = out.argmax_id = out.taus.front().first;
  for (const auto& [id, tau] : out.taus) {
    if (tau < out.viod_min) {
      out.viod_min = tau;
      out.argmin_id = id;
    }
    if (tau > out.viod_max) {
      out.viod_max = tau;
      out.argmax_id = id;
    }
  }
  return out;
}

inline ViodReport viod(const PviReport& report, const RashomonSet& set, ViodMode mode = ViodMode::min) {
  return viod(report, set, mode, report_variables(report));
}

}  // namespace rashomon
