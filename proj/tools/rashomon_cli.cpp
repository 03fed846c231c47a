// Command-line front end for the Rashomon-set importance pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rashomon/pipeline.hpp"

namespace {

using namespace rashomon;

struct Flags {
  std::string config;
  std::string out;
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Flags& f) {
  RunConfig cfg = f.config.empty() ? parse_config(json::object()) : validate_config(f.config);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed) cfg.master_seed = *f.seed;
  return cfg;
}

void print_table(const json& summary, std::ostream& os) {
  auto num = [](const json& row, const char* key, int precision) -> std::string {
    if (!row.contains(key)) return "-";
    const auto& v = row.at(key);
    if (v.is_string()) {
      const auto text = v.get<std::string>();
      return text == "NA" ? text : csv::fixed(std::stod(text), precision);
    }
    return csv::fixed(v.get<double>(), precision);
  };
  auto count = [](const json& row, const char* key) -> std::string {
    if (!row.contains(key)) return "-";
    const auto& v = row.at(key);
    return v.is_string() ? v.get<std::string>() : std::to_string(v.get<std::size_t>());
  };
  char line[256];
  std::snprintf(line, sizeof line, "%-11s %-6s %-18s %-18s %-9s %-8s %-8s\n", "setup", "course", "space acc",
                "set acc", "set size", "viod_min", "viod_max");
  os << line;
  for (const auto& row : summary.at("rows")) {
    const auto space = num(row, "space_mean", 4) + " +- " + num(row, "space_sd", 3);
    const auto set = num(row, "set_mean", 4) + " +- " + num(row, "set_sd", 3);
    std::snprintf(line, sizeof line, "%-11s %-6s %-18s %-18s %-9s %-8s %-8s\n",
                  row.at("setup").get<std::string>().c_str(), row.at("course").get<std::string>().c_str(),
                  space.c_str(), set.c_str(), count(row, "set_size").c_str(), num(row, "viod_min", 3).c_str(),
                  num(row, "viod_max", 3).c_str());
    os << line;
  }
}

int run_stage(const Flags& f, Stage until) {
  const auto cfg = load(f);
  RunOptions opt;
  opt.workers = f.workers;
  opt.until = until;
  opt.log = &std::cerr;
  const auto result = run_pipeline(cfg, opt);
  if (until == Stage::ingest) {
    for (const auto& s : result.setups) {
      std::cout << s.tag() << ": " << s.n_rows << " rows (" << s.n_train << " train, " << s.n_valid << " valid)\n";
    }
  } else if (until == Stage::space) {
    for (const auto& s : result.setups) std::cout << s.tag() << ": " << s.space.size() << " models\n";
  } else {
    print_table(run_summary(result), std::cout);
  }
  std::cout << "artifacts in " << cfg.output_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rashomon-set variable importance analysis"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "Output directory (overrides config)");
    sub->add_option("--workers", flags.workers, "Worker threads; never changes results")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", flags.seed, "Master seed (overrides config)");
  };

  const std::pair<const char*, Stage> stages[] = {
      {"ingest", Stage::ingest}, {"space", Stage::space}, {"rashomon", Stage::rashomon},
      {"pvi", Stage::pvi},       {"viod", Stage::viod},
  };
  const char* help[] = {
      "Load, encode and split every partition",
      "Build (or reuse) the model space",
      "Extract Rashomon sets and write rashomon_summary.csv",
      "Permutation importance over each Rashomon set",
      "Importance-order discrepancy against the reference model",
  };
  std::optional<Stage> chosen;
  for (std::size_t i = 0; i < std::size(stages); ++i) {
    auto* sub = app.add_subcommand(stages[i].first, help[i]);
    add_common(sub);
    const auto stage = stages[i].second;
    sub->callback([&chosen, stage] { chosen = stage; });
  }
  auto* run = app.add_subcommand("run", "Full pipeline");
  add_common(run);
  run->callback([&chosen] { chosen = Stage::viod; });

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Re-emit summaries from a run directory");
  report->add_option("--out", report_dir, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      print_table(report_from_directory(report_dir), std::cout);
      return 0;
    }
    return run_stage(flags, *chosen);
  } catch (const ConfigErrors& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
