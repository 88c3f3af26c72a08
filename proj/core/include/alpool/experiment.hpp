#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "alpool/config_file.hpp"
#include "alpool/selection.hpp"
#include "alpool/synthdata.hpp"

namespace alpool {

/// Where the experiment's data comes from: a generated scenario (default) or
/// dataset files on disk.
struct DataConfig {
  bool use_files = false;
  // Scenario mode.
  std::uint64_t scenario_seed = 7;
  char pool_choice = 'B';  // 'A' or 'B'
  // File mode. dev_path is optional; without it a 10% development split is
  // carved off the pool for the top-line system.
  std::string seed_path;
  std::string pool_path;
  std::vector<std::string> test_paths;
  std::string dev_path;
};

struct ExperimentConfig {
  DataConfig data;
  ALConfig al;
  std::vector<ScorerKind> scorers{ScorerKind::NegEnergy, ScorerKind::AdvDistance,
                                  ScorerKind::Random, ScorerKind::PosEnergy};
  int repeats = 3;
  std::uint64_t base_seed = 100;
  std::string out_dir = "runs";
  bool run_base = true;
  bool run_top = true;
  double alpha = 0.05;
  bool write_scores = true;
};

/// Builds an ExperimentConfig from a parsed config file; see docs/config.md
/// for the schema. Missing keys fall back to the defaults above.
ExperimentConfig experiment_from_config(const ConfigFile& file);

/// Materialized experiment data. In scenario mode the development set is a
/// fresh 10% draw from the pool's generating clusters; in file mode it is
/// either dev_path or a carved 10% split (in which case pool shrinks).
struct ExperimentData {
  Dataset seed_set;
  Dataset pool;
  Dataset dev;
  std::vector<Dataset> test_sets;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

struct ExperimentResult {
  int failures = 0;
  std::vector<RunRecord> runs;
};

/// Runs every configured scorer for `repeats` repeats (run seed = base_seed +
/// repeat), plus the base (seed only) and top (seed + whole pool, early
/// stopped on the development set) reference systems. Writes eer.csv,
/// eer_summary.csv, selection_hist.csv, comparison.csv, per-run record JSONs,
/// meta.json, and per-iteration score files under cfg.out_dir. A failing run
/// is logged to errors.json and counted; the remaining runs still execute.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// One line of the final-iteration comparison table.
struct ComparisonRow {
  std::string test_set;
  std::string system;
  double mean_eer = 0.0;
  double z = 0.0;        // vs the minimum-mean system of this test set
  double p_value = 1.0;  // 1 for that minimum itself
  bool marked = false;   // minimum, or not significantly different from it
};

/// Mean final EER per (system, test set), the comparison table input.
struct FinalEER {
  std::string system;
  std::string test_set;
  double mean_eer = 0.0;
};

/// Per test set: two-sided z-test of every system against the minimum-mean
/// system, Holm-corrected at level alpha over that test set's comparisons;
/// marks the minimum and every system whose difference is not significant.
/// test_counts maps test set name to (n_bona, n_spoof).
std::vector<ComparisonRow> mark_equivalent_systems(
    const std::vector<FinalEER>& means,
    const std::map<std::string, std::pair<std::size_t, std::size_t>>& test_counts, double alpha);

/// Cross-directory comparison: pools the systems of two or more completed
/// run directories (rows labelled "<dir>:<system>") and marks equivalence as
/// above. Throws IntegrityError listing any missing artifact files.
std::vector<ComparisonRow> compare_runs(const std::vector<std::string>& run_dirs, double alpha);

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

}  // namespace alpool
