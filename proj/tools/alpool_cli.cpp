#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"

#include "alpool/config_file.hpp"
#include "alpool/errors.hpp"
#include "alpool/eval.hpp"
#include "alpool/experiment.hpp"
#include "alpool/serialize.hpp"
#include "alpool/synthdata.hpp"

namespace fs = std::filesystem;
using namespace alpool;

namespace {

void write_score_file(const Classifier& model, const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "uid,cm_score,label\n";
  char buf[64];
  for (const TrialScore& s : score_trials(model, data)) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), s.score);
    if (ec != std::errc()) throw std::runtime_error("float formatting failed");
    out << s.uid << ',' << std::string_view(buf, end) << ',' << to_string(s.label) << '\n';
  }
}

void print_dataset_line(const Dataset& d) {
  std::printf("  %-11s %4zu examples (%zu bonafide / %zu spoof)\n", d.name.c_str(), d.size(),
              d.count(Label::BonaFide), d.count(Label::Spoof));
}

int cmd_generate(std::uint64_t seed, const std::string& out_dir) {
  const Scenario sc = make_scenario(default_paper_analogue(seed));
  fs::create_directories(out_dir);
  for (const Dataset* d : {&sc.seed_set, &sc.pool_a, &sc.pool_b, &sc.test_in, &sc.test_shift}) {
    save_dataset(*d, out_dir + "/" + d->name + ".csv");
    print_dataset_line(*d);
  }
  std::printf("wrote 5 dataset files under %s\n", out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& seed_override,
            const std::string& out_override, const std::string& scorer_override,
            const std::string& algorithm_override, int jobs_override) {
  ExperimentConfig cfg = experiment_from_config(ConfigFile::parse_file(config_path));
  if (!seed_override.empty()) cfg.base_seed = std::stoull(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (!scorer_override.empty()) cfg.scorers = {scorer_from_string(scorer_override)};
  if (!algorithm_override.empty()) cfg.al.algorithm = algorithm_from_string(algorithm_override);
  if (jobs_override > 0) cfg.al.jobs = jobs_override;

  const ExperimentResult result = run_experiment(cfg);
  std::printf("completed %zu runs, %d failed; artifacts under %s\n", result.runs.size(),
              result.failures, cfg.out_dir.c_str());
  return result.failures == 0 ? 0 : 1;
}

int cmd_compare(const std::vector<std::string>& dirs, double alpha, const std::string& out_path) {
  const std::vector<ComparisonRow> rows = compare_runs(dirs, alpha);
  std::printf("%-12s %-28s %10s %10s %10s  %s\n", "test_set", "system", "mean_eer", "z", "p",
              "marked");
  for (const ComparisonRow& r : rows)
    std::printf("%-12s %-28s %10.4f %10.3f %10.3g  %s\n", r.test_set.c_str(), r.system.c_str(),
                r.mean_eer, r.z, r.p_value, r.marked ? "*" : "");
  if (!out_path.empty()) {
    write_comparison_csv(rows, out_path);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_score(const std::string& model_path, const std::string& data_path,
              const std::string& out_path) {
  const Classifier model = load_model(model_path);
  const Dataset data = load_dataset(data_path);
  if (data.empty()) throw std::invalid_argument("dataset '" + data_path + "' is empty");
  write_score_file(model, data, out_path);
  std::printf("scored %zu trials into %s\n", data.size(), out_path.c_str());
  return 0;
}

/// Best-effort machine-readable record of a fatal CLI error.
void log_fatal(const std::string& out_hint, const std::string& what) {
  std::string dir = ".";
  if (!out_hint.empty()) {
    fs::path p(out_hint);
    std::error_code ec;
    if (fs::is_directory(p, ec))
      dir = p.string();
    else if (p.has_parent_path())
      dir = p.parent_path().string();
  }
  try {
    append_error_log(dir + "/errors.json", "cli", what);
  } catch (...) {
    // The log is advisory; the exit status and stderr already carry the error.
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pool-based active learning at desk scale"};
  app.require_subcommand(1);

  std::string out_dir;
  std::uint64_t gen_seed = 7;
  auto* gen = app.add_subcommand("generate", "write the default synthetic scenario to files");
  gen->add_option("--seed", gen_seed, "scenario RNG seed")->capture_default_str();
  gen->add_option("--out", out_dir, "output directory")->required();

  std::string config_path, seed_override, scorer_override, algorithm_override;
  int jobs_override = 0;
  auto* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed_override, "override the base RNG seed");
  run->add_option("--out", out_dir, "override the output directory");
  run->add_option("--scorer", scorer_override, "run a single scorer")
      ->check(CLI::IsMember({"neg-energy", "adv", "random", "pos-energy"}));
  run->add_option("--algorithm", algorithm_override, "override the AL algorithm")
      ->check(CLI::IsMember({"select", "remove"}));
  run->add_option("--jobs", jobs_override, "scoring worker threads");

  std::vector<std::string> compare_dirs;
  double alpha = 0.05;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "compare two or more completed run directories");
  cmp->add_option("dirs", compare_dirs, "run directories")->required();
  cmp->add_option("--alpha", alpha, "significance level")->capture_default_str();
  cmp->add_option("--out", compare_out, "also write the table as CSV");

  std::string model_path, data_path, score_out;
  auto* score = app.add_subcommand("score", "score a dataset with a saved model");
  score->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  score->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  score->add_option("--out", score_out, "output score file")->required();

  CLI11_PARSE(app, argc, argv);

  const std::string out_hint = !out_dir.empty()     ? out_dir
                               : !compare_out.empty() ? compare_out
                               : !score_out.empty()   ? score_out
                                                      : std::string();
  try {
    if (gen->parsed()) return cmd_generate(gen_seed, out_dir);
    if (run->parsed())
      return cmd_run(config_path, seed_override, out_dir, scorer_override, algorithm_override,
                     jobs_override);
    if (cmp->parsed()) return cmd_compare(compare_dirs, alpha, compare_out);
    if (score->parsed()) return cmd_score(model_path, data_path, score_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    log_fatal(out_hint, e.what());
    return 1;
  }
  return 0;
}
