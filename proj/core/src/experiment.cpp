#include "alpool/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

#include "alpool/adam.hpp"
#include "alpool/errors.hpp"
#include "alpool/eval.hpp"
#include "alpool/serialize.hpp"

namespace alpool {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Continues the run-level salt sequence used inside selection.cpp (model
// init, seed training, AL loop).
constexpr std::uint64_t kSaltTopTune = 0xA4;
constexpr std::uint64_t kSaltDevDraw = 0xA5;
constexpr int kTopPatience = 3;  // early-stopping patience, in epochs

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("float formatting failed");
  return std::string(buf, end);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::int64_t parse_int(const std::string& tok, const std::string& what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError(what + ": '" + tok + "' is not an integer");
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t sep_at = text.find(sep, start);
    const std::string tok =
        trim(text.substr(start, sep_at == std::string::npos ? std::string::npos : sep_at - start));
    if (!tok.empty()) out.push_back(tok);
    if (sep_at == std::string::npos) break;
    start = sep_at + 1;
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void check_test_set(const Dataset& t) {
  validate_dataset(t);
  if (t.count(Label::BonaFide) == 0 || t.count(Label::Spoof) == 0)
    throw std::invalid_argument("test set '" + t.name + "' needs both classes");
}

ExperimentData scenario_data(const ExperimentConfig& cfg) {
  const ScenarioSpec spec = default_paper_analogue(cfg.data.scenario_seed);
  Scenario sc = make_scenario(spec);
  const bool pool_a = cfg.data.pool_choice == 'A';

  ExperimentData d;
  d.seed_set = std::move(sc.seed_set);
  d.pool = pool_a ? std::move(sc.pool_a) : std::move(sc.pool_b);
  d.test_sets.push_back(std::move(sc.test_in));
  d.test_sets.push_back(std::move(sc.test_shift));

  // Development set for the top-line system: a fresh 10% draw from the
  // pool's generating clusters, uids shifted past the scenario's.
  ScenarioSpec dev_spec;
  dev_spec.dim = spec.dim;
  dev_spec.seed = Rng::splitmix64(spec.seed ^ kSaltDevDraw);
  const Destination want = pool_a ? Destination::PoolA : Destination::PoolB;
  for (const ClusterSpec& c : spec.clusters) {
    if (c.destination != want) continue;
    ClusterSpec dc = c;
    dc.count = std::max<std::size_t>(1, (c.count + 9) / 10);
    dev_spec.clusters.push_back(std::move(dc));
  }
  Scenario dev_sc = make_scenario(dev_spec);
  d.dev = pool_a ? std::move(dev_sc.pool_a) : std::move(dev_sc.pool_b);
  for (Example& e : d.dev.examples) e.uid += sc.next_uid;
  d.dev.name = "dev";
  d.dev.provenance = "10% development draw from the pool clusters";
  return d;
}

ExperimentData file_data(const ExperimentConfig& cfg) {
  if (cfg.data.seed_path.empty() || cfg.data.pool_path.empty() || cfg.data.test_paths.empty())
    throw std::invalid_argument("file mode needs seed_path, pool_path, and test_paths");
  ExperimentData d;
  d.seed_set = load_dataset(cfg.data.seed_path);
  d.pool = load_dataset(cfg.data.pool_path);
  for (const std::string& p : cfg.data.test_paths) d.test_sets.push_back(load_dataset(p));

  if (!cfg.data.dev_path.empty()) {
    d.dev = load_dataset(cfg.data.dev_path);
  } else if (!d.pool.empty()) {
    // Carve a 10% development split off the pool, deterministically.
    Rng rng = Rng(cfg.base_seed).fork(kSaltDevDraw);
    const std::size_t n_dev = std::max<std::size_t>(1, d.pool.size() / 10);
    const std::vector<std::size_t> picked = rng.sample_without_replacement(d.pool.size(), n_dev);
    std::unordered_set<std::size_t> is_dev(picked.begin(), picked.end());
    Dataset rest;
    rest.name = d.pool.name;
    rest.provenance = d.pool.provenance;
    d.dev.name = "dev";
    d.dev.provenance = "10% carved from " + d.pool.name;
    for (std::size_t i : picked) d.dev.examples.push_back(d.pool.examples[i]);
    for (std::size_t i = 0; i < d.pool.size(); ++i)
      if (!is_dev.contains(i)) rest.examples.push_back(d.pool.examples[i]);
    d.pool = std::move(rest);
  }
  return d;
}

/// Fine-tunes on train while the development loss keeps improving, with
/// persistent optimizer state across epochs; restores the best-on-dev
/// parameters (the starting model counts as the initial best).
Classifier early_stopped_train(Classifier model, const std::vector<Example>& train,
                               const std::vector<Example>& dev, const ALConfig& al,
                               int max_epochs, Rng& rng) {
  if (train.empty()) throw std::invalid_argument("early_stopped_train: empty train set");
  if (dev.empty()) throw std::invalid_argument("early_stopped_train: empty development set");
  AdamState state = make_adam_state(model, al.adam);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  const auto batch_size = static_cast<std::size_t>(al.batch_size);

  double best_loss = mean_loss(model, dev);
  std::vector<double> best_params = model.parameters();
  int since_best = 0;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);
      const LossGrads lg = loss_and_grads(model, batch);
      adam_step(model, lg.parameter_grads, state);
    }
    const double dev_loss = mean_loss(model, dev);
    if (dev_loss < best_loss) {
      best_loss = dev_loss;
      best_params = model.parameters();
      since_best = 0;
    } else if (++since_best >= kTopPatience) {
      break;
    }
  }
  model.set_parameters(best_params);
  return model;
}

int repeat_of(const RunRecord& run, const ExperimentConfig& cfg) {
  return static_cast<int>(run.seed - cfg.base_seed);
}

void write_eer_csv(const std::vector<RunRecord>& runs, const ExperimentConfig& cfg,
                   const std::string& path) {
  std::ofstream out = open_out(path);
  out << "iteration,scorer,repeat,test_set,eer\n";
  for (const RunRecord& run : runs)
    for (const IterationRecord& rec : run.iterations)
      for (const auto& [test, eer] : rec.eers)
        out << rec.iteration << ',' << run.system << ',' << repeat_of(run, cfg) << ',' << test
            << ',' << format_double(eer) << '\n';
}

void write_summary_csv(const std::vector<RunRecord>& runs, const ExperimentConfig& cfg,
                       const std::string& path) {
  // system -> (iteration, test_set) -> eers over repeats, in run order.
  std::vector<std::string> system_order;
  std::map<std::string, std::map<std::pair<int, std::string>, std::vector<double>>> acc;
  for (const RunRecord& run : runs) {
    if (!acc.contains(run.system)) system_order.push_back(run.system);
    auto& per = acc[run.system];
    for (const IterationRecord& rec : run.iterations)
      for (const auto& [test, eer] : rec.eers) per[{rec.iteration, test}].push_back(eer);
  }
  std::ofstream out = open_out(path);
  out << "iteration,scorer,test_set,mean_eer,min_eer,max_eer\n";
  for (const std::string& system : system_order) {
    for (const auto& [key, eers] : acc[system]) {
      const double mean =
          std::accumulate(eers.begin(), eers.end(), 0.0) / static_cast<double>(eers.size());
      const auto [lo, hi] = std::minmax_element(eers.begin(), eers.end());
      out << key.first << ',' << system << ',' << key.second << ',' << format_double(mean) << ','
          << format_double(*lo) << ',' << format_double(*hi) << '\n';
    }
  }
}

void write_hist_csv(const std::vector<RunRecord>& runs, const ExperimentConfig& cfg,
                    const PoolIndex& pool_index, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "scorer,repeat,iteration,field,source_id,label,percent\n";
  for (const RunRecord& run : runs) {
    for (HistogramField field : {HistogramField::Selected, HistogramField::Removed}) {
      const char* field_name = field == HistogramField::Selected ? "selected" : "removed";
      for (const IterationHistogram& h :
           selection_distribution(run.iterations, pool_index, field)) {
        for (const HistogramCell& cell : h.cells)
          out << run.system << ',' << repeat_of(run, cfg) << ',' << h.iteration << ','
              << field_name << ',' << cell.source_id << ',' << to_string(cell.label) << ','
              << format_double(cell.percent) << '\n';
      }
    }
  }
}

void write_meta_json(const ExperimentConfig& cfg, const ExperimentData& data,
                     const std::string& path) {
  json j;
  j["algorithm"] = to_string(cfg.al.algorithm);
  j["base_seed"] = cfg.base_seed;
  j["repeats"] = cfg.repeats;
  j["iterations"] = cfg.al.iterations;
  j["selection_size"] = cfg.al.selection_size;
  j["seed_size"] = data.seed_set.size();
  j["pool_size"] = data.pool.size();
  j["dev_size"] = data.dev.size();
  j["scorers"] = json::array();
  for (ScorerKind s : cfg.scorers) j["scorers"].push_back(to_string(s));
  j["test_sets"] = json::array();
  for (const Dataset& t : data.test_sets)
    j["test_sets"].push_back(json{{"name", t.name},
                                  {"n_bona", t.count(Label::BonaFide)},
                                  {"n_spoof", t.count(Label::Spoof)}});
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

std::vector<FinalEER> final_means(const std::vector<RunRecord>& runs) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> acc;
  for (const RunRecord& run : runs) {
    if (run.iterations.empty()) continue;
    for (const auto& [test, eer] : run.iterations.back().eers)
      acc[{run.system, test}].push_back(eer);
  }
  std::vector<FinalEER> out;
  for (const auto& [key, eers] : acc) {
    FinalEER m;
    m.system = key.first;
    m.test_set = key.second;
    m.mean_eer =
        std::accumulate(eers.begin(), eers.end(), 0.0) / static_cast<double>(eers.size());
    out.push_back(std::move(m));
  }
  return out;
}

std::string dir_label(const std::string& dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  const std::string name = p.filename().string();
  return name.empty() ? dir : name;
}

}  // namespace

ExperimentConfig experiment_from_config(const ConfigFile& f) {
  ExperimentConfig cfg;

  if (f.has("experiment", "scorers")) {
    cfg.scorers.clear();
    for (const std::string& tok : split_list(f.get_string("experiment", "scorers")))
      cfg.scorers.push_back(scorer_from_string(tok));
  }
  cfg.repeats = static_cast<int>(f.get_int("experiment", "repeats", cfg.repeats));
  cfg.base_seed = f.get_u64("experiment", "base_seed", cfg.base_seed);
  cfg.out_dir = f.get_string("experiment", "out", cfg.out_dir);
  cfg.alpha = f.get_double("experiment", "alpha", cfg.alpha);
  cfg.run_base = f.get_bool("experiment", "run_base", cfg.run_base);
  cfg.run_top = f.get_bool("experiment", "run_top", cfg.run_top);
  cfg.write_scores = f.get_bool("experiment", "write_scores", cfg.write_scores);
  if (cfg.repeats < 1) throw ParseError("[experiment] repeats must be >= 1");

  const std::string mode = f.get_string("data", "mode", "scenario");
  if (mode == "files")
    cfg.data.use_files = true;
  else if (mode != "scenario")
    throw ParseError("[data] mode must be scenario or files, got '" + mode + "'");
  cfg.data.scenario_seed = f.get_u64("data", "scenario_seed", cfg.data.scenario_seed);
  const std::string pool = f.get_string("data", "pool", std::string(1, cfg.data.pool_choice));
  if (pool != "A" && pool != "B") throw ParseError("[data] pool must be A or B, got '" + pool + "'");
  cfg.data.pool_choice = pool[0];
  cfg.data.seed_path = f.get_string("data", "seed_path", "");
  cfg.data.pool_path = f.get_string("data", "pool_path", "");
  cfg.data.test_paths = split_list(f.get_string("data", "test_paths", ""));
  cfg.data.dev_path = f.get_string("data", "dev_path", "");

  cfg.al.selection_size = f.get_int("loop", "selection_size", cfg.al.selection_size);
  cfg.al.iterations = static_cast<int>(f.get_int("loop", "iterations", cfg.al.iterations));
  cfg.al.epochs_per_iter =
      static_cast<int>(f.get_int("loop", "epochs_per_iter", cfg.al.epochs_per_iter));
  cfg.al.batch_size = static_cast<int>(f.get_int("loop", "batch_size", cfg.al.batch_size));
  cfg.al.seed_epochs = static_cast<int>(f.get_int("loop", "seed_epochs", cfg.al.seed_epochs));
  cfg.al.jobs = static_cast<int>(f.get_int("loop", "jobs", cfg.al.jobs));
  cfg.al.algorithm = algorithm_from_string(f.get_string("loop", "algorithm", "select"));
  cfg.al.remove_exploit = f.get_bool("loop", "remove_exploit", cfg.al.remove_exploit);
  if (cfg.al.selection_size < 1) throw ParseError("[loop] selection_size must be >= 1");
  if (cfg.al.iterations < 0) throw ParseError("[loop] iterations must be >= 0");
  if (cfg.al.epochs_per_iter < 1) throw ParseError("[loop] epochs_per_iter must be >= 1");
  if (cfg.al.batch_size < 1) throw ParseError("[loop] batch_size must be >= 1");
  if (cfg.al.seed_epochs < 1) throw ParseError("[loop] seed_epochs must be >= 1");
  if (cfg.al.jobs < 1) throw ParseError("[loop] jobs must be >= 1");

  cfg.al.input_dim = static_cast<std::size_t>(f.get_int("model", "input_dim", 8));
  if (f.has("model", "hidden")) {
    cfg.al.hidden_widths.clear();
    for (const std::string& tok : split_list(f.get_string("model", "hidden"))) {
      const std::int64_t w = parse_int(tok, "[model] hidden");
      if (w < 1) throw ParseError("[model] hidden widths must be >= 1");
      cfg.al.hidden_widths.push_back(static_cast<std::size_t>(w));
    }
  }
  const std::size_t default_emb =
      cfg.al.hidden_widths.empty() ? 0 : cfg.al.hidden_widths.size() - 1;
  cfg.al.embedding_index = static_cast<std::size_t>(
      f.get_int("model", "embedding_index", static_cast<std::int64_t>(default_emb)));

  cfg.al.adam.learning_rate = f.get_double("adam", "learning_rate", cfg.al.adam.learning_rate);
  cfg.al.adam.beta1 = f.get_double("adam", "beta1", cfg.al.adam.beta1);
  cfg.al.adam.beta2 = f.get_double("adam", "beta2", cfg.al.adam.beta2);
  cfg.al.adam.epsilon = f.get_double("adam", "epsilon", cfg.al.adam.epsilon);

  cfg.al.adv.step_size = f.get_double("adv", "step_size", cfg.al.adv.step_size);
  cfg.al.adv.num_steps = static_cast<int>(f.get_int("adv", "num_steps", cfg.al.adv.num_steps));
  cfg.al.adv.num_references =
      static_cast<int>(f.get_int("adv", "num_references", cfg.al.batch_size));
  cfg.al.adv.shared_batch = f.get_bool("adv", "shared_batch", cfg.al.adv.shared_batch);
  return cfg;
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  ExperimentData d = cfg.data.use_files ? file_data(cfg) : scenario_data(cfg);
  validate_dataset(d.seed_set);
  validate_dataset(d.pool);
  validate_dataset(d.dev);
  if (d.seed_set.empty()) throw std::invalid_argument("empty seed set");
  for (const Dataset& t : d.test_sets) check_test_set(t);
  std::unordered_set<std::uint64_t> seen;
  for (const Example& e : d.seed_set.examples) seen.insert(e.uid);
  for (const Example& e : d.pool.examples)
    if (!seen.insert(e.uid).second)
      throw IntegrityError("uid " + std::to_string(e.uid) + " appears in both seed and pool");
  return d;
}

std::vector<ComparisonRow> mark_equivalent_systems(
    const std::vector<FinalEER>& means,
    const std::map<std::string, std::pair<std::size_t, std::size_t>>& test_counts, double alpha) {
  std::map<std::string, std::vector<const FinalEER*>> by_test;
  for (const FinalEER& m : means) by_test[m.test_set].push_back(&m);

  std::vector<ComparisonRow> out;
  for (auto& [test, systems] : by_test) {
    const auto counts = test_counts.find(test);
    if (counts == test_counts.end())
      throw IntegrityError("no trial counts for test set '" + test + "'");
    const auto [n_bona, n_spoof] = counts->second;
    std::sort(systems.begin(), systems.end(), [](const FinalEER* a, const FinalEER* b) {
      return a->system < b->system;
    });
    for (std::size_t i = 0; i + 1 < systems.size(); ++i)
      if (systems[i]->system == systems[i + 1]->system)
        throw std::invalid_argument("duplicate system '" + systems[i]->system +
                                    "' for test set '" + test + "'");
    const FinalEER* best = *std::min_element(
        systems.begin(), systems.end(),
        [](const FinalEER* a, const FinalEER* b) { return a->mean_eer < b->mean_eer; });

    std::vector<const FinalEER*> others;
    std::vector<double> p_values;
    std::vector<double> zs;
    for (const FinalEER* s : systems) {
      if (s == best) continue;
      double z, p;
      try {
        const SignificanceResult r = eer_z_test(s->mean_eer, best->mean_eer, n_bona, n_spoof);
        z = r.z;
        p = r.p_value;
      } catch (const DegenerateVariance&) {
        // Both variances zero with different EERs: maximally significant.
        z = s->mean_eer > best->mean_eer ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
        p = 0.0;
      }
      others.push_back(s);
      zs.push_back(z);
      p_values.push_back(p);
    }
    const std::vector<bool> rejected = holm_correct(p_values, alpha);

    for (const FinalEER* s : systems) {
      ComparisonRow row;
      row.test_set = test;
      row.system = s->system;
      row.mean_eer = s->mean_eer;
      if (s == best) {
        row.marked = true;
      } else {
        const std::size_t i = static_cast<std::size_t>(
            std::find(others.begin(), others.end(), s) - others.begin());
        row.z = zs[i];
        row.p_value = p_values[i];
        row.marked = !rejected[i];
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "test_set,system,mean_eer,z_vs_best,p_value,marked\n";
  for (const ComparisonRow& r : rows)
    out << r.test_set << ',' << r.system << ',' << format_double(r.mean_eer) << ','
        << format_double(r.z) << ',' << format_double(r.p_value) << ',' << (r.marked ? 1 : 0)
        << '\n';
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const ExperimentData data = prepare_data(cfg);
  fs::create_directories(cfg.out_dir);
  fs::create_directories(cfg.out_dir + "/records");
  const std::string errors_path = cfg.out_dir + "/errors.json";
  std::error_code ec;
  fs::remove(errors_path, ec);  // fresh log so reruns produce identical trees

  ExperimentResult result;
  auto fail = [&](const std::string& where, const std::exception& e) {
    append_error_log(errors_path, where, e.what());
    ++result.failures;
  };

  auto score_writer = [&](const std::string& system, int repeat) -> IterationObserver {
    if (!cfg.write_scores) return {};
    return [&, system, repeat](const IterationRecord& rec, const Classifier& model) {
      const std::string dir =
          cfg.out_dir + "/scores/" + system + "/r" + std::to_string(repeat);
      fs::create_directories(dir);
      for (const Dataset& t : data.test_sets) {
        std::ofstream out =
            open_out(dir + "/" + t.name + "_iter" + std::to_string(rec.iteration) + ".csv");
        out << "uid,cm_score,label\n";
        for (const TrialScore& s : score_trials(model, t))
          out << s.uid << ',' << format_double(s.score) << ',' << to_string(s.label) << '\n';
      }
    };
  };

  auto record_path = [&](const std::string& system, int repeat) {
    return cfg.out_dir + "/records/" + system + "_r" + std::to_string(repeat) + ".json";
  };

  auto model_path = [&](const std::string& system, int repeat) {
    return cfg.out_dir + "/records/" + system + "_r" + std::to_string(repeat) + "_model.json";
  };

  // AL systems, one per configured scorer.
  for (ScorerKind scorer : cfg.scorers) {
    for (int r = 0; r < cfg.repeats; ++r) {
      ALConfig rc = cfg.al;
      rc.scorer = scorer;
      rc.seed = cfg.base_seed + static_cast<std::uint64_t>(r);
      const std::string system = system_name(scorer, rc.algorithm);
      try {
        Classifier final_model;
        const IterationObserver writer = score_writer(system, r);
        auto observe = [&](const IterationRecord& rec, const Classifier& m) {
          final_model = m;
          if (writer) writer(rec, m);
        };
        RunRecord rec = run_al(data.seed_set, data.pool, rc, data.test_sets, observe);
        save_run_record(rec, record_path(system, r));
        save_model(final_model, model_path(system, r));
        result.runs.push_back(std::move(rec));
      } catch (const std::exception& e) {
        fail(system + "/r" + std::to_string(r), e);
      }
    }
  }

  // Base (seed only). Its trained model doubles as the top-line's start.
  std::vector<Classifier> base_models(static_cast<std::size_t>(cfg.repeats));
  std::vector<bool> base_ok(static_cast<std::size_t>(cfg.repeats), false);
  if (cfg.run_base || cfg.run_top) {
    for (int r = 0; r < cfg.repeats; ++r) {
      ALConfig rc = cfg.al;
      rc.iterations = 0;
      rc.seed = cfg.base_seed + static_cast<std::uint64_t>(r);
      const IterationObserver writer =
          cfg.run_base ? score_writer("base", r) : IterationObserver{};
      try {
        auto observe = [&](const IterationRecord& rec, const Classifier& model) {
          base_models[static_cast<std::size_t>(r)] = model;
          base_ok[static_cast<std::size_t>(r)] = true;
          if (writer) writer(rec, model);
        };
        RunRecord rec = run_al(data.seed_set, data.pool, rc, data.test_sets, observe);
        rec.system = "base";
        if (cfg.run_base) {
          save_run_record(rec, record_path("base", r));
          save_model(base_models[static_cast<std::size_t>(r)], model_path("base", r));
          result.runs.push_back(std::move(rec));
        }
      } catch (const std::exception& e) {
        fail("base/r" + std::to_string(r), e);
      }
    }
  }

  // Top (seed + whole pool, early stopped on the development set).
  if (cfg.run_top) {
    const int max_epochs = std::max(1, cfg.al.iterations * cfg.al.epochs_per_iter);
    std::vector<Example> full = data.seed_set.examples;
    full.insert(full.end(), data.pool.examples.begin(), data.pool.examples.end());
    for (int r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(r);
      try {
        if (!base_ok[static_cast<std::size_t>(r)])
          throw std::runtime_error("seed model unavailable (base run failed)");
        Rng rng = Rng(seed).fork(kSaltTopTune);
        const Classifier model = early_stopped_train(
            base_models[static_cast<std::size_t>(r)], full, data.dev.examples, cfg.al,
            max_epochs, rng);
        RunRecord rec;
        rec.system = "top";
        rec.scorer = cfg.al.scorer;
        rec.algorithm = cfg.al.algorithm;
        rec.seed = seed;
        IterationRecord it;
        it.iteration = 0;
        it.train_size = full.size();
        it.pool_size = 0;
        for (const Dataset& t : data.test_sets)
          it.eers.emplace_back(t.name, compute_eer(score_trials(model, t)).eer);
        if (const IterationObserver writer = score_writer("top", r); writer) writer(it, model);
        rec.iterations.push_back(std::move(it));
        save_run_record(rec, record_path("top", r));
        save_model(model, model_path("top", r));
        result.runs.push_back(std::move(rec));
      } catch (const std::exception& e) {
        fail("top/r" + std::to_string(r), e);
      }
    }
  }

  write_eer_csv(result.runs, cfg, cfg.out_dir + "/eer.csv");
  write_summary_csv(result.runs, cfg, cfg.out_dir + "/eer_summary.csv");
  write_hist_csv(result.runs, cfg, build_pool_index(data.pool),
                 cfg.out_dir + "/selection_hist.csv");
  write_meta_json(cfg, data, cfg.out_dir + "/meta.json");

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const Dataset& t : data.test_sets)
    counts[t.name] = {t.count(Label::BonaFide), t.count(Label::Spoof)};
  write_comparison_csv(mark_equivalent_systems(final_means(result.runs), counts, cfg.alpha),
                       cfg.out_dir + "/comparison.csv");
  return result;
}

std::vector<ComparisonRow> compare_runs(const std::vector<std::string>& run_dirs, double alpha) {
  if (run_dirs.size() < 2)
    throw std::invalid_argument("compare needs at least two run directories");

  std::string missing;
  for (const std::string& dir : run_dirs)
    for (const char* name : {"eer.csv", "meta.json"}) {
      const std::string path = dir + "/" + name;
      if (!fs::exists(path)) missing += missing.empty() ? path : ", " + path;
    }
  if (!missing.empty()) throw IntegrityError("missing run artifacts: " + missing);

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  // (system, test_set) -> (final iteration seen, eers at that iteration)
  std::map<std::pair<std::string, std::string>, std::pair<int, std::vector<double>>> acc;

  for (const std::string& dir : run_dirs) {
    const std::string label = dir_label(dir);
    {
      std::ifstream in(dir + "/meta.json", std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      json meta;
      try {
        meta = json::parse(buf.str());
        for (const json& t : meta.at("test_sets")) {
          const std::string name = t.at("name").get<std::string>();
          const std::pair<std::size_t, std::size_t> c{t.at("n_bona").get<std::size_t>(),
                                                      t.at("n_spoof").get<std::size_t>()};
          const auto it = counts.find(name);
          if (it == counts.end())
            counts[name] = c;
          else if (it->second != c)
            throw IntegrityError("test set '" + name + "' has conflicting trial counts");
        }
      } catch (const json::exception& e) {
        throw ParseError(dir + "/meta.json: " + e.what());
      }
    }

    const std::string eer_path = dir + "/eer.csv";
    std::ifstream in(eer_path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line_no == 1) {
        if (line != "iteration,scorer,repeat,test_set,eer")
          throw ParseError(eer_path + ":1: unexpected header '" + line + "'");
        continue;
      }
      const std::vector<std::string> tok = split_list(line);
      if (tok.size() != 5)
        throw ParseError(eer_path + ":" + std::to_string(line_no) + ": expected 5 fields");
      int iteration = 0;
      double eer = 0.0;
      auto [p1, e1] = std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), iteration);
      auto [p2, e2] = std::from_chars(tok[4].data(), tok[4].data() + tok[4].size(), eer);
      if (e1 != std::errc() || e2 != std::errc())
        throw ParseError(eer_path + ":" + std::to_string(line_no) + ": bad number");
      auto& slot = acc[{label + ":" + tok[1], tok[3]}];
      if (iteration > slot.first) {
        slot.first = iteration;
        slot.second.clear();
      }
      if (iteration == slot.first) slot.second.push_back(eer);
    }
  }

  std::vector<FinalEER> means;
  for (const auto& [key, slot] : acc) {
    FinalEER m;
    m.system = key.first;
    m.test_set = key.second;
    m.mean_eer = std::accumulate(slot.second.begin(), slot.second.end(), 0.0) /
                 static_cast<double>(slot.second.size());
    means.push_back(std::move(m));
  }
  return mark_equivalent_systems(means, counts, alpha);
}

}  // namespace alpool
