#include "alpool/selection.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "alpool/eval.hpp"

namespace alpool {

namespace {

// Substream salts, one per randomized phase of an iteration.
constexpr std::uint64_t kSaltModelInit = 0xA1;
constexpr std::uint64_t kSaltSeedTrain = 0xA2;
constexpr std::uint64_t kSaltLoop = 0xA3;
constexpr std::uint64_t kSaltScore = 1;
constexpr std::uint64_t kSaltRandomSelect = 2;
constexpr std::uint64_t kSaltFineTune = 3;

std::vector<std::uint64_t> ranked_uids(const std::vector<CertaintyScore>& scores,
                                       std::int64_t limit, bool largest) {
  if (scores.empty()) throw std::invalid_argument("rank: empty score list");
  if (limit <= 0) throw std::invalid_argument("rank: limit must be > 0");
  std::vector<const CertaintyScore*> order(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) order[i] = &scores[i];
  std::sort(order.begin(), order.end(), [largest](const CertaintyScore* a, const CertaintyScore* b) {
    if (a->value != b->value) return largest ? a->value > b->value : a->value < b->value;
    return a->uid < b->uid;
  });
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(limit), order.size());
  std::vector<std::uint64_t> uids(take);
  for (std::size_t i = 0; i < take; ++i) uids[i] = order[i]->uid;
  return uids;
}

/// Moves the given uids from `from` into `to`, appending in uid-list order and
/// compacting `from` stably.
void move_by_uid(std::vector<Example>& from, std::vector<Example>& to,
                 const std::vector<std::uint64_t>& uids) {
  std::unordered_map<std::uint64_t, std::size_t> where;
  where.reserve(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) where.emplace(from[i].uid, i);
  std::unordered_set<std::uint64_t> moved;
  moved.reserve(uids.size());
  for (std::uint64_t uid : uids) {
    auto it = where.find(uid);
    if (it == where.end()) throw IntegrityError("uid " + std::to_string(uid) + " not in pool");
    to.push_back(from[it->second]);
    moved.insert(uid);
  }
  std::erase_if(from, [&moved](const Example& e) { return moved.contains(e.uid); });
}

void erase_by_uid(std::vector<Example>& from, const std::vector<std::uint64_t>& uids) {
  std::unordered_set<std::uint64_t> gone(uids.begin(), uids.end());
  std::erase_if(from, [&gone](const Example& e) { return gone.contains(e.uid); });
}

TrainConfig fine_tune_config(const ALConfig& cfg) {
  TrainConfig t;
  t.epochs = cfg.epochs_per_iter;
  t.batch_size = cfg.batch_size;
  t.adam = cfg.adam;
  return t;
}

void check_iterable(const ALState& state, const ALConfig& cfg) {
  if (state.pool.empty()) throw PoolExhausted();
  if (cfg.selection_size <= 0) throw std::invalid_argument("selection_size must be > 0");
  if (cfg.epochs_per_iter < 1) throw std::invalid_argument("epochs_per_iter must be >= 1");
}

std::vector<std::pair<std::string, double>> evaluate_model(const Classifier& model,
                                                           const std::vector<Dataset>& test_sets) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(test_sets.size());
  for (const Dataset& t : test_sets)
    out.emplace_back(t.name, compute_eer(score_trials(model, t)).eer);
  return out;
}

}  // namespace

std::string to_string(AlgorithmKind a) {
  return a == AlgorithmKind::Select ? "select" : "remove";
}

AlgorithmKind algorithm_from_string(const std::string& s) {
  if (s == "select") return AlgorithmKind::Select;
  if (s == "remove") return AlgorithmKind::Remove;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected select|remove)");
}

ALConfig ALConfig::paper_preset() {
  ALConfig cfg;
  cfg.selection_size = 2560;
  cfg.iterations = 8;
  cfg.epochs_per_iter = 5;
  cfg.batch_size = 16;
  cfg.adam = AdamParams::paper_preset();
  cfg.adv.num_references = cfg.batch_size;
  return cfg;
}

std::vector<std::uint64_t> rank_smallest(const std::vector<CertaintyScore>& scores,
                                         std::int64_t limit) {
  return ranked_uids(scores, limit, /*largest=*/false);
}

std::vector<std::uint64_t> rank_largest(const std::vector<CertaintyScore>& scores,
                                        std::int64_t limit) {
  return ranked_uids(scores, limit, /*largest=*/true);
}

IterationRecord iterate_select(ALState& state, const ALConfig& cfg) {
  check_iterable(state, cfg);
  const int k = state.iteration + 1;
  Rng iter_rng = state.rng.fork(static_cast<std::uint64_t>(k));

  const std::vector<CertaintyScore> scores =
      score_pool(state.model, state.pool, state.train_set, cfg.scorer, cfg.adv,
                 iter_rng.fork(kSaltScore), cfg.jobs);
  IterationRecord rec;
  rec.iteration = k;
  rec.selected_uids = rank_smallest(scores, cfg.selection_size);
  move_by_uid(state.pool, state.train_set, rec.selected_uids);

  Rng tune_rng = iter_rng.fork(kSaltFineTune);
  state.model = train(std::move(state.model), state.train_set, fine_tune_config(cfg), tune_rng);
  state.iteration = k;
  rec.train_size = state.train_set.size();
  rec.pool_size = state.pool.size();
  return rec;
}

IterationRecord iterate_remove(ALState& state, const ALConfig& cfg) {
  check_iterable(state, cfg);
  const int k = state.iteration + 1;
  Rng iter_rng = state.rng.fork(static_cast<std::uint64_t>(k));

  const std::vector<CertaintyScore> scores =
      score_pool(state.model, state.pool, state.train_set, cfg.scorer, cfg.adv,
                 iter_rng.fork(kSaltScore), cfg.jobs);
  IterationRecord rec;
  rec.iteration = k;
  rec.removed_uids = rank_largest(scores, cfg.selection_size);
  erase_by_uid(state.pool, rec.removed_uids);

  if (!state.pool.empty()) {
    if (cfg.remove_exploit) {
      // Exploitation-only variant: take the most useful of what survives.
      std::unordered_set<std::uint64_t> alive;
      alive.reserve(state.pool.size());
      for (const Example& e : state.pool) alive.insert(e.uid);
      std::vector<CertaintyScore> remaining;
      remaining.reserve(state.pool.size());
      for (const CertaintyScore& s : scores)
        if (alive.contains(s.uid)) remaining.push_back(s);
      rec.selected_uids = rank_smallest(remaining, cfg.selection_size);
    } else {
      Rng pick_rng = iter_rng.fork(kSaltRandomSelect);
      const std::size_t take = std::min<std::size_t>(
          static_cast<std::size_t>(cfg.selection_size), state.pool.size());
      const std::vector<std::size_t> picked =
          pick_rng.sample_without_replacement(state.pool.size(), take);
      rec.selected_uids.reserve(take);
      for (std::size_t idx : picked) rec.selected_uids.push_back(state.pool[idx].uid);
    }
    move_by_uid(state.pool, state.train_set, rec.selected_uids);
  }

  Rng tune_rng = iter_rng.fork(kSaltFineTune);
  state.model = train(std::move(state.model), state.train_set, fine_tune_config(cfg), tune_rng);
  state.iteration = k;
  rec.train_size = state.train_set.size();
  rec.pool_size = state.pool.size();
  return rec;
}

std::string system_name(ScorerKind scorer, AlgorithmKind algorithm) {
  if (algorithm == AlgorithmKind::Remove) return "remove-" + to_string(scorer);
  return to_string(scorer);
}

RunRecord run_al(const Dataset& seed_set, const Dataset& pool, const ALConfig& cfg,
                 const std::vector<Dataset>& test_sets, const IterationObserver& observe) {
  if (seed_set.empty()) throw std::invalid_argument("run_al: empty seed set");
  if (cfg.iterations < 0) throw std::invalid_argument("run_al: iterations must be >= 0");

  Rng run_rng(cfg.seed);
  Rng init_rng = run_rng.fork(kSaltModelInit);
  Classifier model(cfg.input_dim, cfg.hidden_widths, cfg.embedding_index, init_rng);

  TrainConfig seed_train;
  seed_train.epochs = cfg.seed_epochs;
  seed_train.batch_size = cfg.batch_size;
  seed_train.adam = cfg.adam;
  Rng seed_rng = run_rng.fork(kSaltSeedTrain);
  model = train(std::move(model), seed_set.examples, seed_train, seed_rng);

  ALState state;
  state.train_set = seed_set.examples;
  state.pool = pool.examples;
  state.model = std::move(model);
  state.iteration = 0;
  state.rng = run_rng.fork(kSaltLoop);

  RunRecord run;
  run.system = system_name(cfg.scorer, cfg.algorithm);
  run.scorer = cfg.scorer;
  run.algorithm = cfg.algorithm;
  run.seed = cfg.seed;

  IterationRecord baseline;
  baseline.iteration = 0;
  baseline.train_size = state.train_set.size();
  baseline.pool_size = state.pool.size();
  baseline.eers = evaluate_model(state.model, test_sets);
  if (observe) observe(baseline, state.model);
  run.iterations.push_back(std::move(baseline));

  for (int k = 1; k <= cfg.iterations; ++k) {
    if (state.pool.empty()) break;
    IterationRecord rec = cfg.algorithm == AlgorithmKind::Select ? iterate_select(state, cfg)
                                                                 : iterate_remove(state, cfg);
    rec.eers = evaluate_model(state.model, test_sets);
    if (observe) observe(rec, state.model);
    run.iterations.push_back(std::move(rec));
  }
  return run;
}

}  // namespace alpool
