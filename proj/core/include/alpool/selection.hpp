#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "alpool/adam.hpp"
#include "alpool/data.hpp"
#include "alpool/errors.hpp"
#include "alpool/scoring.hpp"

namespace alpool {

enum class AlgorithmKind { Select, Remove };

std::string to_string(AlgorithmKind a);
AlgorithmKind algorithm_from_string(const std::string& s);

/// Everything one AL run needs. Desk-scale defaults; paper_preset() restores
/// the published training schedule (L=2560, K=8, 5 epochs/iter, batch 16,
/// Adam lr 1e-6).
struct ALConfig {
  std::int64_t selection_size = 19;  // L, examples moved per iteration
  int iterations = 8;                // K
  int epochs_per_iter = 5;
  int batch_size = 16;
  int seed_epochs = 20;  // training-from-scratch budget for the seed model
  ScorerKind scorer = ScorerKind::NegEnergy;
  AlgorithmKind algorithm = AlgorithmKind::Select;
  std::uint64_t seed = 1;
  AdamParams adam;
  AdvGenConfig adv;
  // Classifier architecture.
  std::size_t input_dim = 8;
  std::vector<std::size_t> hidden_widths{16, 16};
  std::size_t embedding_index = 1;
  // Remove-algorithm variant: replace the random exploration batch with the
  // most-useful batch (exploitation only).
  bool remove_exploit = false;
  int jobs = 1;

  static ALConfig paper_preset();
};

/// The quadruple both algorithms mutate.
struct ALState {
  std::vector<Example> train_set;
  std::vector<Example> pool;
  Classifier model;
  int iteration = 0;
  Rng rng{0};
};

/// What one iteration did. EERs are filled in by run_al after evaluation.
struct IterationRecord {
  int iteration = 0;
  std::vector<std::uint64_t> selected_uids;
  std::vector<std::uint64_t> removed_uids;
  std::size_t train_size = 0;
  std::size_t pool_size = 0;
  std::vector<std::pair<std::string, double>> eers;  // (test set name, eer)
};

/// Full per-run log: one record per iteration, index 0 being the seed-trained
/// baseline before any selection.
struct RunRecord {
  std::string system;
  ScorerKind scorer = ScorerKind::NegEnergy;
  AlgorithmKind algorithm = AlgorithmKind::Select;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> iterations;
};

/// uids of the min(limit, n) smallest scores, in rank order. Ties break by
/// ascending uid.
std::vector<std::uint64_t> rank_smallest(const std::vector<CertaintyScore>& scores,
                                         std::int64_t limit);

/// Mirror of rank_smallest on negated scores; ties still by ascending uid.
std::vector<std::uint64_t> rank_largest(const std::vector<CertaintyScore>& scores,
                                        std::int64_t limit);

/// One iteration of the selection algorithm: score the pool, move the L
/// lowest-certainty examples into the train set, fine-tune. Throws
/// PoolExhausted if the pool is already empty.
IterationRecord iterate_select(ALState& state, const ALConfig& cfg);

/// One iteration of the removal algorithm: score the pool, delete the L
/// highest-certainty examples, then move a random batch of up to L examples
/// into the train set, fine-tune.
IterationRecord iterate_remove(ALState& state, const ALConfig& cfg);

/// Canonical system label: the scorer token, prefixed with "remove-" for the
/// removal algorithm.
std::string system_name(ScorerKind scorer, AlgorithmKind algorithm);

/// Called once per completed iteration (including the iteration-0 baseline)
/// with the record and the model as of that iteration.
using IterationObserver = std::function<void(const IterationRecord&, const Classifier&)>;

/// Trains the seed model from scratch, then runs up to K iterations of the
/// configured algorithm, evaluating the EER on every test set after each
/// step. Stops early once the pool is used up.
RunRecord run_al(const Dataset& seed_set, const Dataset& pool, const ALConfig& cfg,
                 const std::vector<Dataset>& test_sets, const IterationObserver& observe = {});

}  // namespace alpool
