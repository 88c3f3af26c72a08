#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alpool/classifier.hpp"
#include "alpool/rng.hpp"

namespace alpool {

/// Certainty score c for one pool example. Lower = more useful to train on.
struct CertaintyScore {
  std::uint64_t uid = 0;
  double value = 0.0;
};

enum class ScorerKind { NegEnergy, AdvDistance, Random, PosEnergy };

std::string to_string(ScorerKind k);
ScorerKind scorer_from_string(const std::string& s);

/// Settings for adversarial reference generation. num_references is H and
/// defaults to the training mini-batch size. shared_batch reuses one
/// adversarial batch for the whole pool instead of drawing fresh references
/// per scored example.
struct AdvGenConfig {
  double step_size = 0.01;
  int num_steps = 5;
  int num_references = 16;
  bool shared_batch = false;
};

/// c = -log(exp(l_bona) + exp(l_spoof)), overflow-safe.
CertaintyScore score_negative_energy(const Logits& logits, std::uint64_t uid);

/// Negated energy score, the reference scorer that inverts the ranking.
CertaintyScore score_positive_energy(const Logits& logits, std::uint64_t uid);

/// Iterated sign-of-gradient ascent on the classification loss. Each of
/// num_steps steps moves every coordinate by step_size in the direction that
/// increases the loss, so the total perturbation is bounded by
/// num_steps*step_size in the infinity norm.
std::vector<double> generate_adversarial(const Classifier& model, const Example& example,
                                         const AdvGenConfig& cfg);

/// Draws H training examples with rng, turns each into an adversarial sample,
/// and returns the minimum embedding-space distance from the pool example to
/// those samples.
CertaintyScore score_adversarial_distance(const Classifier& model, const Example& pool_example,
                                          const std::vector<Example>& train_set,
                                          const AdvGenConfig& cfg, Rng& rng);

/// Uniform draw in [0, 1); ignores model and example content.
CertaintyScore score_random(Rng& rng, std::uint64_t uid);

/// One score per pool example, order-aligned with the pool. Each example is
/// scored from its own rng substream forked on the example uid, so the result
/// is independent of pool order and of the number of worker threads.
std::vector<CertaintyScore> score_pool(const Classifier& model, const std::vector<Example>& pool,
                                       const std::vector<Example>& train_set, ScorerKind kind,
                                       const AdvGenConfig& cfg, const Rng& rng, int jobs = 1);

}  // namespace alpool
