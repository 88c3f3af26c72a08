#pragma once

#include <cstdint>
#include <span>

#include "alpool/classifier.hpp"

namespace alpool {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  /// beta1=0.9, beta2=0.999, eps=1e-8, lr=1e-6.
  static AdamParams paper_preset() {
    AdamParams p;
    p.learning_rate = 1e-6;
    return p;
  }
};

/// First/second moment accumulators, one slot per flat parameter.
struct AdamState {
  AdamParams params;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const Classifier& model, const AdamParams& params);

/// One bias-corrected Adam update, in place. grads must be shaped like the
/// model's flat parameter vector.
void adam_step(Classifier& model, std::span<const double> grads, AdamState& state);

struct TrainConfig {
  int epochs = 5;
  int batch_size = 16;
  AdamParams adam;
};

/// Mini-batch Adam training with a fresh optimizer state. Shuffles once per
/// epoch from rng; the trailing short batch is kept. Deterministic given
/// (model, dataset order, rng seed).
Classifier train(Classifier model, const std::vector<Example>& dataset,
                 const TrainConfig& cfg, Rng& rng);

/// Mean cross-entropy of the model over a dataset (no gradients).
double mean_loss(const Classifier& model, const std::vector<Example>& dataset);

}  // namespace alpool
