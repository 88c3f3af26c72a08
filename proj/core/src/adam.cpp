#include "alpool/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace alpool {

AdamState make_adam_state(const Classifier& model, const AdamParams& params) {
  AdamState s;
  s.params = params;
  s.first_moment.assign(model.parameter_count(), 0.0);
  s.second_moment.assign(model.parameter_count(), 0.0);
  return s;
}

void adam_step(Classifier& model, std::span<const double> grads, AdamState& state) {
  const std::size_t n = model.parameter_count();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
    throw std::invalid_argument("adam_step: gradient/state shape mismatch");

  const AdamParams& p = state.params;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(p.beta1, t);
  const double bc2 = 1.0 - std::pow(p.beta2, t);

  std::vector<double> theta = model.parameters();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.first_moment[i] = p.beta1 * state.first_moment[i] + (1.0 - p.beta1) * g;
    state.second_moment[i] = p.beta2 * state.second_moment[i] + (1.0 - p.beta2) * g * g;
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    theta[i] -= p.learning_rate * m_hat / (std::sqrt(v_hat) + p.epsilon);
  }
  model.set_parameters(theta);
}

Classifier train(Classifier model, const std::vector<Example>& dataset, const TrainConfig& cfg,
                 Rng& rng) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

  AdamState state = make_adam_state(model, cfg.adam);
  const std::size_t n = dataset.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<Example> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t stop = std::min(start + bs, n);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);
      LossGrads lg = loss_and_grads(model, batch);
      adam_step(model, lg.parameter_grads, state);
    }
  }
  return model;
}

double mean_loss(const Classifier& model, const std::vector<Example>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("mean_loss: empty dataset");
  double total = 0.0;
  for (const Example& ex : dataset) {
    const Logits l = forward(model, ex.features);
    const double l_true = ex.label == Label::BonaFide ? l.bona : l.spoof;
    total += log_sum_exp(l.bona, l.spoof) - l_true;
  }
  return total / static_cast<double>(dataset.size());
}

}  // namespace alpool
