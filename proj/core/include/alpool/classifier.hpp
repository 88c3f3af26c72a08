#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "alpool/data.hpp"
#include "alpool/rng.hpp"

namespace alpool {

/// Pre-softmax scores. Bona fide first, spoof second.
struct Logits {
  double bona = 0.0;
  double spoof = 0.0;
};

/// Dense layer, weights row-major (out_dim x in_dim).
struct AffineLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// Feedforward binary classifier: tanh hidden layers, affine output to two
/// logits. One hidden layer is designated as the embedding tap; its
/// post-activation output is what embed() returns. With no hidden layers the
/// model degenerates to a single affine map and the embedding is the input
/// itself, so forward(x) == output_affine(embed(x)) holds in every
/// configuration.
class Classifier {
 public:
  Classifier() = default;

  /// Random init: weights uniform in +-1/sqrt(fan_in) from rng, biases zero.
  Classifier(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
             std::size_t embedding_index, Rng& rng);

  /// All weights and biases zero. Useful as a fixture.
  static Classifier zeros(std::size_t input_dim,
                          const std::vector<std::size_t>& hidden_widths,
                          std::size_t embedding_index);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t embedding_index() const { return embedding_index_; }
  std::size_t embedding_dim() const;

  const std::vector<AffineLayer>& hidden() const { return hidden_; }
  std::vector<AffineLayer>& hidden() { return hidden_; }
  const AffineLayer& output() const { return output_; }
  AffineLayer& output() { return output_; }

  /// Flat parameter vector: per hidden layer weights then bias, then the
  /// output layer's weights and bias. set_parameters accepts the same order.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> theta);

  bool same_shape(const Classifier& other) const;

 private:
  std::size_t input_dim_ = 0;
  std::vector<AffineLayer> hidden_;
  AffineLayer output_;
  std::size_t embedding_index_ = 0;
};

Logits forward(const Classifier& model, std::span<const double> features);

/// Post-activation output of the designated hidden layer.
std::vector<double> embed(const Classifier& model, std::span<const double> features);

struct LossGrads {
  double loss = 0.0;
  std::vector<double> parameter_grads;  // flat, same order as Classifier::parameters()
};

/// Mean softmax cross-entropy over the batch plus exact analytic gradients.
LossGrads loss_and_grads(const Classifier& model, std::span<const Example> batch);

/// Gradient of the single-example cross-entropy loss w.r.t. the features.
std::vector<double> input_gradient(const Classifier& model, const Example& example);

/// Overflow-safe log(exp(a) + exp(b)).
double log_sum_exp(double a, double b);

}  // namespace alpool
