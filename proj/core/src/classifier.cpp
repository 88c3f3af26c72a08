#include "alpool/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace alpool {

namespace {

AffineLayer make_layer(std::size_t in_dim, std::size_t out_dim) {
  AffineLayer l;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.weights.assign(in_dim * out_dim, 0.0);
  l.bias.assign(out_dim, 0.0);
  return l;
}

void affine_apply(const AffineLayer& l, std::span<const double> x, std::vector<double>& out) {
  out.assign(l.out_dim, 0.0);
  for (std::size_t r = 0; r < l.out_dim; ++r) {
    double acc = l.bias[r];
    const double* w = &l.weights[r * l.in_dim];
    for (std::size_t c = 0; c < l.in_dim; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

void check_input(const Classifier& model, std::span<const double> features) {
  if (features.size() != model.input_dim())
    throw std::invalid_argument("feature dimension " + std::to_string(features.size()) +
                                " does not match model input dimension " +
                                std::to_string(model.input_dim()));
}

/// Forward pass keeping every post-activation vector; activations[0] is the
/// input, activations[k+1] the output of hidden layer k.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;
  Logits logits;
};

ForwardTrace run_forward(const Classifier& model, std::span<const double> features) {
  check_input(model, features);
  ForwardTrace t;
  t.activations.reserve(model.hidden().size() + 1);
  t.activations.emplace_back(features.begin(), features.end());
  std::vector<double> z;
  for (const auto& layer : model.hidden()) {
    affine_apply(layer, t.activations.back(), z);
    for (double& v : z) v = std::tanh(v);
    t.activations.push_back(z);
  }
  affine_apply(model.output(), t.activations.back(), z);
  t.logits = Logits{z[0], z[1]};
  return t;
}

double softmax_ce(const Logits& l, Label y) {
  const double l_true = y == Label::BonaFide ? l.bona : l.spoof;
  return log_sum_exp(l.bona, l.spoof) - l_true;
}

}  // namespace

double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

Classifier::Classifier(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                       std::size_t embedding_index, Rng& rng) {
  *this = zeros(input_dim, hidden_widths, embedding_index);
  for (auto& layer : hidden_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in_dim));
    for (double& w : layer.weights) w = (2.0 * rng.uniform() - 1.0) * scale;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(output_.in_dim));
  for (double& w : output_.weights) w = (2.0 * rng.uniform() - 1.0) * scale;
}

Classifier Classifier::zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                             std::size_t embedding_index) {
  if (input_dim == 0) throw std::invalid_argument("input_dim must be > 0");
  for (std::size_t w : hidden_widths)
    if (w == 0) throw std::invalid_argument("hidden widths must be > 0");
  if (hidden_widths.empty()) {
    if (embedding_index != 0)
      throw std::invalid_argument("embedding_index must be 0 when there are no hidden layers");
  } else if (embedding_index >= hidden_widths.size()) {
    throw std::invalid_argument("embedding_index out of range");
  }
  Classifier m;
  m.input_dim_ = input_dim;
  m.embedding_index_ = embedding_index;
  std::size_t prev = input_dim;
  for (std::size_t w : hidden_widths) {
    m.hidden_.push_back(make_layer(prev, w));
    prev = w;
  }
  m.output_ = make_layer(prev, 2);
  return m;
}

std::size_t Classifier::embedding_dim() const {
  return hidden_.empty() ? input_dim_ : hidden_[embedding_index_].out_dim;
}

std::size_t Classifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : hidden_) n += l.weights.size() + l.bias.size();
  return n + output_.weights.size() + output_.bias.size();
}

std::vector<double> Classifier::parameters() const {
  std::vector<double> theta;
  theta.reserve(parameter_count());
  auto push = [&theta](const AffineLayer& l) {
    theta.insert(theta.end(), l.weights.begin(), l.weights.end());
    theta.insert(theta.end(), l.bias.begin(), l.bias.end());
  };
  for (const auto& l : hidden_) push(l);
  push(output_);
  return theta;
}

void Classifier::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count())
    throw std::invalid_argument("parameter vector has wrong size");
  std::size_t off = 0;
  auto pull = [&theta, &off](AffineLayer& l) {
    std::copy_n(theta.begin() + off, l.weights.size(), l.weights.begin());
    off += l.weights.size();
    std::copy_n(theta.begin() + off, l.bias.size(), l.bias.begin());
    off += l.bias.size();
  };
  for (auto& l : hidden_) pull(l);
  pull(output_);
}

bool Classifier::same_shape(const Classifier& other) const {
  if (input_dim_ != other.input_dim_ || hidden_.size() != other.hidden_.size() ||
      embedding_index_ != other.embedding_index_)
    return false;
  for (std::size_t i = 0; i < hidden_.size(); ++i)
    if (hidden_[i].out_dim != other.hidden_[i].out_dim) return false;
  return true;
}

Logits forward(const Classifier& model, std::span<const double> features) {
  return run_forward(model, features).logits;
}

std::vector<double> embed(const Classifier& model, std::span<const double> features) {
  ForwardTrace t = run_forward(model, features);
  if (model.hidden().empty()) return t.activations[0];
  return t.activations[model.embedding_index() + 1];
}

namespace {

/// Backprop for one example; accumulates parameter gradients scaled by
/// `weight` into `grads` (flat layout) and optionally writes the input
/// gradient. Returns the example loss.
double backprop_example(const Classifier& model, const Example& ex, double weight,
                        std::vector<double>* grads, std::vector<double>* input_grad) {
  ForwardTrace t = run_forward(model, ex.features);
  const double loss = softmax_ce(t.logits, ex.label);

  // dL/dlogits = softmax(l) - onehot(y)
  const double hi = std::max(t.logits.bona, t.logits.spoof);
  const double eb = std::exp(t.logits.bona - hi);
  const double es = std::exp(t.logits.spoof - hi);
  const double zsum = eb + es;
  std::vector<double> delta{eb / zsum, es / zsum};
  delta[class_index(ex.label)] -= 1.0;

  const std::size_t n_hidden = model.hidden().size();

  // Flat offsets per layer, matching Classifier::parameters().
  std::vector<std::size_t> offsets(n_hidden + 1);
  std::size_t off = 0;
  for (std::size_t k = 0; k < n_hidden; ++k) {
    offsets[k] = off;
    off += model.hidden()[k].weights.size() + model.hidden()[k].bias.size();
  }
  offsets[n_hidden] = off;

  auto accumulate_layer = [&](const AffineLayer& layer, std::size_t layer_off,
                              const std::vector<double>& input, const std::vector<double>& d) {
    if (!grads) return;
    double* gw = grads->data() + layer_off;
    double* gb = gw + layer.weights.size();
    for (std::size_t r = 0; r < layer.out_dim; ++r) {
      const double dr = d[r] * weight;
      double* row = gw + r * layer.in_dim;
      for (std::size_t c = 0; c < layer.in_dim; ++c) row[c] += dr * input[c];
      gb[r] += dr;
    }
  };

  auto back_through = [](const AffineLayer& layer, const std::vector<double>& d) {
    std::vector<double> g(layer.in_dim, 0.0);
    for (std::size_t r = 0; r < layer.out_dim; ++r) {
      const double dr = d[r];
      const double* row = &layer.weights[r * layer.in_dim];
      for (std::size_t c = 0; c < layer.in_dim; ++c) g[c] += dr * row[c];
    }
    return g;
  };

  accumulate_layer(model.output(), offsets[n_hidden], t.activations[n_hidden], delta);
  std::vector<double> g = back_through(model.output(), delta);

  for (std::size_t k = n_hidden; k-- > 0;) {
    const auto& a = t.activations[k + 1];  // tanh output of layer k
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = g[i] * (1.0 - a[i] * a[i]);
    accumulate_layer(model.hidden()[k], offsets[k], t.activations[k], d);
    g = back_through(model.hidden()[k], d);
  }

  if (input_grad) *input_grad = std::move(g);
  return loss;
}

}  // namespace

LossGrads loss_and_grads(const Classifier& model, std::span<const Example> batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_grads: empty batch");
  LossGrads out;
  out.parameter_grads.assign(model.parameter_count(), 0.0);
  const double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const Example& ex : batch)
    total += backprop_example(model, ex, weight, &out.parameter_grads, nullptr);
  out.loss = total * weight;
  return out;
}

std::vector<double> input_gradient(const Classifier& model, const Example& example) {
  std::vector<double> g;
  backprop_example(model, example, 1.0, nullptr, &g);
  return g;
}

}  // namespace alpool
