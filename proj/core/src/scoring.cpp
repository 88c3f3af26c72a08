#include "alpool/scoring.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace alpool {

namespace {

constexpr std::uint64_t kSharedBatchSalt = 0x5ba7c8ull;

void check_adv_config(const AdvGenConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("adv step_size must be > 0");
  if (cfg.num_steps < 1) throw std::invalid_argument("adv num_steps must be >= 1");
  if (cfg.num_references < 1) throw std::invalid_argument("adv num_references must be >= 1");
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// H adversarial reference embeddings drawn from the train set with rng.
std::vector<std::vector<double>> adversarial_embeddings(const Classifier& model,
                                                        const std::vector<Example>& train_set,
                                                        const AdvGenConfig& cfg, Rng& rng) {
  std::vector<std::vector<double>> refs;
  refs.reserve(static_cast<std::size_t>(cfg.num_references));
  for (int h = 0; h < cfg.num_references; ++h) {
    const Example& picked = train_set[rng.uniform_index(train_set.size())];
    const std::vector<double> adv = generate_adversarial(model, picked, cfg);
    refs.push_back(embed(model, adv));
  }
  return refs;
}

}  // namespace

std::string to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::NegEnergy: return "neg-energy";
    case ScorerKind::AdvDistance: return "adv";
    case ScorerKind::Random: return "random";
    case ScorerKind::PosEnergy: return "pos-energy";
  }
  throw std::logic_error("unreachable");
}

ScorerKind scorer_from_string(const std::string& s) {
  if (s == "neg-energy") return ScorerKind::NegEnergy;
  if (s == "adv") return ScorerKind::AdvDistance;
  if (s == "random") return ScorerKind::Random;
  if (s == "pos-energy") return ScorerKind::PosEnergy;
  throw std::invalid_argument("unknown scorer '" + s +
                              "' (expected neg-energy|adv|random|pos-energy)");
}

CertaintyScore score_negative_energy(const Logits& logits, std::uint64_t uid) {
  if (!std::isfinite(logits.bona) || !std::isfinite(logits.spoof))
    throw std::invalid_argument("score_negative_energy: non-finite logits");
  return {uid, -log_sum_exp(logits.bona, logits.spoof)};
}

CertaintyScore score_positive_energy(const Logits& logits, std::uint64_t uid) {
  CertaintyScore s = score_negative_energy(logits, uid);
  s.value = -s.value;
  return s;
}

std::vector<double> generate_adversarial(const Classifier& model, const Example& example,
                                         const AdvGenConfig& cfg) {
  check_adv_config(cfg);
  Example scratch = example;
  for (int step = 0; step < cfg.num_steps; ++step) {
    const std::vector<double> g = input_gradient(model, scratch);
    for (std::size_t i = 0; i < scratch.features.size(); ++i) {
      if (g[i] > 0.0)
        scratch.features[i] += cfg.step_size;
      else if (g[i] < 0.0)
        scratch.features[i] -= cfg.step_size;
    }
  }
  return std::move(scratch.features);
}

CertaintyScore score_adversarial_distance(const Classifier& model, const Example& pool_example,
                                          const std::vector<Example>& train_set,
                                          const AdvGenConfig& cfg, Rng& rng) {
  check_adv_config(cfg);
  if (train_set.empty())
    throw std::invalid_argument("score_adversarial_distance: empty train set");
  const std::vector<double> anchor = embed(model, pool_example.features);
  const auto refs = adversarial_embeddings(model, train_set, cfg, rng);
  double best = sq_dist(anchor, refs[0]);
  for (std::size_t h = 1; h < refs.size(); ++h) best = std::min(best, sq_dist(anchor, refs[h]));
  return {pool_example.uid, std::sqrt(best)};
}

CertaintyScore score_random(Rng& rng, std::uint64_t uid) {
  return {uid, rng.uniform()};
}

std::vector<CertaintyScore> score_pool(const Classifier& model, const std::vector<Example>& pool,
                                       const std::vector<Example>& train_set, ScorerKind kind,
                                       const AdvGenConfig& cfg, const Rng& rng, int jobs) {
  if (pool.empty()) throw std::invalid_argument("score_pool: empty pool");
  if (jobs < 1) throw std::invalid_argument("score_pool: jobs must be >= 1");
  if (kind == ScorerKind::AdvDistance && train_set.empty())
    throw std::invalid_argument("score_adversarial_distance: empty train set");

  // Shared-batch mode draws the adversarial references once, from a fixed
  // salt, instead of per scored example.
  std::vector<std::vector<double>> shared_refs;
  if (kind == ScorerKind::AdvDistance && cfg.shared_batch) {
    Rng shared = rng.fork(kSharedBatchSalt);
    shared_refs = adversarial_embeddings(model, train_set, cfg, shared);
  }

  std::vector<CertaintyScore> scores(pool.size());
  auto score_one = [&](std::size_t i) {
    const Example& ex = pool[i];
    switch (kind) {
      case ScorerKind::NegEnergy:
        scores[i] = score_negative_energy(forward(model, ex.features), ex.uid);
        break;
      case ScorerKind::PosEnergy:
        scores[i] = score_positive_energy(forward(model, ex.features), ex.uid);
        break;
      case ScorerKind::Random: {
        Rng sub = rng.fork(ex.uid);
        scores[i] = score_random(sub, ex.uid);
        break;
      }
      case ScorerKind::AdvDistance: {
        if (cfg.shared_batch) {
          const std::vector<double> anchor = embed(model, ex.features);
          double best = sq_dist(anchor, shared_refs[0]);
          for (std::size_t h = 1; h < shared_refs.size(); ++h)
            best = std::min(best, sq_dist(anchor, shared_refs[h]));
          scores[i] = {ex.uid, std::sqrt(best)};
        } else {
          Rng sub = rng.fork(ex.uid);
          scores[i] = score_adversarial_distance(model, ex, train_set, cfg, sub);
        }
        break;
      }
    }
  };

  const std::size_t n = pool.size();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) score_one(i);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&, w]() {
        for (std::size_t i = w; i < n; i += workers) score_one(i);
      });
    }
    for (auto& t : threads) t.join();
  }
  return scores;
}

}  // namespace alpool
