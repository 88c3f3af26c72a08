#include "alpool/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "alpool/errors.hpp"

namespace alpool {

double cm_score(const Classifier& model, const Example& example) {
  const Logits l = forward(model, example.features);
  return l.bona - l.spoof;
}

std::vector<TrialScore> score_trials(const Classifier& model, const Dataset& test_set) {
  std::vector<TrialScore> out;
  out.reserve(test_set.size());
  for (const Example& e : test_set.examples)
    out.push_back({e.uid, cm_score(model, e), e.label});
  return out;
}

EERResult compute_eer(const std::vector<TrialScore>& trials) {
  std::vector<double> bona, spoof;
  for (const TrialScore& t : trials) {
    if (!std::isfinite(t.score)) throw std::invalid_argument("non-finite trial score");
    (t.label == Label::BonaFide ? bona : spoof).push_back(t.score);
  }
  if (bona.empty() || spoof.empty())
    throw std::invalid_argument("EER needs at least one trial of each class");
  std::sort(bona.begin(), bona.end());
  std::sort(spoof.begin(), spoof.end());

  // Candidate thresholds: every unique score plus the midpoints between
  // neighbouring unique scores. FAR and FRR are step functions changing only
  // at scores, so this sweep sees every achievable (FAR, FRR) pair.
  std::vector<double> candidates;
  candidates.reserve(2 * trials.size());
  for (double s : bona) candidates.push_back(s);
  for (double s : spoof) candidates.push_back(s);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  const std::size_t n_unique = candidates.size();
  for (std::size_t i = 0; i + 1 < n_unique; ++i)
    candidates.push_back(candidates[i] / 2 + candidates[i + 1] / 2);
  std::sort(candidates.begin(), candidates.end());

  const double nb = static_cast<double>(bona.size());
  const double ns = static_cast<double>(spoof.size());
  EERResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    // spoof scores >= t accepted as bona fide; bona scores < t rejected.
    const auto sp = std::lower_bound(spoof.begin(), spoof.end(), t);
    const double far = static_cast<double>(spoof.end() - sp) / ns;
    const auto bo = std::lower_bound(bona.begin(), bona.end(), t);
    const double frr = static_cast<double>(bo - bona.begin()) / nb;
    const double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      best.eer = (far + frr) / 2;
      best.threshold = t;
    }
  }
  best.n_bona = bona.size();
  best.n_spoof = spoof.size();
  return best;
}

SignificanceResult eer_z_test(double eer_a, double eer_b, std::size_t n_bona,
                              std::size_t n_spoof) {
  if (n_bona < 1 || n_spoof < 1) throw std::invalid_argument("z-test needs counts >= 1");
  for (double e : {eer_a, eer_b})
    if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("EER out of [0,1]");

  SignificanceResult r;
  if (eer_a == eer_b) {
    r.z = 0.0;
    r.p_value = 1.0;
    return r;
  }
  const double counts = 1.0 / (4.0 * static_cast<double>(n_bona)) +
                        1.0 / (4.0 * static_cast<double>(n_spoof));
  const double var_a = eer_a * (1.0 - eer_a) * counts;
  const double var_b = eer_b * (1.0 - eer_b) * counts;
  const double var = var_a + var_b;
  if (var <= 0.0)
    throw DegenerateVariance("both EER variances are zero but the EERs differ");
  r.z = (eer_a - eer_b) / std::sqrt(var);
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

std::vector<bool> holm_correct(const std::vector<double>& p_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-value out of [0,1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<bool> rejected(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const double level = alpha / static_cast<double>(m - i);
    if (p_values[order[i]] <= level)
      rejected[order[i]] = true;
    else
      break;
  }
  return rejected;
}

PoolIndex build_pool_index(const Dataset& pool) {
  PoolIndex idx;
  idx.reserve(pool.size());
  for (const Example& e : pool.examples) idx[e.uid] = {e.source_id, e.label};
  return idx;
}

std::vector<IterationHistogram> selection_distribution(
    const std::vector<IterationRecord>& records, const PoolIndex& pool_index,
    HistogramField field) {
  std::vector<IterationHistogram> out;
  for (const IterationRecord& rec : records) {
    const std::vector<std::uint64_t>& uids =
        field == HistogramField::Selected ? rec.selected_uids : rec.removed_uids;
    if (uids.empty()) continue;
    std::map<std::pair<int, int>, std::size_t> counts;
    for (std::uint64_t uid : uids) {
      auto it = pool_index.find(uid);
      if (it == pool_index.end())
        throw IntegrityError("uid " + std::to_string(uid) + " missing from pool index");
      counts[{it->second.first, static_cast<int>(class_index(it->second.second))}]++;
    }
    IterationHistogram h;
    h.iteration = rec.iteration;
    const double total = static_cast<double>(uids.size());
    for (const auto& [key, n] : counts) {
      HistogramCell cell;
      cell.source_id = key.first;
      cell.label = key.second == 0 ? Label::BonaFide : Label::Spoof;
      cell.percent = 100.0 * static_cast<double>(n) / total;
      h.cells.push_back(cell);
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace alpool
