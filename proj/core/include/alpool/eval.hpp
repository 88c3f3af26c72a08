#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "alpool/classifier.hpp"
#include "alpool/data.hpp"
#include "alpool/selection.hpp"

namespace alpool {

/// One scored trial. Higher score means more bona fide.
struct TrialScore {
  std::uint64_t uid = 0;
  double score = 0.0;
  Label label = Label::BonaFide;
};

struct EERResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_bona = 0;
  std::size_t n_spoof = 0;
};

struct SignificanceResult {
  double z = 0.0;
  double p_value = 1.0;
  bool rejected_after_correction = false;  // filled by the comparison pipeline
};

/// Detection score l_bona - l_spoof; monotone in the bona fide softmax
/// probability.
double cm_score(const Classifier& model, const Example& example);

std::vector<TrialScore> score_trials(const Classifier& model, const Dataset& test_set);

/// Threshold sweep over the sorted unique scores and the midpoints between
/// neighbours. FAR(t) = fraction of spoof trials with score >= t, FRR(t) =
/// fraction of bona fide trials with score < t. Returns (FAR+FRR)/2 at the
/// threshold minimizing |FAR-FRR|, lowest threshold on ties.
EERResult compute_eer(const std::vector<TrialScore>& trials);

/// Two-proportion z-test between two EERs measured on test sets of the given
/// sizes: z = (a-b)/sqrt(var_a+var_b) with
/// var_i = eer_i*(1-eer_i)*(1/(4*n_bona) + 1/(4*n_spoof)), two-sided normal
/// p-value. Equal EERs give z=0, p=1; otherwise zero total variance throws
/// DegenerateVariance.
SignificanceResult eer_z_test(double eer_a, double eer_b, std::size_t n_bona,
                              std::size_t n_spoof);

/// Bonferroni-Holm step-down: rejects the sorted p-values while
/// p_(i) <= alpha/(m-i+1), stopping at the first failure. Decisions are
/// returned in the original order.
std::vector<bool> holm_correct(const std::vector<double>& p_values, double alpha);

/// Which uid list of a record the histogram summarizes.
enum class HistogramField { Selected, Removed };

struct HistogramCell {
  int source_id = 0;
  Label label = Label::BonaFide;
  double percent = 0.0;
};

struct IterationHistogram {
  int iteration = 0;
  std::vector<HistogramCell> cells;  // sorted by (source_id, label)
};

using PoolIndex = std::unordered_map<std::uint64_t, std::pair<int, Label>>;

PoolIndex build_pool_index(const Dataset& pool);

/// Per-iteration composition of the selected (or removed) examples as
/// percentages over (source_id, class). Iterations whose uid list is empty
/// produce no histogram; the rest sum to 100.
std::vector<IterationHistogram> selection_distribution(
    const std::vector<IterationRecord>& records, const PoolIndex& pool_index,
    HistogramField field = HistogramField::Selected);

}  // namespace alpool
