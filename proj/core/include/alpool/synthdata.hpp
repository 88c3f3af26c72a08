#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "alpool/data.hpp"
#include "alpool/rng.hpp"

namespace alpool {

/// Which experiment set a cluster's draws land in.
enum class Destination { Seed, PoolA, PoolB, TestIn, TestShift };

std::string to_string(Destination d);

/// One isotropic Gaussian blob with a fixed label and source tag.
struct ClusterSpec {
  std::vector<double> mean;
  double cov_scale = 1.0;  // per-coordinate standard deviation, > 0
  Label label = Label::BonaFide;
  int source_id = 0;
  std::size_t count = 0;
  Destination destination = Destination::Seed;
};

/// Full recipe for a synthetic seed/pool/test scenario. Class ratios are
/// fixed by the cluster counts, not sampled.
struct ScenarioSpec {
  std::size_t dim = 8;
  std::vector<ClusterSpec> clusters;
  std::uint64_t seed = 1;
};

/// Materialized scenario. uids are allocated sequentially across all five
/// sets, so the sets are disjoint by construction.
struct Scenario {
  Dataset seed_set;
  Dataset pool_a;
  Dataset pool_b;
  Dataset test_in;
  Dataset test_shift;
  std::uint64_t next_uid = 0;
};

/// Samples every cluster in spec order. Deterministic per spec.seed.
/// Throws std::invalid_argument on degenerate covariance, empty clusters,
/// or mean/dim mismatch.
Scenario make_scenario(const ScenarioSpec& spec);

/// The default desk-scale scenario: an imbalanced seed set (about 1:9
/// bona:spoof), a near-seed pool A whose size is exactly K*L for the default
/// loop config, and a wider pool B that adds unseen sources plus a planted
/// redundant cluster. test_in draws from the seed families, test_shift only
/// from sources absent from the seed set.
ScenarioSpec default_paper_analogue(std::uint64_t seed);

/// Bona:spoof counts of the clusters routed to a destination.
std::pair<std::size_t, std::size_t> class_counts(const ScenarioSpec& spec, Destination d);

/// Reads the text dataset format (see save_dataset). Empty file gives an
/// empty dataset. Throws ParseError with a line number on malformed input,
/// IntegrityError naming the uid on duplicates.
Dataset load_dataset(const std::string& path);

/// Writes `# D=<dim>` then one `uid,source_id,label,f1,...,fD` line per
/// example, floats in shortest round-trip decimal form.
void save_dataset(const Dataset& dataset, const std::string& path);

}  // namespace alpool
