#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <vector>

#include "alpool/classifier.hpp"
#include "alpool/scoring.hpp"
#include "alpool/selection.hpp"
#include "support/oracles.hpp"

using namespace alpool;

namespace {

std::vector<Example> random_examples(Rng& rng, std::size_t n, std::size_t dim,
                                     std::uint64_t first_uid) {
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(oracles::random_example(rng, dim, first_uid + i));
  return out;
}

/// Small, fast AL setup: dim 3, hidden {4}, train 12, pool as requested.
struct Setup {
  ALConfig cfg;
  ALState state;

  explicit Setup(std::size_t pool_size, std::uint64_t seed = 1) {
    cfg.selection_size = 5;
    cfg.iterations = 4;
    cfg.epochs_per_iter = 1;
    cfg.batch_size = 8;
    cfg.input_dim = 3;
    cfg.hidden_widths = {4};
    cfg.embedding_index = 0;
    cfg.adv.num_references = 4;
    cfg.seed = seed;

    Rng rng(seed);
    state.model = Classifier(3, {4}, 0, rng);
    state.train_set = random_examples(rng, 12, 3, 0);
    state.pool = random_examples(rng, pool_size, 3, 1000);
    state.rng = Rng(seed).fork(77);
  }
};

std::set<std::uint64_t> uid_set(const std::vector<Example>& v) {
  std::set<std::uint64_t> s;
  for (const auto& e : v) s.insert(e.uid);
  return s;
}

Dataset tiny_test_set(const std::string& name, Rng& rng, std::uint64_t first_uid) {
  Dataset d;
  d.name = name;
  for (int i = 0; i < 8; ++i) {
    Example ex = oracles::random_example(rng, 3, first_uid + static_cast<std::uint64_t>(i));
    ex.label = i % 2 == 0 ? Label::BonaFide : Label::Spoof;
    d.examples.push_back(std::move(ex));
  }
  return d;
}

}  // namespace

TEST_CASE("rank_smallest picks the low scores in order") {
  std::vector<CertaintyScore> scores{{1, 0.5}, {2, 0.1}, {3, 0.9}};
  CHECK(rank_smallest(scores, 2) == std::vector<std::uint64_t>{2, 1});
}

TEST_CASE("rank_smallest breaks ties by ascending uid") {
  std::vector<CertaintyScore> scores{{9, 1.0}, {3, 1.0}, {7, 1.0}};
  CHECK(rank_smallest(scores, 2) == std::vector<std::uint64_t>{3, 7});
}

TEST_CASE("rank_smallest agrees with the full-sort oracle") {
  Rng rng(50);
  std::vector<CertaintyScore> scores;
  for (int i = 0; i < 1000; ++i)
    scores.push_back({static_cast<std::uint64_t>(i), rng.uniform_index(50) * 0.125});
  CHECK(rank_smallest(scores, 100) == oracles::sort_rank(scores, 100, false));
}

TEST_CASE("rank_largest mirrors rank_smallest") {
  std::vector<CertaintyScore> scores{{1, 0.5}, {2, 0.1}, {3, 0.9}};
  CHECK(rank_largest(scores, 1) == std::vector<std::uint64_t>{3});

  Rng rng(51);
  std::vector<CertaintyScore> fuzz, negated;
  for (int i = 0; i < 300; ++i) {
    const double v = rng.gaussian();
    fuzz.push_back({static_cast<std::uint64_t>(i), v});
    negated.push_back({static_cast<std::uint64_t>(i), -v});
  }
  // Tie-free inputs: largest of v is exactly smallest of -v.
  CHECK(rank_largest(fuzz, 40) == rank_smallest(negated, 40));
  CHECK(rank_largest(fuzz, 40) == oracles::sort_rank(fuzz, 40, true));
}

TEST_CASE("ranking rejects bad limits and empty score lists") {
  std::vector<CertaintyScore> scores{{1, 0.5}};
  CHECK_THROWS_AS(rank_smallest(scores, 0), std::invalid_argument);
  CHECK_THROWS_AS(rank_smallest({}, 3), std::invalid_argument);
  CHECK(rank_smallest(scores, 10) == std::vector<std::uint64_t>{1});
}

TEST_CASE("iterate_select with |pool| = L empties the pool in one call") {
  Setup s(5);
  const IterationRecord rec = iterate_select(s.state, s.cfg);
  CHECK(rec.iteration == 1);
  CHECK(rec.selected_uids.size() == 5);
  CHECK(rec.removed_uids.empty());
  CHECK(rec.pool_size == 0);
  CHECK(rec.train_size == 17);
  CHECK(s.state.pool.empty());
}

TEST_CASE("iterate_select grows the train set by L per call") {
  Setup s(20);
  const std::size_t n = s.state.train_set.size();
  for (int k = 1; k <= 4; ++k) {
    const IterationRecord rec = iterate_select(s.state, s.cfg);
    CHECK(rec.train_size == n + static_cast<std::size_t>(k) * 5);
    CHECK(rec.pool_size == 20 - static_cast<std::size_t>(k) * 5);
  }
  CHECK_THROWS_AS(iterate_select(s.state, s.cfg), PoolExhausted);
}

TEST_CASE("selected uids match the score-then-sort oracle under NegEnergy") {
  Setup s(30);
  s.cfg.scorer = ScorerKind::NegEnergy;
  // Score with the pre-iteration model: score first, fine-tune last.
  std::vector<CertaintyScore> scores;
  for (const Example& ex : s.state.pool)
    scores.push_back(score_negative_energy(forward(s.state.model, ex.features), ex.uid));
  const auto want = oracles::sort_rank(scores, s.cfg.selection_size, false);
  const IterationRecord rec = iterate_select(s.state, s.cfg);
  CHECK(rec.selected_uids == want);
}

TEST_CASE("select preserves disjointness and conserves examples") {
  Setup s(23);
  const std::size_t total = s.state.train_set.size() + s.state.pool.size();
  while (!s.state.pool.empty()) {
    iterate_select(s.state, s.cfg);
    const auto train_uids = uid_set(s.state.train_set);
    const auto pool_uids = uid_set(s.state.pool);
    CHECK(train_uids.size() == s.state.train_set.size());
    CHECK(pool_uids.size() == s.state.pool.size());
    std::vector<std::uint64_t> overlap;
    std::set_intersection(train_uids.begin(), train_uids.end(), pool_uids.begin(),
                          pool_uids.end(), std::back_inserter(overlap));
    CHECK(overlap.empty());
    CHECK(s.state.train_set.size() + s.state.pool.size() == total);
  }
  // Short tail: 23 = 4*5 + 3, so the last call took only 3.
  CHECK(s.state.iteration == 5);
}

TEST_CASE("iterate_remove deletes L and selects up to L at random") {
  Setup s(40);
  const std::size_t total = s.state.train_set.size() + s.state.pool.size();
  std::size_t removed_total = 0;
  const IterationRecord rec = iterate_remove(s.state, s.cfg);
  CHECK(rec.removed_uids.size() == 5);
  CHECK(rec.selected_uids.size() == 5);
  CHECK(rec.pool_size == 30);
  removed_total += rec.removed_uids.size();

  // Removed and selected never overlap inside one iteration.
  std::set<std::uint64_t> removed(rec.removed_uids.begin(), rec.removed_uids.end());
  for (std::uint64_t uid : rec.selected_uids) CHECK(!removed.contains(uid));

  // Removed examples leave the universe: train + pool + removed = total.
  CHECK(s.state.train_set.size() + s.state.pool.size() + removed_total == total);
}

TEST_CASE("removal follows the top-certainty oracle under NegEnergy") {
  Setup s(25);
  s.cfg.scorer = ScorerKind::NegEnergy;
  std::vector<CertaintyScore> scores;
  for (const Example& ex : s.state.pool)
    scores.push_back(score_negative_energy(forward(s.state.model, ex.features), ex.uid));
  const auto want = oracles::sort_rank(scores, s.cfg.selection_size, true);
  const IterationRecord rec = iterate_remove(s.state, s.cfg);
  CHECK(rec.removed_uids == want);
}

TEST_CASE("an 8L pool is used up by remove after the 4th iteration") {
  for (ScorerKind kind : {ScorerKind::NegEnergy, ScorerKind::Random}) {
    Setup s(40);  // 8 * L with L = 5
    s.cfg.scorer = kind;
    std::vector<std::size_t> pool_sizes;
    while (!s.state.pool.empty()) pool_sizes.push_back(iterate_remove(s.state, s.cfg).pool_size);
    CHECK(pool_sizes == std::vector<std::size_t>{30, 20, 10, 0});
  }
}

TEST_CASE("exploitation-only removal takes the smallest surviving scores") {
  Setup s(25);
  s.cfg.scorer = ScorerKind::NegEnergy;
  s.cfg.remove_exploit = true;
  std::vector<CertaintyScore> scores;
  for (const Example& ex : s.state.pool)
    scores.push_back(score_negative_energy(forward(s.state.model, ex.features), ex.uid));
  const auto removed = oracles::sort_rank(scores, s.cfg.selection_size, true);
  std::set<std::uint64_t> gone(removed.begin(), removed.end());
  std::vector<CertaintyScore> survivors;
  for (const auto& sc : scores)
    if (!gone.contains(sc.uid)) survivors.push_back(sc);
  const auto want = oracles::sort_rank(survivors, s.cfg.selection_size, false);

  const IterationRecord rec = iterate_remove(s.state, s.cfg);
  CHECK(rec.removed_uids == removed);
  CHECK(rec.selected_uids == want);
}

TEST_CASE("run_al with K = 0 returns only the baseline record") {
  Rng rng(60);
  Dataset seed;
  seed.name = "seed";
  seed.examples = random_examples(rng, 16, 3, 0);
  Dataset pool;
  pool.name = "pool";
  pool.examples = random_examples(rng, 10, 3, 100);
  const Dataset test = tiny_test_set("t", rng, 500);

  ALConfig cfg;
  cfg.iterations = 0;
  cfg.input_dim = 3;
  cfg.hidden_widths = {4};
  cfg.embedding_index = 0;
  cfg.seed_epochs = 2;
  const RunRecord run = run_al(seed, pool, cfg, {test});
  REQUIRE(run.iterations.size() == 1);
  CHECK(run.iterations[0].iteration == 0);
  CHECK(run.iterations[0].train_size == 16);
  CHECK(run.iterations[0].pool_size == 10);
  REQUIRE(run.iterations[0].eers.size() == 1);
  CHECK(run.iterations[0].eers[0].first == "t");
}

TEST_CASE("exhausting the pool yields the same final train set for every scorer") {
  Rng rng(61);
  Dataset seed;
  seed.examples = random_examples(rng, 12, 3, 0);
  Dataset pool;
  pool.examples = random_examples(rng, 15, 3, 100);

  ALConfig cfg;
  cfg.selection_size = 5;
  cfg.iterations = 3;
  cfg.epochs_per_iter = 1;
  cfg.seed_epochs = 2;
  cfg.input_dim = 3;
  cfg.hidden_widths = {4};
  cfg.embedding_index = 0;
  cfg.adv.num_references = 4;

  std::set<std::uint64_t> want = uid_set(seed.examples);
  for (const auto& e : pool.examples) want.insert(e.uid);

  for (ScorerKind kind : {ScorerKind::NegEnergy, ScorerKind::AdvDistance, ScorerKind::Random,
                          ScorerKind::PosEnergy}) {
    cfg.scorer = kind;
    const RunRecord run = run_al(seed, pool, cfg, {});
    CHECK(run.iterations.back().pool_size == 0);
    CHECK(run.iterations.back().train_size == want.size());

    // Rebuild the final train membership from the uid logs.
    std::set<std::uint64_t> got = uid_set(seed.examples);
    for (const auto& rec : run.iterations)
      for (std::uint64_t uid : rec.selected_uids) got.insert(uid);
    CHECK(got == want);
  }
}

TEST_CASE("run_al is reproducible per seed and varies across seeds") {
  Rng rng(62);
  Dataset seed;
  seed.examples = random_examples(rng, 12, 3, 0);
  Dataset pool;
  pool.examples = random_examples(rng, 30, 3, 100);

  ALConfig cfg;
  cfg.selection_size = 5;
  cfg.iterations = 3;
  cfg.epochs_per_iter = 1;
  cfg.seed_epochs = 2;
  cfg.scorer = ScorerKind::Random;
  cfg.input_dim = 3;
  cfg.hidden_widths = {4};
  cfg.embedding_index = 0;

  cfg.seed = 100;
  const RunRecord a = run_al(seed, pool, cfg, {});
  const RunRecord b = run_al(seed, pool, cfg, {});
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i)
    CHECK(a.iterations[i].selected_uids == b.iterations[i].selected_uids);

  cfg.seed = 101;
  const RunRecord c = run_al(seed, pool, cfg, {});
  bool any_difference = false;
  for (std::size_t i = 0; i < a.iterations.size(); ++i)
    if (a.iterations[i].selected_uids != c.iterations[i].selected_uids) any_difference = true;
  CHECK(any_difference);
}

TEST_CASE("the observer sees every iteration including the baseline") {
  Rng rng(63);
  Dataset seed;
  seed.examples = random_examples(rng, 12, 3, 0);
  Dataset pool;
  pool.examples = random_examples(rng, 10, 3, 100);

  ALConfig cfg;
  cfg.selection_size = 5;
  cfg.iterations = 2;
  cfg.epochs_per_iter = 1;
  cfg.seed_epochs = 1;
  cfg.input_dim = 3;
  cfg.hidden_widths = {4};
  cfg.embedding_index = 0;

  std::vector<int> seen;
  run_al(seed, pool, cfg, {}, [&seen](const IterationRecord& rec, const Classifier& model) {
    seen.push_back(rec.iteration);
    CHECK(model.input_dim() == 3);
  });
  CHECK(seen == std::vector<int>{0, 1, 2});
}

TEST_CASE("system names combine scorer and algorithm") {
  CHECK(system_name(ScorerKind::NegEnergy, AlgorithmKind::Select) == "neg-energy");
  CHECK(system_name(ScorerKind::Random, AlgorithmKind::Remove) == "remove-random");
  CHECK(algorithm_from_string("select") == AlgorithmKind::Select);
  CHECK(algorithm_from_string("remove") == AlgorithmKind::Remove);
  CHECK_THROWS_AS(algorithm_from_string("prune"), std::invalid_argument);
}

TEST_CASE("run_al rejects an empty seed set") {
  Dataset seed, pool;
  ALConfig cfg;
  CHECK_THROWS_AS(run_al(seed, pool, cfg, {}), std::invalid_argument);
}
