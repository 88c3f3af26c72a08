#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "alpool/rng.hpp"

using alpool::Rng;

TEST_CASE("same seed reproduces the identical stream") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0,1) and has the right first two moments") {
  Rng rng(7);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.05));
}

TEST_CASE("gaussian has roughly standard moments") {
  Rng rng(11);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1).scale(0.02));
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("fork gives an independent stream without consuming parent state") {
  Rng a(5);
  Rng b(5);
  Rng fa = a.fork(17);
  // Forking did not advance the parent.
  CHECK(a.next_u64() == b.next_u64());
  // The fork depends only on (seed, salt).
  Rng fb = b.fork(17);
  for (int i = 0; i < 20; ++i) CHECK(fa.next_u64() == fb.next_u64());
  // Different salts give different streams.
  Rng fc = b.fork(18);
  Rng fd = b.fork(17);
  CHECK(fc.next_u64() != fd.next_u64());
}

TEST_CASE("uniform_index covers the range and rejects zero") {
  Rng rng(3);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t v = rng.uniform_index(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("shuffle is a permutation and is seed deterministic") {
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  std::vector<int> w = v;
  Rng a(9), b(9);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("sample_without_replacement draws distinct in-range indices") {
  Rng rng(21);
  const auto s = rng.sample_without_replacement(10, 6);
  REQUIRE(s.size() == 6);
  std::set<std::size_t> uniq(s.begin(), s.end());
  CHECK(uniq.size() == 6);
  for (auto i : s) CHECK(i < 10);

  const auto all = Rng(4).sample_without_replacement(5, 5);
  std::set<std::size_t> cover(all.begin(), all.end());
  CHECK(cover.size() == 5);

  CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), std::invalid_argument);
}

TEST_CASE("splitmix64 matches the published test vector") {
  // First output of Vigna's splitmix64 reference for state 0.
  CHECK(Rng::splitmix64(0) == 0xe220a8397b1dcdafull);
}
