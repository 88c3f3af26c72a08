#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "alpool/errors.hpp"
#include "alpool/synthdata.hpp"

using namespace alpool;
namespace fs = std::filesystem;

namespace {

ClusterSpec blob(std::vector<double> mean, double sigma, Label label, int source,
                 std::size_t count, Destination dest) {
  ClusterSpec c;
  c.mean = std::move(mean);
  c.cov_scale = sigma;
  c.label = label;
  c.source_id = source;
  c.count = count;
  c.destination = dest;
  return c;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("alpool_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::set<std::uint64_t> uids(const Dataset& d) {
  std::set<std::uint64_t> s;
  for (const auto& e : d.examples) s.insert(e.uid);
  return s;
}

}  // namespace

TEST_CASE("cluster counts carry through to the generated sets") {
  ScenarioSpec spec;
  spec.dim = 2;
  spec.seed = 3;
  spec.clusters.push_back(blob({1.0, 0.0}, 0.5, Label::BonaFide, 1, 10, Destination::Seed));
  spec.clusters.push_back(blob({-1.0, 0.0}, 0.5, Label::Spoof, 1, 90, Destination::Seed));
  const Scenario sc = make_scenario(spec);
  CHECK(sc.seed_set.size() == 100);
  CHECK(sc.seed_set.count(Label::BonaFide) == 10);
  CHECK(sc.seed_set.count(Label::Spoof) == 90);
  CHECK(sc.pool_a.empty());
}

TEST_CASE("generation is bit-identical per seed") {
  const ScenarioSpec spec = default_paper_analogue(5);
  const Scenario a = make_scenario(spec);
  const Scenario b = make_scenario(spec);
  REQUIRE(a.seed_set.size() == b.seed_set.size());
  for (std::size_t i = 0; i < a.seed_set.size(); ++i) {
    CHECK(a.seed_set.examples[i].uid == b.seed_set.examples[i].uid);
    CHECK(a.seed_set.examples[i].features == b.seed_set.examples[i].features);
  }
  const Scenario c = make_scenario(default_paper_analogue(6));
  CHECK(a.seed_set.examples[0].features != c.seed_set.examples[0].features);
}

TEST_CASE("sample means land within 4 sigma / sqrt(n) of the cluster mean") {
  const double sigma = 0.7;
  const std::size_t n = 1000;
  ScenarioSpec spec;
  spec.dim = 3;
  spec.seed = 11;
  spec.clusters.push_back(blob({2.0, -1.0, 0.5}, sigma, Label::BonaFide, 1, n, Destination::Seed));
  const Scenario sc = make_scenario(spec);
  REQUIRE(sc.seed_set.size() == n);
  const double bound = 4.0 * sigma / std::sqrt(static_cast<double>(n));
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (const auto& e : sc.seed_set.examples) mean += e.features[d];
    mean /= static_cast<double>(n);
    CHECK(std::fabs(mean - spec.clusters[0].mean[d]) < bound);
  }
}

TEST_CASE("degenerate specs are rejected") {
  ScenarioSpec spec;
  spec.dim = 2;
  spec.clusters.push_back(blob({0.0, 0.0}, 0.0, Label::BonaFide, 1, 5, Destination::Seed));
  CHECK_THROWS_AS(make_scenario(spec), std::invalid_argument);

  spec.clusters[0].cov_scale = 1.0;
  spec.clusters[0].count = 0;
  CHECK_THROWS_AS(make_scenario(spec), std::invalid_argument);

  spec.clusters[0].count = 5;
  spec.clusters[0].mean = {0.0};  // wrong dimension
  CHECK_THROWS_AS(make_scenario(spec), std::invalid_argument);

  spec.clusters[0].mean = {0.0, 0.0};
  spec.clusters[0].source_id = -1;
  CHECK_THROWS_AS(make_scenario(spec), std::invalid_argument);

  spec.clusters.clear();
  CHECK_THROWS_AS(make_scenario(spec), std::invalid_argument);
}

TEST_CASE("the default scenario matches its size contract") {
  const ScenarioSpec spec = default_paper_analogue(7);
  const Scenario sc = make_scenario(spec);

  // Seed ratio about 1:9 bona to spoof.
  const double ratio = static_cast<double>(sc.seed_set.count(Label::Spoof)) /
                       static_cast<double>(sc.seed_set.count(Label::BonaFide));
  CHECK(ratio > 8.0);
  CHECK(ratio < 10.0);

  // |pool_A| is exactly K*L for the default loop (L=19, K=8).
  CHECK(sc.pool_a.size() == 152);

  // pool_B has at least one source absent from pool_A and the seed set.
  std::set<int> known;
  for (const auto& e : sc.seed_set.examples) known.insert(e.source_id);
  for (const auto& e : sc.pool_a.examples) known.insert(e.source_id);
  bool unseen = false;
  for (const auto& e : sc.pool_b.examples)
    if (!known.contains(e.source_id)) unseen = true;
  CHECK(unseen);

  // test_shift draws only from sources the seed set never saw.
  std::set<int> seed_sources;
  for (const auto& e : sc.seed_set.examples) seed_sources.insert(e.source_id);
  for (const auto& e : sc.test_shift.examples) CHECK(!seed_sources.contains(e.source_id));

  // Both test sets contain both classes.
  for (const Dataset* t : {&sc.test_in, &sc.test_shift}) {
    CHECK(t->count(Label::BonaFide) > 0);
    CHECK(t->count(Label::Spoof) > 0);
  }

  // class_counts agrees with the materialized sets.
  const auto [pb, ps] = class_counts(spec, Destination::PoolB);
  CHECK(pb == sc.pool_b.count(Label::BonaFide));
  CHECK(ps == sc.pool_b.count(Label::Spoof));

  // All five sets are uid-disjoint.
  std::set<std::uint64_t> all;
  std::size_t total = 0;
  for (const Dataset* d : {&sc.seed_set, &sc.pool_a, &sc.pool_b, &sc.test_in, &sc.test_shift}) {
    const auto u = uids(*d);
    CHECK(u.size() == d->size());
    all.insert(u.begin(), u.end());
    total += d->size();
  }
  CHECK(all.size() == total);
}

TEST_CASE("datasets round-trip through save and load") {
  TempDir tmp;
  Dataset d;
  d.name = "roundtrip";
  for (int i = 0; i < 3; ++i) {
    Example e;
    e.uid = static_cast<std::uint64_t>(i * 7);
    e.source_id = i;
    e.label = i % 2 == 0 ? Label::BonaFide : Label::Spoof;
    e.features = {0.1 * i, -1.0 / 3.0 * i, 1e-17 + i};
    d.examples.push_back(std::move(e));
  }
  const std::string path = tmp.file("d.csv");
  save_dataset(d, path);
  const Dataset back = load_dataset(path);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.examples[i].uid == d.examples[i].uid);
    CHECK(back.examples[i].source_id == d.examples[i].source_id);
    CHECK(back.examples[i].label == d.examples[i].label);
    CHECK(back.examples[i].features == d.examples[i].features);  // bit-exact
  }
}

TEST_CASE("a duplicate uid in a file is an integrity error naming the uid") {
  TempDir tmp;
  const std::string path = tmp.file("dup.csv");
  std::ofstream(path) << "# D=2\n5,0,bonafide,1,2\n5,0,spoof,3,4\n";
  try {
    load_dataset(path);
    FAIL("expected IntegrityError");
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find("5") != std::string::npos);
  }
}

TEST_CASE("an empty file loads as an empty dataset") {
  TempDir tmp;
  const std::string path = tmp.file("empty.csv");
  std::ofstream(path).close();
  const Dataset d = load_dataset(path);
  CHECK(d.empty());
}

TEST_CASE("malformed rows are parse errors carrying the line number") {
  TempDir tmp;
  const std::string path = tmp.file("bad.csv");
  std::ofstream(path) << "# D=2\n1,0,bonafide,1,2\n2,0,mystery,3,4\n";
  try {
    load_dataset(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }

  const std::string short_row = tmp.file("short.csv");
  std::ofstream(short_row) << "# D=3\n1,0,bonafide,1,2\n";
  CHECK_THROWS_AS(load_dataset(short_row), ParseError);

  const std::string bad_float = tmp.file("badfloat.csv");
  std::ofstream(bad_float) << "# D=1\n1,0,spoof,zap\n";
  CHECK_THROWS_AS(load_dataset(bad_float), ParseError);

  const std::string no_header = tmp.file("nohdr.csv");
  std::ofstream(no_header) << "1,0,spoof,0.5\n";
  CHECK_THROWS_AS(load_dataset(no_header), ParseError);
}

TEST_CASE("validate_dataset flags duplicates and bad features") {
  Dataset d;
  d.name = "v";
  Example a;
  a.uid = 1;
  a.features = {1.0};
  d.examples.push_back(a);
  d.examples.push_back(a);  // duplicate uid
  CHECK_THROWS_AS(validate_dataset(d), IntegrityError);

  d.examples[1].uid = 2;
  d.examples[1].features = {std::nan("")};
  CHECK_THROWS_AS(validate_dataset(d), std::invalid_argument);

  d.examples[1].features = {1.0, 2.0};  // dimension mismatch
  CHECK_THROWS_AS(validate_dataset(d), std::invalid_argument);

  d.examples[1].features = {2.0};
  CHECK_NOTHROW(validate_dataset(d));
}

TEST_CASE("the saved file starts with the dimension header") {
  TempDir tmp;
  Dataset d;
  d.name = "hdr";
  Example e;
  e.uid = 0;
  e.features = {1.5, -2.5};
  d.examples.push_back(e);
  const std::string path = tmp.file("h.csv");
  save_dataset(d, path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "# D=2");
}
