#include "memcomp/memory_store.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

using namespace memcomp;

namespace {

BitVector random_vector(std::mt19937_64& rng, int dim) {
  Eigen::VectorXi bits(dim);
  for (int j = 0; j < dim; ++j) bits[j] = static_cast<int>(rng() & 1u);
  return BitVector(std::move(bits));
}

MemoryStore two_value_store() {
  // Six copies of (0,0) and four of (0,1).
  MemoryStore store(2);
  for (int i = 0; i < 6; ++i) store.record(BitVector{0, 0});
  for (int i = 0; i < 4; ++i) store.record(BitVector{0, 1});
  return store;
}

}  // namespace

TEST_CASE("record counts occurrences") {
  MemoryStore store(2);
  store.record(BitVector{0, 1});
  CHECK(store.size() == 1);
  CHECK(store.count(BitVector{0, 1}) == 1);
  store.record(BitVector{0, 1});
  CHECK(store.count(BitVector{0, 1}) == 2);
  CHECK_THROWS_AS(store.record(BitVector{0, 1, 0}), std::domain_error);
}

TEST_CASE("record matches an independent tally over 1000 draws") {
  std::mt19937_64 rng(41);
  MemoryStore store(3);
  std::map<BitVector, std::size_t> tally;
  for (int i = 0; i < 1000; ++i) {
    const BitVector v = random_vector(rng, 3);
    store.record(v);
    ++tally[v];
  }
  CHECK(store.size() == 1000);
  CHECK(store.counts() == tally);
}

TEST_CASE("capacity evicts the oldest record first") {
  MemoryStore store(2, 3);
  for (int i = 0; i < 5; ++i) store.record(BitVector::from_index(static_cast<std::uint64_t>(i % 4), 2));
  CHECK(store.size() == 3);
  CHECK(store.records().front().seq == 3);
  CHECK(store.records().back().seq == 5);
}

TEST_CASE("exact_probability") {
  const MemoryStore store = two_value_store();
  CHECK(store.exact_probability(BitVector{0, 0}) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(store.exact_probability(BitVector{1, 1}) == 0.0);
  MemoryStore empty(2);
  CHECK_THROWS_AS(empty.exact_probability(BitVector{0, 0}), std::domain_error);
}

TEST_CASE("exact probabilities sum to one over distinct values") {
  std::mt19937_64 rng(5);
  MemoryStore store(4);
  for (int i = 0; i < 500; ++i) store.record(random_vector(rng, 4));
  double sum = 0.0;
  for (const auto& [value, count] : store.counts()) sum += store.exact_probability(value);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("neighbor_distances worked values") {
  MemoryStore store(2);
  store.record(BitVector{0, 0});
  CHECK(store.neighbor_distances(BitVector{0, 0}).front() == 0.0);

  store.record(BitVector{1, 1});
  const auto distances = store.neighbor_distances(BitVector{0, 0});
  REQUIRE(distances.size() == 2);
  CHECK(distances[0] == 0.0);
  CHECK(distances[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  MemoryStore store3(3);
  store3.record(BitVector{0, 0, 0});
  store3.record(BitVector{0, 1, 0});
  store3.record(BitVector{1, 1, 1});
  const auto d3 = store3.neighbor_distances(BitVector{0, 0, 0});
  REQUIRE(d3.size() == 3);
  CHECK(d3[0] == 0.0);
  CHECK(d3[1] == 1.0);
  CHECK(d3[2] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("neighbor_distances is sorted and covers every record") {
  std::mt19937_64 rng(9);
  MemoryStore store(5);
  for (int i = 0; i < 200; ++i) store.record(random_vector(rng, 5));
  const auto distances = store.neighbor_distances(random_vector(rng, 5));
  CHECK(distances.size() == store.size());
  CHECK(std::is_sorted(distances.begin(), distances.end()));
}

TEST_CASE("lattice_ball_size") {
  CHECK(lattice_ball_size(2, 0.0) == 1);
  CHECK(lattice_ball_size(3, 1.0) == 4);
  CHECK(lattice_ball_size(10, std::sqrt(2.0)) == 56);
  CHECK(lattice_ball_size(3, std::sqrt(3.0)) == 8);
  CHECK(lattice_ball_size(6, 100.0) == 64);
  // Non-decreasing in the radius.
  std::uint64_t previous = 0;
  for (int h = 0; h <= 12; ++h) {
    const std::uint64_t size = lattice_ball_size(12, std::sqrt(static_cast<double>(h)));
    CHECK(size >= previous);
    previous = size;
  }
  CHECK(previous == std::uint64_t{1} << 12);
}

TEST_CASE("smoothed_probability worked values") {
  const MemoryStore store = two_value_store();
  CHECK(store.smoothed_probability(BitVector{0, 0}, {1}) == doctest::Approx(0.6).epsilon(1e-12));

  MemoryStore single(3);
  for (int i = 0; i < 10; ++i) single.record(BitVector{1, 0, 1});
  CHECK(single.smoothed_probability(BitVector{1, 0, 1}, {1}) == 1.0);
  // Any neighborhood size up to N gives the same answer when every record
  // equals the query.
  CHECK(single.smoothed_probability(BitVector{1, 0, 1}, {5}) == 1.0);
  CHECK(single.smoothed_probability(BitVector{1, 0, 1}, {10}) == 1.0);

  // n = 6 reaches past the five records at distance zero; the radius-1 ball
  // holds three lattice points and all ten records.
  MemoryStore mixed(2);
  for (int i = 0; i < 5; ++i) mixed.record(BitVector{0, 0});
  for (int i = 0; i < 5; ++i) mixed.record(BitVector{0, 1});
  CHECK(mixed.smoothed_probability(BitVector{0, 0}, {6}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("smoothed_probability invariants") {
  std::mt19937_64 rng(17);
  MemoryStore store(4);
  for (int i = 0; i < 64; ++i) store.record(random_vector(rng, 4));
  for (int trial = 0; trial < 50; ++trial) {
    const BitVector query = random_vector(rng, 4);
    const double p = store.smoothed_probability(query, {1 + static_cast<int>(rng() % 10)});
    CHECK(p > 0.0);
  }
  // With the query recorded and n = 1 the radius collapses to zero and the
  // smoothed value equals the exact frequency.
  const BitVector recorded = store.records().front().vector;
  CHECK(store.smoothed_probability(recorded, {1}) == store.exact_probability(recorded));
  CHECK_THROWS_AS(store.smoothed_probability(recorded, {1000}), std::domain_error);
  CHECK_THROWS_AS(store.smoothed_probability(recorded, {0}), std::domain_error);
}

TEST_CASE("prune keeps the most recent records") {
  MemoryStore store(2);
  for (int i = 0; i < 10; ++i) store.record(BitVector::from_index(static_cast<std::uint64_t>(i % 4), 2));
  MemoryStore same = store;
  same.prune(10);
  CHECK(same.size() == 10);
  CHECK(same.records().front().seq == 1);

  store.prune(4);
  CHECK(store.size() == 4);
  CHECK(store.records().front().seq == 7);
  CHECK(store.records().back().seq == 10);
  std::map<BitVector, std::size_t> tally;
  for (const auto& record : store.records()) ++tally[record.vector];
  CHECK(store.counts() == tally);
  CHECK_THROWS_AS(store.prune(0), std::domain_error);
}

TEST_CASE("counts stay consistent under random record and prune sequences") {
  std::mt19937_64 rng(23);
  MemoryStore store(3);
  for (int op = 0; op < 10000; ++op) {
    if (store.empty() || rng() % 8 != 0) {
      store.record(random_vector(rng, 3));
    } else {
      store.prune(1 + rng() % store.size());
    }
    if (op % 100 == 0) {
      std::size_t total = 0;
      for (const auto& [value, count] : store.counts()) total += count;
      REQUIRE(total == store.size());
    }
  }
  std::size_t total = 0;
  for (const auto& [value, count] : store.counts()) total += count;
  CHECK(total == store.size());
}

TEST_CASE("store file round trip") {
  MemoryStore empty(4);
  std::stringstream buffer;
  empty.save(buffer);
  const MemoryStore reloaded_empty = MemoryStore::load(buffer);
  CHECK(reloaded_empty.empty());
  CHECK(reloaded_empty.dim() == 4);

  std::mt19937_64 rng(29);
  MemoryStore store(6);
  for (int i = 0; i < 1000; ++i) store.record(random_vector(rng, 6));
  std::stringstream text;
  store.save(text);
  const MemoryStore reloaded = MemoryStore::load(text);
  REQUIRE(reloaded.size() == store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    CHECK(reloaded.records()[i].seq == store.records()[i].seq);
    CHECK(reloaded.records()[i].vector == store.records()[i].vector);
  }
  CHECK(reloaded.counts() == store.counts());
}

TEST_CASE("load rejects malformed input with a line number") {
  {
    std::stringstream text("memstore v2 dim=3\n");
    CHECK_THROWS_AS(MemoryStore::load(text), ParseError);
  }
  {
    // Record truncated mid-bits.
    std::stringstream text("memstore v1 dim=4\n1\t0110\n2\t01");
    try {
      MemoryStore::load(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  {
    std::stringstream text("memstore v1 dim=2\n2\t01\n1\t10\n");
    try {
      MemoryStore::load(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  {
    std::stringstream text("memstore v1 dim=2\nx\t01\n");
    CHECK_THROWS_AS(MemoryStore::load(text), ParseError);
  }
}
