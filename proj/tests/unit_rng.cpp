#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "slt/rng.hpp"

using slt::RngStream;

TEST_CASE("same key gives the same draws, independent of sibling activity") {
  RngStream a = RngStream(42).fork("augment").fork("sample-7").fork(std::uint64_t{3});
  RngStream b = RngStream(42).fork("augment").fork("sample-7").fork(std::uint64_t{3});
  // consume from an unrelated sibling first
  RngStream sibling = RngStream(42).fork("augment").fork("sample-8").fork(std::uint64_t{3});
  sibling.next_u64();
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("forks with different labels decorrelate") {
  RngStream root(7);
  RngStream a = root.fork("a");
  RngStream b = root.fork("b");
  int equal = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("next_below is in range and roughly uniform") {
  RngStream rng(3);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 100000; ++i) {
    const std::uint64_t v = rng.next_below(10);
    REQUIRE(v < 10);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
}

TEST_CASE("normal draws have the requested moments") {
  RngStream rng(5);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal(2.0);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation") {
  RngStream rng(9);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(v);
  std::set<int> seen(v.begin(), v.end());
  CHECK(seen.size() == 8);
}
