#include <cmath>
#include <numeric>

#include "doctest.h"
#include "pwc/rng.hpp"

using namespace pwc;

TEST_CASE("rng is deterministic in the seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform stays in [0, 1)") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("seed zero produces a usable stream") {
  Rng rng(0);
  std::uint64_t x = rng.next_u64();
  CHECK(x != 0);
  CHECK(x != rng.next_u64());
}

TEST_CASE("gaussian has roughly unit variance and bounded support") {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    REQUIRE(std::fabs(g) <= 6.0);
    sum += g;
    sq += g * g;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_int respects its bound") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    CHECK(rng.uniform_int(7) < 7);
  }
}

TEST_CASE("shuffle permutes") {
  Rng rng(5);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
  CHECK(v != sorted);  // 1/100! odds of failing
}

TEST_CASE("derived stream seeds differ per stream") {
  CHECK(derive_seed(1, kStreamData) != derive_seed(1, kStreamInit));
  CHECK(derive_seed(1, kStreamData) != derive_seed(2, kStreamData));
  CHECK(derive_seed(1, kStreamData) == derive_seed(1, kStreamData));
}
