#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "hgl/rng.hpp"

using hgl::Rng;

TEST_CASE("named streams are deterministic and independent") {
  Rng a = Rng::stream(42, "aug");
  Rng b = Rng::stream(42, "aug");
  Rng c = Rng::stream(42, "train");
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff = any_diff || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("next_below stays in range") {
  Rng rng(7);
  for (int n : {1, 2, 3, 17, 1000}) {
    for (int i = 0; i < 200; ++i) {
      CHECK(rng.next_below(n) < static_cast<std::uint64_t>(n));
    }
  }
}

TEST_CASE("sample_without_replacement returns k distinct ascending indices") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + rng.next_int(40);
    const int k = rng.next_int(n + 1);
    const auto s = rng.sample_without_replacement(n, k);
    REQUIRE(static_cast<int>(s.size()) == k);
    std::set<int> seen(s.begin(), s.end());
    CHECK(static_cast<int>(seen.size()) == k);
    for (int v : s) CHECK((v >= 0 && v < n));
    CHECK(std::is_sorted(s.begin(), s.end()));
  }
}

TEST_CASE("gaussian draws have roughly standard moments") {
  Rng rng(3);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}
