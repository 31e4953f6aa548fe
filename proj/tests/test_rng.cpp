#include <doctest.h>

#include <cmath>
#include <set>

#include "droneq/rng.hpp"

using namespace droneq;

TEST_CASE("splitmix64 matches the reference stream for seed 0") {
    std::uint64_t s = 0;
    CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
    CHECK(splitmix64(s) == 0x06c45d188009454fULL);
}

TEST_CASE("identical seeds give identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int differing = 0;
    for (int i = 0; i < 16; ++i) differing += a.next_u64() != b.next_u64();
    CHECK(differing > 12);
}

TEST_CASE("uniform01 stays in [0,1) and is centered") {
    Rng rng(7);
    double sum = 0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("uniform_int is bounded and hits every bucket") {
    Rng rng(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t v = rng.uniform_int(6);
        REQUIRE(v < 6);
        seen.insert(v);
    }
    CHECK(seen.size() == 6);
}

TEST_CASE("exponential has the requested mean") {
    Rng rng(13);
    double sum = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.exponential(0.5);
        REQUIRE(x > 0.0);
        sum += x;
    }
    CHECK(sum / n == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("substreams are reproducible and index-sensitive") {
    Rng a = Rng::substream(99, 3, 5);
    Rng b = Rng::substream(99, 3, 5);
    Rng c = Rng::substream(99, 5, 3);
    Rng d = Rng::substream(98, 3, 5);
    bool same_ab = true, same_ac = true, same_ad = true;
    for (int i = 0; i < 32; ++i) {
        const std::uint64_t va = a.next_u64();
        same_ab = same_ab && va == b.next_u64();
        same_ac = same_ac && va == c.next_u64();
        same_ad = same_ad && va == d.next_u64();
    }
    CHECK(same_ab);
    CHECK_FALSE(same_ac);
    CHECK_FALSE(same_ad);
}
