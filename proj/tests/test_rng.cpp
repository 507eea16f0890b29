#include <doctest.h>

#include <cmath>
#include <vector>

#include "augscale/rng.hpp"

using namespace augscale;

TEST_CASE("identical (seed, stream) replays identical sequences") {
    RngStream a(123, 456);
    RngStream b(123, 456);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_float() == b.next_float());
}

TEST_CASE("distinct streams differ and stay independent-looking") {
    RngStream a(123, 1);
    RngStream b(123, 2);
    int same = 0;
    for (int i = 0; i < 1000; ++i)
        if (a.next_u32() == b.next_u32()) ++same;
    CHECK(same < 3);
}

TEST_CASE("uniform mean over 1e6 draws") {
    RngStream rng(2024, 9);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += rng.next_float();
    CHECK(std::abs(sum / n - 0.5) < 0.002);
}

TEST_CASE("gaussian sample std over 1e6 draws") {
    RngStream rng(2024, 10);
    const int n = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double stdev = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(stdev - 1.0) < 0.005);
    CHECK(std::abs(mean) < 0.005);
}

TEST_CASE("split derives reproducible children") {
    RngStream root(7, 0);
    RngStream c1 = root.split(42);
    RngStream c2 = root.split(42);
    RngStream c3 = root.split(43);
    CHECK(c1.next_u32() == c2.next_u32());
    RngStream c1b = root.split(42);
    int same = 0;
    for (int i = 0; i < 100; ++i)
        if (c1b.next_u32() == c3.next_u32()) ++same;
    CHECK(same < 3);
}

TEST_CASE("next_below stays in range and covers it") {
    RngStream rng(5, 5);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto v = rng.next_below(10);
        REQUIRE(v < 10);
        counts[v]++;
    }
    for (int c : counts) CHECK(c > 800);
}
