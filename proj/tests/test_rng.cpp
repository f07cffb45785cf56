#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "riskmap/rng.hpp"

using namespace riskmap;

TEST_CASE("derive_seed is deterministic and stream-sensitive", "[rng]") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 20; ++s) {
        for (std::uint64_t t = 0; t < 20; ++t) seen.insert(derive_seed(s, t));
    }
    CHECK(seen.size() == 400);
}

TEST_CASE("identically seeded generators agree draw for draw", "[rng]") {
    Rng a(42), b(42);
    for (int i = 0; i < 200; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.normal() == b.normal());
        CHECK(a.uniform_index(17) == b.uniform_index(17));
    }
}

TEST_CASE("uniform stays in [0,1) and fills the range", "[rng]") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("normal draws have the requested moments", "[rng]") {
    Rng rng(12345);
    const int n = 20000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(3.0, 2.0);
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 3.0) < 0.05);
    CHECK(std::abs(std::sqrt(var) - 2.0) < 0.05);
}

TEST_CASE("uniform_index is bounded and covers all buckets", "[rng]") {
    Rng rng(9);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i) {
        const std::size_t k = rng.uniform_index(5);
        REQUIRE(k < 5);
        ++counts[k];
    }
    for (const int c : counts) CHECK(c > 800);
}

TEST_CASE("bernoulli respects degenerate probabilities", "[rng]") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        CHECK_FALSE(rng.bernoulli(0.0));
        CHECK(rng.bernoulli(1.0));
    }
}

TEST_CASE("categorical never draws zero-probability buckets", "[rng]") {
    Rng rng(5);
    const std::vector<double> probs = {0.5, 0.5, 0.0};
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 4000; ++i) ++counts[rng.categorical(probs)];
    CHECK(counts[2] == 0);
    CHECK(counts[0] > 1500);
    CHECK(counts[1] > 1500);
}

TEST_CASE("shuffle is a seeded permutation", "[rng]") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;
    Rng a(99), b(99);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(50);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sorted == expect);
    CHECK(v != expect); // identity permutation has probability 1/50!
}
