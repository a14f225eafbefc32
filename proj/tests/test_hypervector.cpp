#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hdfuzz/hypervector.hpp"
#include "hdfuzz/rng.hpp"

using namespace hdfuzz;

TEST_CASE("random_hv is bipolar, sized, deterministic", "[hv]") {
    RngStream a(31), b(31);
    const Hypervector x = random_hv(a, 1000);
    const Hypervector y = random_hv(b, 1000);
    REQUIRE(x.dim() == 1000);
    CHECK(x == y);
    for (std::int8_t e : x.elems) REQUIRE((e == 1 || e == -1));

    RngStream c(32);
    CHECK(random_hv(c, 1000) != x);
    CHECK_THROWS_AS(random_hv(a, 0), std::invalid_argument);
}

TEST_CASE("random_hv consumes one word per 64 elements", "[hv]") {
    RngStream a(5);
    (void)random_hv(a, 65); // 2 words
    RngStream b(5);
    b.next_u64();
    b.next_u64();
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("bind algebra", "[hv]") {
    RngStream rng(40);
    const Hypervector a = random_hv(rng, 512);
    const Hypervector b = random_hv(rng, 512);

    const Hypervector ab = bind(a, b);
    CHECK(ab == bind(b, a));
    for (std::size_t i = 0; i < a.dim(); ++i)
        REQUIRE(ab.elems[i] == a.elems[i] * b.elems[i]);

    // Self-binding is the identity element of the group {-1,+1}^D.
    const Hypervector aa = bind(a, a);
    for (std::int8_t e : aa.elems) REQUIRE(e == 1);
    // Binding is its own inverse.
    CHECK(bind(ab, b) == a);

    Hypervector short_hv;
    short_hv.elems.assign(8, 1);
    CHECK_THROWS_AS(bind(a, short_hv), std::invalid_argument);
}

TEST_CASE("bound vectors are pseudo-orthogonal to their factors", "[hv]") {
    RngStream rng(41);
    const Hypervector a = random_hv(rng, 10000);
    const Hypervector b = random_hv(rng, 10000);
    const Hypervector ab = bind(a, b);
    CHECK(std::abs(cosine(ab, a)) < 0.06);
    CHECK(std::abs(cosine(ab, b)) < 0.06);
}

TEST_CASE("negate flips every element", "[hv]") {
    RngStream rng(42);
    const Hypervector a = random_hv(rng, 256);
    const Hypervector n = negate(a);
    for (std::size_t i = 0; i < a.dim(); ++i) REQUIRE(n.elems[i] == -a.elems[i]);
    CHECK(cosine(a, n) == Catch::Approx(-1.0));
}

TEST_CASE("accumulate and bundle are exact integer sums", "[hv]") {
    RngStream rng(43);
    std::vector<Hypervector> vs;
    for (int i = 0; i < 5; ++i) vs.push_back(random_hv(rng, 128));

    AccumulatorVector sum = bundle(vs);
    for (std::size_t i = 0; i < 128; ++i) {
        int expect = 0;
        for (const auto& v : vs) expect += v.elems[i];
        REQUIRE(sum.elems[i] == expect);
    }

    // Order invariance.
    std::vector<Hypervector> shuffled = {vs[3], vs[0], vs[4], vs[2], vs[1]};
    CHECK(bundle(shuffled) == sum);

    AccumulatorVector acc(128);
    accumulate(acc, vs[0], 3);
    accumulate(acc, vs[1], -2);
    for (std::size_t i = 0; i < 128; ++i)
        REQUIRE(acc.elems[i] == 3 * vs[0].elems[i] - 2 * vs[1].elems[i]);

    CHECK_THROWS_AS(bundle(std::vector<Hypervector>{}), std::invalid_argument);
    Hypervector wrong;
    wrong.elems.assign(4, 1);
    CHECK_THROWS_AS(accumulate(acc, wrong), std::invalid_argument);
}

TEST_CASE("permute cycles elements", "[hv]") {
    RngStream rng(44);
    const Hypervector a = random_hv(rng, 100);

    const Hypervector p1 = permute(a, 1);
    for (std::size_t i = 0; i < 100; ++i) REQUIRE(p1.elems[(i + 1) % 100] == a.elems[i]);

    CHECK(permute(a, 0) == a);
    CHECK(permute(a, 100) == a);
    CHECK(permute(a, -1) == permute(a, 99));
    CHECK(permute(permute(a, 37), 63) == a);

    // The element multiset is preserved.
    auto sorted = [](Hypervector hv) {
        std::sort(hv.elems.begin(), hv.elems.end());
        return hv.elems;
    };
    CHECK(sorted(permute(a, 17)) == sorted(a));
}

TEST_CASE("bipolarize takes signs and draws for zeros in index order", "[hv]") {
    AccumulatorVector acc(std::vector<std::int32_t>{0, 5, 0, -3, 2000000, -2000000, 0});
    RngStream rng(77);
    RngStream clone = rng;
    const Hypervector hv = bipolarize(acc, rng);
    REQUIRE(hv.dim() == 7);
    CHECK(hv.elems[0] == clone.next_sign());
    CHECK(hv.elems[1] == 1);
    CHECK(hv.elems[2] == clone.next_sign());
    CHECK(hv.elems[3] == -1);
    CHECK(hv.elems[4] == 1);
    CHECK(hv.elems[5] == -1);
    CHECK(hv.elems[6] == clone.next_sign());
    // Exactly three draws were consumed.
    CHECK(rng.next_u64() == clone.next_u64());
}

TEST_CASE("cosine agrees with the definition and is bounded", "[hv]") {
    RngStream rng(45);
    const Hypervector a = random_hv(rng, 512);
    const Hypervector b = random_hv(rng, 512);

    CHECK(cosine(a, a) == Catch::Approx(1.0));
    const double c = cosine(a, b);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);

    std::int64_t dot = 0;
    for (std::size_t i = 0; i < 512; ++i) dot += a.elems[i] * b.elems[i];
    CHECK(c == Catch::Approx(static_cast<double>(dot) / 512.0));

    AccumulatorVector acc(std::vector<std::int32_t>{3, -4});
    Hypervector unit;
    unit.elems = {1, 1};
    CHECK(cosine(acc, unit) == Catch::Approx(-1.0 / (5.0 * std::sqrt(2.0))));

    AccumulatorVector zero(2);
    CHECK_THROWS_AS(cosine(zero, unit), std::domain_error);
    Hypervector wrong;
    wrong.elems.assign(3, 1);
    CHECK_THROWS_AS(cosine(a, wrong), std::invalid_argument);
}

TEST_CASE("independent hypervectors are pseudo-orthogonal at D=10000", "[hv][slow]") {
    RngStream rng(46);
    std::vector<Hypervector> hvs;
    for (int i = 0; i < 200; ++i) hvs.push_back(random_hv(rng, 10000));
    double worst = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < hvs.size() && pairs < 1000; ++i)
        for (std::size_t j = i + 1; j < hvs.size() && pairs < 1000; ++j, ++pairs)
            worst = std::max(worst, std::abs(cosine(hvs[i], hvs[j])));
    INFO("max |cos| over " << pairs << " pairs = " << worst);
    CHECK(worst < 0.06);
}
