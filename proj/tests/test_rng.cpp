#include <cmath>

#include "doctest.h"
#include "fedlora/rng.hpp"

using namespace fedlora;

TEST_CASE("equal seeds give equal streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 10000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds differ") {
    Rng a(1), b(2);
    bool any_diff = false;
    for (int i = 0; i < 16; ++i) any_diff |= a.next_u64() != b.next_u64();
    CHECK(any_diff);
}

TEST_CASE("uniform stays in the half-open unit interval") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("below respects the bound") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("normal has roughly standard moments") {
    Rng rng(9);
    const int n = 50000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("child streams are insensitive to parent draws") {
    Rng a(123), b(123);
    b.next_u64();
    b.next_u64();
    Rng ca = a.child(4);
    Rng cb = b.child(4);
    for (int i = 0; i < 100; ++i) CHECK(ca.next_u64() == cb.next_u64());
}

TEST_CASE("gamma sampler mean matches alpha") {
    Rng rng(31);
    for (double alpha : {0.5, 1.0, 5.0}) {
        const int n = 40000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += rng.gamma(alpha);
        CHECK(sum / n == doctest::Approx(alpha).epsilon(0.05));
    }
}
