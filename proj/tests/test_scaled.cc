#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include "kinspec/scaled.hh"

using kinspec::scaled_value;

TEST_CASE("round trip through double is exact for representable values") {
    for (double v : {0.0, 1.0, -1.0, 0.5, 2.0, -3.7, 1e-300, -1e300, 4.9406564584124654e-324,
                     1.7976931348623157e308, 3.141592653589793}) {
        scaled_value s(v);
        CHECK(s.collapse() == v);
        if (v != 0.0) CHECK(std::abs(s.sig) >= 1.0);
        if (v != 0.0) CHECK(std::abs(s.sig) < 2.0);
    }
}

TEST_CASE("products agree with naive evaluation when the naive path is safe") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> dist(-8.0, 8.0);
    for (int rep = 0; rep < 50; ++rep) {
        double naive = 1.0;
        scaled_value s(1.0);
        for (int i = 0; i < 40; ++i) {
            double f = dist(rng);
            naive *= f;
            s *= f;
        }
        if (naive != 0.0)
            CHECK(s.collapse() == doctest::Approx(naive).epsilon(1e-13));
    }
}

TEST_CASE("long products track log magnitude far outside double range") {
    scaled_value s(1.0);
    for (int i = 0; i < 2000; ++i) s *= 1.5;
    CHECK(s.log2_abs() == doctest::Approx(2000.0 * std::log2(1.5)).epsilon(1e-13));
    CHECK(std::isinf(s.collapse()));
    scaled_value t(1.0);
    for (int i = 0; i < 1000; ++i) t *= 1e-5;
    CHECK(t.log2_abs() == doctest::Approx(-5000.0 * std::log2(10.0)).epsilon(1e-13));
    CHECK(t.collapse() == 0.0);
}

TEST_CASE("addition aligns exponents") {
    scaled_value a(3.0), b(5.0);
    CHECK((a + b).collapse() == 8.0);
    // 2^400 + 2^-400 == 2^400 in double-width significand terms
    scaled_value big = scaled_value::pow2(400), tiny = scaled_value::pow2(-400);
    CHECK((big + tiny).log2_abs() == 400.0);
    // accumulating many equal terms
    scaled_value sum;
    for (int i = 0; i < 1000; ++i) sum += scaled_value(0.001);
    CHECK(sum.collapse() == doctest::Approx(1.0).epsilon(1e-12));
    // cancellation to zero
    scaled_value z = a - a;
    CHECK(z.is_zero());
    CHECK(z.collapse() == 0.0);
}

TEST_CASE("exp handles arguments far beyond double range") {
    CHECK(scaled_value::exp(1.0).collapse() == std::exp(1.0));
    CHECK(scaled_value::exp(-3.25).collapse() == std::exp(-3.25));
    scaled_value w = scaled_value::exp(-900.0); // e^{-30^2}
    CHECK(w.log_abs() == doctest::Approx(-900.0).epsilon(1e-12));
    CHECK(w.collapse() == 0.0);
    scaled_value h = scaled_value::exp(2000.0);
    CHECK(h.log_abs() == doctest::Approx(2000.0).epsilon(1e-12));
}

TEST_CASE("sqrt and division") {
    CHECK(scaled_value(2.0).sqrt().collapse() == std::sqrt(2.0));
    CHECK(scaled_value::exp(1000.0).sqrt().log_abs() == doctest::Approx(500.0).epsilon(1e-12));
    CHECK(scaled_value(8.0).sqrt().collapse() == doctest::Approx(std::sqrt(8.0)));
    scaled_value q = scaled_value(1.0) / scaled_value(3.0);
    CHECK(q.collapse() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(scaled_value(-1.0).sqrt(), kinspec::numerical_error);
    CHECK_THROWS_AS(scaled_value(1.0) / scaled_value(0.0), kinspec::numerical_error);
}

TEST_CASE("signs and zero propagate") {
    scaled_value z;
    CHECK(z.is_zero());
    CHECK((z * scaled_value(5.0)).is_zero());
    CHECK(scaled_value(-2.5).sign() == -1);
    CHECK((-scaled_value(-2.5)).sign() == 1);
    CHECK(scaled_value(0.0).sign() == 0);
}
