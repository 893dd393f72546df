#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kinspec/errors.hh"
#include "kinspec/orthopoly.hh"
#include "kinspec/quadrature.hh"

using namespace kinspec;

namespace {

struct frozen_row {
    double a, b, c;
};

// Recurrence coefficients frozen from an independent 40-digit adaptive
// quadrature computation (monic Stieltjes with mpmath).
const frozen_row frozen_nu2[] = {
    {1.1283791670955126, 0.0, 0.44311346272637901},
    {1.3596630397735373, 0.22676045526483731, 0.10048061054181222},
    {1.5705068596616252, 0.42455596300894704, 0.042659642372306045},
    {1.7618965662237742, 0.60895224074683321, 0.025977684812074318},
    {1.9370615696730712, 0.78676824918204031, 0.020438417597398591},
    {2.0990006812228112, 0.96102422611365707, 0.019641814454527731},
};
const frozen_row frozen_nu0[] = {
    {0.56418958354775629, 0.0, 0.88622692545275801},
    {0.98842539284680029, 0.18169011381620933, 0.16101867095250086},
    {1.28596761936394, 0.3413251289594392, 0.054959718627739864},
    {1.5247208440801153, 0.50496215298800163, 0.0277525778458783},
};
const frozen_row frozen_nu4[] = {
    {1.5045055561273501, 0.0, 0.66467019408956851},
    {1.6767645689789672, 0.236463031581933, 0.15716992909657118},
    {1.8423586372359901, 0.45199754863484551, 0.071040422670762651},
    {1.9999982003043254, 0.65371710316709978, 0.046440339316097322},
};
const frozen_row frozen_nu2_x4[] = {
    {1.1283775989282488, 0.0, 0.44311323082443503},
    {1.359608571888602, 0.22675586736247694, 0.10047852499538422},
    {1.5696978329944525, 0.42441312156207057, 0.042644404443243548},
    {1.7552993618336188, 0.60706686815237609, 0.025888005049583132},
};

void check_against(const recurrence_table& t, const frozen_row* rows, int m) {
    for (int j = 0; j < m; ++j) {
        CHECK(t.a[j] == doctest::Approx(rows[j].a).epsilon(5e-14));
        if (j > 0) CHECK(t.b[j] == doctest::Approx(rows[j].b).epsilon(5e-14));
        CHECK(t.c[j].collapse() == doctest::Approx(rows[j].c).epsilon(5e-14));
    }
}

} // namespace

TEST_CASE("bootstrapped recurrence matches frozen adaptive-quadrature values") {
    check_against(build_recurrence({2, domain_kind::half_line, 0.0, parity_kind::full}, 6),
                  frozen_nu2, 6);
    check_against(build_recurrence({0, domain_kind::half_line, 0.0, parity_kind::full}, 4),
                  frozen_nu0, 4);
    check_against(build_recurrence({4, domain_kind::half_line, 0.0, parity_kind::full}, 4),
                  frozen_nu4, 4);
    check_against(build_recurrence({2, domain_kind::truncated, 4.0, parity_kind::full}, 4),
                  frozen_nu2_x4, 4);
}

TEST_CASE("even-parity closed form reproduces the factorial norm formula") {
    auto t = even_recurrence_closed_form(50);
    double lnpi = 0.5 * std::log(M_PI);
    for (int j = 0; j < 50; ++j) {
        CHECK(t.a[j] == 2.0 * j + 1.5);
        CHECK(t.b[j] == j * (j + 0.5));
        double lnc = lnpi + std::lgamma(2.0 * j + 2.0) - (2.0 * j + 2.0) * std::log(2.0);
        CHECK(t.c[j].log_abs() == doctest::Approx(lnc).epsilon(1e-13));
    }
}

TEST_CASE("bootstrapped even-parity recurrence agrees with the closed form") {
    weight_spec spec{2, domain_kind::half_line, 0.0, parity_kind::even};
    int n = 60;
    auto built = build_recurrence(spec, n);
    auto closed = even_recurrence_closed_form(n);
    for (int j = 0; j < n; ++j) {
        CHECK(built.a[j] == doctest::Approx(closed.a[j]).epsilon(5e-12));
        if (j > 0) CHECK(built.b[j] == doctest::Approx(closed.b[j]).epsilon(5e-12));
        CHECK(built.c[j].log_abs() == doctest::Approx(closed.c[j].log_abs()).epsilon(5e-12));
    }
    // zeros agree too (in x)
    for (std::size_t i = 0; i < built.roots[n].size(); ++i)
        CHECK(built.roots[n][i] == doctest::Approx(closed.roots[n][i]).epsilon(1e-10));
}

TEST_CASE("normalized basis is orthonormal against an adaptive oracle") {
    weight_spec spec{2, domain_kind::half_line, 0.0, parity_kind::full};
    auto t = build_recurrence(spec, 7); // norms through degree 6
    using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (int i = 0; i <= 6; ++i)
        for (int k = i; k <= 6; ++k) {
            double v = gk::integrate(
                [&](double x) {
                    return eval_basis(t, i, x, basis_form::unit) *
                           eval_basis(t, k, x, basis_form::unit) * x * x * std::exp(-x * x);
                },
                0.0, std::numeric_limits<double>::infinity(), 12, 1e-13);
            CHECK(v == doctest::Approx(i == k ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
        }
}

TEST_CASE("stored zeros evaluate to exactly zero and interlace") {
    for (auto spec : {weight_spec{2, domain_kind::half_line, 0.0, parity_kind::full},
                      weight_spec{2, domain_kind::half_line, 0.0, parity_kind::even},
                      weight_spec{2, domain_kind::truncated, 15.0, parity_kind::even}}) {
        auto t = build_recurrence(spec, 12);
        for (int j = 1; j <= 12; ++j) {
            auto r = poly_roots(t, j);
            CHECK(static_cast<int>(r.size()) == j);
            for (double x : r) {
                CHECK(x > 0.0);
                if (spec.domain == domain_kind::truncated) CHECK(x < spec.x_max);
                CHECK(eval_poly(t, j, x).is_zero());
            }
            if (j < 12) {
                auto rn = poly_roots(t, j + 1);
                for (int i = 0; i < j; ++i) {
                    CHECK(rn[i] < r[i]);
                    CHECK(r[i] < rn[i + 1]);
                }
            }
        }
    }
}

TEST_CASE("polynomial values match the explicit low-degree forms") {
    weight_spec spec{2, domain_kind::half_line, 0.0, parity_kind::full};
    auto t = build_recurrence(spec, 3);
    for (double x : {0.3, 1.0, 2.7}) {
        double p1 = x - t.a[0];
        double p2 = (x - t.a[1]) * p1 - t.b[1];
        double p3 = (x - t.a[2]) * p2 - t.b[2] * p1;
        CHECK(eval_poly(t, 1, x).collapse() == doctest::Approx(p1).epsilon(1e-12));
        CHECK(eval_poly(t, 2, x).collapse() == doctest::Approx(p2).epsilon(1e-12));
        CHECK(eval_poly(t, 3, x).collapse() == doctest::Approx(p3).epsilon(1e-11));
    }
}

TEST_CASE("derivative evaluation matches finite differences away from zeros") {
    for (auto spec : {weight_spec{2, domain_kind::half_line, 0.0, parity_kind::full},
                      weight_spec{2, domain_kind::half_line, 0.0, parity_kind::even}}) {
        auto t = build_recurrence(spec, 8);
        for (double x : {0.37, 1.91, 3.13}) {
            scaled_value p, dp;
            eval_poly_pair(t, 8, x, p, dp);
            CHECK(p.collapse() == doctest::Approx(eval_poly(t, 8, x).collapse()).epsilon(1e-14));
            double h = 1e-6;
            double fd = (eval_poly(t, 8, x + h).collapse() - eval_poly(t, 8, x - h).collapse()) /
                        (2 * h);
            CHECK(dp.collapse() == doctest::Approx(fd).epsilon(1e-7));
        }
    }
}

TEST_CASE("derivative evaluation stays accurate arbitrarily close to a zero") {
    weight_spec spec{2, domain_kind::half_line, 0.0, parity_kind::even};
    auto t = build_recurrence(spec, 10);
    double r = poly_roots(t, 10)[4];
    scaled_value p0, dp0;
    eval_poly_pair(t, 10, r, p0, dp0);
    CHECK(p0.is_zero());
    double slope = dp0.collapse();
    CHECK(slope != 0.0);
    for (double rel : {1e-13, 1e-11, 1e-9, 3e-8}) {
        double x = r * (1.0 + rel);
        scaled_value p, dp;
        eval_poly_pair(t, 10, x, p, dp);
        // value follows the tangent line, derivative stays near the slope
        CHECK(p.collapse() == doctest::Approx(slope * (x - r)).epsilon(1e-5));
        CHECK(dp.collapse() == doctest::Approx(slope).epsilon(1e-5));
    }
}

TEST_CASE("weight-scaled basis equals unit basis times the square-rooted weight") {
    for (auto spec : {weight_spec{2, domain_kind::half_line, 0.0, parity_kind::full},
                      weight_spec{4, domain_kind::half_line, 0.0, parity_kind::full},
                      weight_spec{2, domain_kind::half_line, 0.0, parity_kind::even}}) {
        auto t = build_recurrence(spec, 7);
        for (double x : {0.4, 1.3, 2.9}) {
            double u = eval_basis(t, 6, x, basis_form::unit);
            double w = eval_basis(t, 6, x, basis_form::weight_scaled);
            double root_w = std::pow(x, spec.nu / 2) * std::exp(-0.5 * x * x);
            CHECK(w == doctest::Approx(u * root_w).epsilon(1e-13));
        }
    }
}

TEST_CASE("weight-scaled basis stays finite far into the tail at high degree") {
    weight_spec spec{2, domain_kind::half_line, 0.0, parity_kind::even};
    auto t = build_recurrence(spec, 41);
    // Degree-80 oscillations turn over near x ~ 12.7; past there the Gaussian
    // wins and the scaled value plunges without ever overflowing a double.
    double prev = 1.0;
    for (double x : {15.0, 20.0, 25.0}) {
        double w = eval_basis(t, 40, x, basis_form::weight_scaled);
        CHECK(std::isfinite(w));
        CHECK(std::abs(w) < 1e-4 * prev);
        prev = std::abs(w);
    }
}

TEST_CASE("panel edges honor the domain") {
    weight_spec tr{2, domain_kind::truncated, 15.0, parity_kind::even};
    auto t = build_recurrence(tr, 8);
    auto edges = panel_edges(tr, t.roots[8], t.tail_panels);
    CHECK(edges.front() == 0.0);
    CHECK(edges.back() == 15.0);
    for (std::size_t i = 1; i < edges.size(); ++i) CHECK(edges[i] > edges[i - 1]);

    weight_spec hl{2, domain_kind::half_line, 0.0, parity_kind::full};
    auto empty_edges = panel_edges(hl, {}, 6);
    CHECK(empty_edges[0] == 0.0);
    CHECK(empty_edges[1] == 1.0); // unit-width bootstrap panels
    CHECK(empty_edges[10] == 10.0);
    CHECK(empty_edges.back() * empty_edges.back() > 736.8); // weight below cutoff
}

TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(build_recurrence({3, domain_kind::half_line, 0.0, parity_kind::full}, 4),
                    config_error);
    CHECK_THROWS_AS(build_recurrence({2, domain_kind::truncated, 0.0, parity_kind::full}, 4),
                    config_error);
    CHECK_THROWS_AS(build_recurrence({2, domain_kind::half_line, 0.0, parity_kind::full}, 0),
                    config_error);
    CHECK_THROWS_AS(build_recurrence({2, domain_kind::half_line, 0.0, parity_kind::full}, 4, 4),
                    config_error);
    auto t = build_recurrence({2, domain_kind::half_line, 0.0, parity_kind::full}, 4);
    CHECK_THROWS_AS(poly_roots(t, 5), config_error);
    CHECK_THROWS_AS(poly_roots(t, -1), config_error);
    CHECK_THROWS_AS(eval_poly(t, 7, 1.0), config_error);
    CHECK_THROWS_AS(eval_basis(t, 2, -0.5, basis_form::unit), config_error);
    // basis index n_max needs the unstored norm c[n_max]
    CHECK_THROWS_AS(eval_basis(t, 4, 1.0, basis_form::unit), config_error);
}
