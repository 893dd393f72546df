#include "kinspec/eigenref.hh"

#include <algorithm>
#include <cmath>
#include <boost/numeric/odeint.hpp>

#include "kinspec/errors.hh"
#include "kinspec/quadrature.hh"

namespace kinspec {

namespace {

constexpr double two_over_sqrt_pi = 1.1283791670955126;

// d(ln Psi)/dx, with a short series below the cancellation threshold.
double dlog_psi(double x) {
    if (x < 0.005) return x * (-1.2 + 0.13714285714285715 * x * x);
    return (two_over_sqrt_pi * std::exp(-x * x) / chandrasekhar_psi(x) - 3.0) / x;
}

// Power-series launch: u = sum_M u_M x^{2M} from matching the self-adjoint
// form term by term. G is the product series of Psi and e^{-x^2}; B is the
// product series of u and e^{-x^2}.
std::vector<double> series_coefficients(double lambda, int terms) {
    std::vector<double> psi_series(terms), exp_series(terms), G(terms, 0.0);
    double fact = 1.0;
    for (int m = 0; m < terms; ++m) {
        if (m > 0) fact *= m;
        double sign = (m % 2 == 0) ? 1.0 : -1.0;
        psi_series[m] = two_over_sqrt_pi * sign / (fact * (2.0 * m + 3.0));
        exp_series[m] = sign / fact;
    }
    for (int m = 0; m < terms; ++m)
        for (int i = 0; i <= m; ++i) G[m] += psi_series[i] * exp_series[m - i];

    std::vector<double> u(terms, 0.0);
    u[0] = 1.0;
    for (int M = 1; M < terms; ++M) {
        double B = 0.0; // coefficient M-1 of u * e^{-x^2}, uses u_0..u_{M-1}
        for (int j = 0; j <= M - 1; ++j) B += u[j] * exp_series[M - 1 - j];
        double rhs = -lambda * B;
        for (int j = 1; j <= M - 1; ++j) rhs -= (2.0 * M + 1.0) * 2.0 * j * u[j] * G[M - j];
        u[M] = rhs / ((2.0 * M + 1.0) * 2.0 * M * G[0]);
    }
    return u;
}

void series_eval(const std::vector<double>& u, double x, double& val, double& dval) {
    double x2 = x * x;
    val = 0.0;
    dval = 0.0;
    double pw = 1.0;
    for (std::size_t M = 0; M < u.size(); ++M) {
        val += u[M] * pw;
        if (M + 1 < u.size()) dval += 2.0 * (M + 1.0) * u[M + 1] * pw;
        pw *= x2;
    }
    dval *= x;
}

using state_type = std::array<double, 2>;

} // namespace

eigen_solution solve_ode(double lambda, double x_max, double tol, double x0) {
    if (!(lambda > 0.0)) throw config_error("solve_ode: lambda must be > 0");
    if (!(x_max <= 30.0)) throw config_error("solve_ode: x_max must be <= 30");
    if (!(tol >= 1e-13)) throw config_error("solve_ode: tolerance below 1e-13 not supported");
    if (!(x0 > 0.0 && x0 <= 0.1)) throw config_error("solve_ode: series start must be in (0, 0.1]");
    if (!(x_max > x0)) throw config_error("solve_ode: x_max must exceed the series start");

    eigen_solution sol;
    sol.lambda = lambda;
    sol.tol = tol;

    auto series = series_coefficients(lambda, 24);
    state_type y;
    series_eval(series, x0, y[0], y[1]);

    auto sys = [lambda](const state_type& s, state_type& dsdx, double x) {
        double psi = chandrasekhar_psi(x);
        dsdx[0] = s[1];
        dsdx[1] = -((dlog_psi(x) + 2.0 / x - 2.0 * x) * s[1] + (lambda / psi) * s[0]);
    };

    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_fehlberg78<state_type>());

    double x = x0;
    sol.samples.push_back({x, y[0], y[1]});
    const double dt_cap = 0.04; // keeps samples at >= 2 per oscillation period
    double dt = std::min(1e-4, dt_cap);
    long guard = 0;
    while (x < x_max) {
        dt = std::min({dt, dt_cap, x_max - x});
        auto res = stepper.try_step(sys, y, x, dt);
        if (res == ode::success) {
            sol.samples.push_back({x, y[0], y[1]});
        }
        if (++guard > 20000000 || !(dt > 1e-14))
            throw numerical_error("solve_ode: step size collapsed before reaching x_max");
    }
    return sol;
}

std::pair<double, double> envelope(double lambda, double x) {
    if (!(x >= 1.0)) throw config_error("envelope: asymptotic series needs x >= 1");
    if (!(lambda > 0.0)) throw config_error("envelope: lambda must be > 0");
    double z = 1.0 / (x * lambda);
    double p = std::pow(x, -0.25) *
               (1.0 + z / 8.0 + 5.0 * z * z / 128.0 + 15.0 * z * z * z / 1024.0);
    double z2 = z * z, z3 = z2 * z, z4 = z2 * z2, z5 = z4 * z;
    double q = std::sqrt(2.0 * lambda * x * x * x * x * x) *
               (2.0 / 5.0 - z / 6.0 - z2 / 16.0 + z3 / 64.0 + 5.0 * z4 / 3072.0 +
                (7.0 - 1152.0 * lambda * lambda * lambda * lambda) * z5 / 20480.0);
    return {p, q};
}

std::pair<double, double> fit_envelope(const eigen_solution& sol, double x_lo, double x_hi) {
    if (!(x_lo >= 5.0)) throw config_error("fit_envelope: window must start at x >= 5");
    if (!(x_hi > x_lo)) throw config_error("fit_envelope: empty window");
    if (sol.samples.empty() || sol.samples.back()[0] < x_hi || sol.samples.front()[0] > x_lo)
        throw config_error("fit_envelope: window outside the sampled range");

    // linear least squares in the phasor components:
    // u e^{-x^2/2} = B1 p cos q + B2 p sin q
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    std::size_t count = 0;
    for (const auto& s : sol.samples) {
        double x = s[0];
        if (x < x_lo || x > x_hi) continue;
        auto [p, q] = envelope(sol.lambda, x);
        double f1 = p * std::cos(q), f2 = p * std::sin(q);
        double g = s[1] * std::exp(-0.5 * x * x);
        s11 += f1 * f1;
        s12 += f1 * f2;
        s22 += f2 * f2;
        r1 += f1 * g;
        r2 += f2 * g;
        ++count;
    }
    if (count < 8) throw config_error("fit_envelope: too few samples in the window");
    double det = s11 * s22 - s12 * s12;
    if (!(std::abs(det) > 1e-300)) throw numerical_error("fit_envelope: degenerate window");
    double B1 = (s22 * r1 - s12 * r2) / det;
    double B2 = (s11 * r2 - s12 * r1) / det;

    double rss = 0.0;
    for (const auto& s : sol.samples) {
        double x = s[0];
        if (x < x_lo || x > x_hi) continue;
        auto [p, q] = envelope(sol.lambda, x);
        double g = s[1] * std::exp(-0.5 * x * x);
        double d = g - (B1 * p * std::cos(q) + B2 * p * std::sin(q));
        rss += d * d;
    }
    double rms = std::sqrt(rss / count);
    double bound = 10.0 * std::pow(x_lo, -3.75); // 10x the O(x^-15/4) remainder scale
    if (rms > bound)
        throw numerical_error("fit_envelope: residual exceeds the asymptotic error bound");

    double A0 = std::hypot(B1, B2);
    double theta0 = std::atan2(B2, B1); // model A0 p cos(q - theta0)
    return {A0, theta0};
}

residual_report residual_diagnostic(const std::function<double(double)>& u_p,
                                    const eigen_solution& u_ref, double scale, double x_lo,
                                    double x_hi) {
    std::vector<double> xs, up_vals, ref_scaled;
    for (const auto& s : u_ref.samples) {
        double x = s[0];
        if (x < x_lo || x > x_hi) continue;
        xs.push_back(x);
        up_vals.push_back(u_p(x) * std::exp(-0.5 * x * x));
        ref_scaled.push_back(s[1] * std::exp(-0.5 * x * x));
    }
    residual_report rep;
    if (xs.empty()) return rep;

    if (!(scale > 0.0) && !(scale < 0.0)) {
        // automatic rescaling: minimize the worst scaled mismatch over the
        // middle half of the scan range (convex in the scale, so a ternary
        // search converges)
        std::size_t lo = xs.size() / 4, hi = 3 * xs.size() / 4;
        if (hi <= lo + 1) {
            lo = 0;
            hi = xs.size();
        }
        auto worst = [&](double s) {
            double w = 0.0;
            for (std::size_t i = lo; i < hi; ++i)
                w = std::max(w, std::abs(s * up_vals[i] - ref_scaled[i]));
            return w;
        };
        double num = 0.0, den = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            num += up_vals[i] * ref_scaled[i];
            den += up_vals[i] * up_vals[i];
        }
        double center = den > 0.0 ? num / den : 1.0;
        double span = std::max(std::abs(center), 1e-6);
        double a = center - 4.0 * span, b = center + 4.0 * span;
        for (int it = 0; it < 200; ++it) {
            double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
            if (worst(m1) < worst(m2))
                b = m2;
            else
                a = m1;
        }
        scale = 0.5 * (a + b);
    }
    rep.scale = scale;

    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) r[i] = scale * up_vals[i] - ref_scaled[i];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        rep.max_abs = std::max(rep.max_abs, std::abs(r[i]));
        bool left_ok = i == 0 || std::abs(r[i]) >= std::abs(r[i - 1]);
        bool right_ok = i + 1 == xs.size() || std::abs(r[i]) >= std::abs(r[i + 1]);
        if (left_ok && right_ok) rep.extrema.emplace_back(xs[i], r[i]);
    }
    return rep;
}

} // namespace kinspec
