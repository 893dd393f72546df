#pragma once

#include <array>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace kinspec {

// Reference solution of the continuous eigenproblem L u = lambda u with
// u(0) = 1, u'(0) = 0, obtained by adaptive ODE integration from a series
// start; A0/theta0 are filled in by fit_envelope.
struct eigen_solution {
    double lambda = 0.0;
    double tol = 0.0;
    std::vector<std::array<double, 3>> samples; // (x, u, u')
    double A0 = std::numeric_limits<double>::quiet_NaN();
    double theta0 = std::numeric_limits<double>::quiet_NaN();
};

// Integrates outward from a power-series launch at x0 with an 8th-order
// adaptive embedded pair at tolerance tol; sample spacing is capped so the
// oscillatory tail stays resolved.
eigen_solution solve_ode(double lambda, double x_max, double tol, double x0 = 1e-3);

// Large-x amplitude/phase series (p, q) of the scaled solution
// u e^{-x^2/2} ~ A0 p(x) cos[q(x) + theta0].
std::pair<double, double> envelope(double lambda, double x);

// Least-squares fit of u e^{-x^2/2} against the envelope model over samples
// with x in [x_lo, x_hi]; returns (A0 > 0, theta0 in (-pi, pi]).
std::pair<double, double> fit_envelope(const eigen_solution& sol, double x_lo, double x_hi);

// Scaled residual r(x) = [scale * u_p(x) - u(x)] e^{-x^2/2} scanned over the
// reference sample grid; scale <= 0 requests automatic minimization of
// max |r| over the middle of the scan range.
struct residual_report {
    double scale = 1.0;
    double max_abs = 0.0;
    std::vector<std::pair<double, double>> extrema; // (x, r) at local maxima of |r|
};
residual_report residual_diagnostic(const std::function<double(double)>& u_p,
                                    const eigen_solution& u_ref, double scale,
                                    double x_lo = 0.0,
                                    double x_hi = std::numeric_limits<double>::infinity());

} // namespace kinspec
