#include "kinspec/galerkin.hh"

#include <atomic>
#include <cmath>
#include <memory>

#include "kinspec/errors.hh"
#include "kinspec/scaled.hh"

namespace kinspec {

namespace {

void check_dims(const recurrence_table& table, int n) {
    if (n < 1) throw config_error("galerkin: dimension must be >= 1");
    if (n > table.n_max) throw config_error("galerkin: dimension exceeds table depth");
}

// The fold sqrt(w mu) underflows a double past x ~ 38.6 while high-degree
// basis values grow just as fast the other way, so their product is an
// ordinary number. The rows therefore run the recurrence on an in-range
// mantissa and track the binary exponent separately, renormalizing whenever
// the mantissae leave [2^-500, 2^500].
constexpr double kLn2 = 0.6931471805599453;

inline double split_exponent(double log_fold, int& e) {
    e = static_cast<int>(std::lround(log_fold / kLn2));
    return std::exp(log_fold - e * kLn2);
}

// Fills one node row of the value matrix: out[j] = fold * phi_j(s-variable),
// via the normalized three-term recurrence.
inline void value_row(double s, double log_fold, double inv_sqrt_c0, const double* a,
                      const double* sqrt_b, int n, double* out) {
    int e = 0;
    double prev = 0.0, cur = split_exponent(log_fold, e) * inv_sqrt_c0;
    for (int j = 0; j < n; ++j) {
        out[j] = std::ldexp(cur, e);
        if (j + 1 < n) {
            double next = ((s - a[j]) * cur - sqrt_b[j] * prev) / sqrt_b[j + 1];
            prev = cur;
            cur = next;
            double mag = std::max(std::abs(prev), std::abs(cur));
            if (mag > 0x1p500) {
                prev *= 0x1p-500;
                cur *= 0x1p-500;
                e += 500;
            } else if (mag < 0x1p-500 && mag > 0.0) {
                prev *= 0x1p500;
                cur *= 0x1p500;
                e -= 500;
            }
        }
    }
}

// Coupled value/derivative recurrence (derivative with respect to the
// recurrence variable s); out[j-1] = fold * d/ds phi_j for j = 1..n-1.
inline void deriv_row(double s, double log_fold, double inv_sqrt_c0, const double* a,
                      const double* sqrt_b, int n, double* out) {
    int e = 0;
    double uprev = 0.0, u = split_exponent(log_fold, e) * inv_sqrt_c0;
    double wprev = 0.0, w = 0.0;
    for (int j = 0; j + 1 < n; ++j) {
        double unext = ((s - a[j]) * u - sqrt_b[j] * uprev) / sqrt_b[j + 1];
        double wnext = (u + (s - a[j]) * w - sqrt_b[j] * wprev) / sqrt_b[j + 1];
        uprev = u;
        u = unext;
        wprev = w;
        w = wnext;
        out[j] = std::ldexp(w, e);
        double mag = std::max(std::max(std::abs(uprev), std::abs(u)),
                              std::max(std::abs(wprev), std::abs(w)));
        if (mag > 0x1p500) {
            uprev *= 0x1p-500;
            u *= 0x1p-500;
            wprev *= 0x1p-500;
            w *= 0x1p-500;
            e += 500;
        } else if (mag < 0x1p-500 && mag > 0.0) {
            uprev *= 0x1p500;
            u *= 0x1p500;
            wprev *= 0x1p500;
            w *= 0x1p500;
            e -= 500;
        }
    }
}

struct family_view {
    std::vector<double> a, sqrt_b;
    double inv_sqrt_c0;
    bool even;

    family_view(const recurrence_table& t, int n) {
        a.assign(t.a.begin(), t.a.begin() + n);
        sqrt_b.resize(n);
        sqrt_b[0] = 0.0;
        for (int j = 1; j < n; ++j) sqrt_b[j] = std::sqrt(t.b[j]);
        inv_sqrt_c0 = (scaled_value(1.0) / t.c[0].sqrt()).collapse();
        even = t.spec.parity == parity_kind::even;
    }
};

const recurrence_table& family_of(const galerkin_operator& op) {
    if (!op.table) throw config_error("galerkin: operator has no family table");
    return *op.table;
}

} // namespace

Eigen::MatrixXd basis_node_matrix(const recurrence_table& table, int n,
                                  const quadrature_rule& rule) {
    check_dims(table, n);
    family_view fam(table, n);
    const auto N = static_cast<Eigen::Index>(rule.size());
    Eigen::MatrixXd B(N, n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < N; ++k) {
        double x = rule.nodes[k];
        double s = fam.even ? x * x : x;
        double log_fold = 0.5 * (std::log(rule.weights[k]) + 2.0 * std::log(x) - x * x);
        Eigen::VectorXd row(n);
        value_row(s, log_fold, fam.inv_sqrt_c0, fam.a.data(), fam.sqrt_b.data(), n,
                  row.data());
        B.row(k) = row;
    }
    return B;
}

Eigen::MatrixXd basis_node_matrix_reference(const recurrence_table& table, int n,
                                            const quadrature_rule& rule) {
    check_dims(table, n);
    const auto N = static_cast<Eigen::Index>(rule.size());
    Eigen::MatrixXd B(N, n);
    for (Eigen::Index k = 0; k < N; ++k) {
        double x = rule.nodes[k];
        double lf = 0.5 * (std::log(rule.weights[k]) + 2.0 * std::log(x) - x * x);
        scaled_value fold = scaled_value::exp(lf);
        for (int j = 0; j < n; ++j)
            B(k, j) = (eval_poly(table, j, x) / table.c[j].sqrt() * fold).collapse();
    }
    return B;
}

Eigen::MatrixXd basis_deriv_node_matrix(const recurrence_table& table, int n,
                                        const quadrature_rule& rule, const psi_fun& psi) {
    check_dims(table, n);
    family_view fam(table, n);
    const auto N = static_cast<Eigen::Index>(rule.size());
    Eigen::MatrixXd B(N, std::max(n - 1, 0));
    if (n == 1) return B;
    std::atomic<bool> bad_psi{false};
#pragma omp parallel for schedule(static)
    for (Eigen::Index k = 0; k < N; ++k) {
        double x = rule.nodes[k];
        double pv = psi(x);
        if (!(pv > 0.0) || !std::isfinite(pv)) {
            bad_psi = true;
            continue;
        }
        double s = fam.even ? x * x : x;
        double log_fold =
            0.5 * (std::log(pv) + std::log(rule.weights[k]) + 2.0 * std::log(x) - x * x);
        Eigen::VectorXd row(n - 1);
        deriv_row(s, log_fold, fam.inv_sqrt_c0, fam.a.data(), fam.sqrt_b.data(), n, row.data());
        double chain = fam.even ? 2.0 * x : 1.0;
        B.row(k) = chain * row;
    }
    if (bad_psi) throw numerical_error("basis_deriv_node_matrix: diffusivity not positive/finite");
    return B;
}

Eigen::MatrixXd basis_deriv_node_matrix_reference(const recurrence_table& table, int n,
                                                  const quadrature_rule& rule,
                                                  const psi_fun& psi) {
    check_dims(table, n);
    const auto N = static_cast<Eigen::Index>(rule.size());
    Eigen::MatrixXd B(N, std::max(n - 1, 0));
    if (n == 1) return B;
    for (Eigen::Index k = 0; k < N; ++k) {
        double x = rule.nodes[k];
        double pv = psi(x);
        if (!(pv > 0.0) || !std::isfinite(pv))
            throw numerical_error("basis_deriv_node_matrix: diffusivity not positive/finite");
        double lf = 0.5 * (std::log(pv) + std::log(rule.weights[k]) + 2.0 * std::log(x) - x * x);
        scaled_value fold = scaled_value::exp(lf);
        for (int j = 1; j < n; ++j) {
            scaled_value p, dp;
            eval_poly_pair(table, j, x, p, dp);
            B(k, j - 1) = (dp / table.c[j].sqrt() * fold).collapse();
        }
    }
    return B;
}

namespace {

Eigen::MatrixXd upper_factor(Eigen::MatrixXd& E, int cols) {
    Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr(E);
    Eigen::MatrixXd R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (int i = 0; i < cols; ++i)
        if (R(i, i) < 0.0) R.row(i) = -R.row(i);
    return R;
}

} // namespace

galerkin_operator assemble(const recurrence_table& table, int n, const psi_fun& psi,
                           bool keep_basis_matrix) {
    check_dims(table, n);
    galerkin_operator op;
    op.spec = table.spec;
    op.n = n;
    op.rule = composite_rule(table, n, table.panel_order);
    op.table = std::make_shared<recurrence_table>(table);

    Eigen::MatrixXd E1 = basis_node_matrix(table, n, op.rule);
    if (keep_basis_matrix) op.E1 = E1;
    op.R1 = upper_factor(E1, n);
    E1.resize(0, 0);

    op.V = Eigen::MatrixXd::Zero(n, n);
    op.V(0, 0) = 1.0;
    op.S = Eigen::VectorXd::Zero(n);
    if (n == 1) {
        op.R2_tilde.resize(0, 0);
        return op;
    }

    Eigen::MatrixXd E2 = basis_deriv_node_matrix(table, n, op.rule, psi);
    op.R2_tilde = upper_factor(E2, n - 1);
    E2.resize(0, 0);

    double dmax = op.R2_tilde.diagonal().cwiseAbs().maxCoeff();
    for (int i = 0; i < n - 1; ++i)
        if (!(std::abs(op.R2_tilde(i, i)) > 1e-300 * std::max(dmax, 1.0)))
            throw numerical_error("assemble: stiffness factor singular (degenerate basis)");

    // Pseudo-inverse block (R1 tail block) * R2~^{-1}; its SVD resolves the
    // small decay rates to full relative accuracy, with the zero mode kept
    // structurally in slot 0.
    Eigen::MatrixXd P = op.R1.bottomRightCorner(n - 1, n - 1);
    op.R2_tilde.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(P);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeFullU);
    if (svd.info() != Eigen::Success) throw numerical_error("assemble: SVD failed");

    op.V.bottomRightCorner(n - 1, n - 1) = svd.matrixU();
    for (int i = 0; i < n - 1; ++i) {
        double sigma = svd.singularValues()(i); // descending
        if (!(sigma > 0.0)) throw numerical_error("assemble: zero singular value in inverse block");
        op.S(1 + i) = 1.0 / sigma; // ascending eigen-frequencies
    }
    return op;
}

namespace {

void check_alpha(const galerkin_operator& op, const Eigen::VectorXd& alpha) {
    if (alpha.size() != op.n) throw config_error("galerkin: coefficient length mismatch");
}

} // namespace

Eigen::VectorXd project_initial(const std::function<double(double)>& f,
                                const galerkin_operator& op) {
    const recurrence_table& table = family_of(op);
    family_view fam(table, op.n);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(op.n);
    Eigen::VectorXd row(op.n);
    for (std::size_t k = 0; k < op.rule.size(); ++k) {
        double x = op.rule.nodes[k];
        double fx = f(x);
        if (!std::isfinite(fx))
            throw numerical_error("project_initial: non-finite integrand at quadrature node");
        double log_fold = 0.5 * (std::log(op.rule.weights[k]) + 2.0 * std::log(x) - x * x);
        double s = fam.even ? x * x : x;
        value_row(s, log_fold, fam.inv_sqrt_c0, fam.a.data(), fam.sqrt_b.data(), op.n, row.data());
        beta.noalias() += (fx * std::exp(log_fold)) * row;
    }
    return op.R1.transpose().triangularView<Eigen::Lower>().solve(beta);
}

Eigen::VectorXd analytic_alpha(int example, parity_kind parity, int n) {
    if (example != 1 && example != 2)
        throw config_error("analytic_alpha: example must be 1 or 2");
    const double sqrt_pi = std::sqrt(M_PI);
    const double m0 = sqrt_pi / 4.0;        // <1, 1>_w
    const double m1 = 0.5;                  // <x, 1>_w
    const double m2 = 3.0 * sqrt_pi / 8.0;  // <x^2, 1>_w
    const double m3 = 1.0;                  // <x^3, 1>_w
    const double m4 = 15.0 * sqrt_pi / 16.0;

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    if (parity == parity_kind::full) {
        double a0 = m1 / m0;
        double c1 = m2 - m1 * m1 / m0;
        if (example == 1) {
            if (n < 2) throw config_error("analytic_alpha: example 1 (full) needs n >= 2");
            alpha(0) = m1 / std::sqrt(m0);
            alpha(1) = std::sqrt(c1);
        } else {
            if (n < 3) throw config_error("analytic_alpha: example 2 (full) needs n >= 3");
            double proj1 = m3 - a0 * m2;
            double c2 = m4 - proj1 * proj1 / c1 - m2 * m2 / m0;
            alpha(0) = m2 / std::sqrt(m0);
            alpha(1) = proj1 / std::sqrt(c1);
            alpha(2) = std::sqrt(c2);
        }
        return alpha;
    }
    // even parity
    if (example == 2) {
        if (n < 2) throw config_error("analytic_alpha: example 2 (even) needs n >= 2");
        alpha(0) = 0.75 * std::pow(M_PI, 0.25);
        alpha(1) = std::sqrt(6.0) * std::pow(M_PI, 0.25) / 4.0;
        return alpha;
    }
    // example 1, even: alternating double-factorial series, accumulated in
    // log space; the j=0 term carries (-3)!! = -1.
    alpha(0) = std::pow(M_PI, -0.25);
    const double ln2 = std::log(2.0);
    const double quarter_ln_pi = 0.25 * std::log(M_PI);
    for (int j = 1; j < n; ++j) {
        double ln_dfac = std::lgamma(2.0 * j - 1.0) - (j - 1.0) * ln2 - std::lgamma(double(j));
        double ln_mag = ln_dfac - 0.5 * std::lgamma(2.0 * j + 2.0) - quarter_ln_pi;
        double sign = (j % 2 == 1) ? 1.0 : -1.0; // (-1)^(j+1)
        alpha(j) = sign * std::exp(ln_mag);
    }
    return alpha;
}

double two_hump_initial(double x) {
    if (!(x > 0.0) || x >= 15.0) return 0.0;
    const double cutoff = -15.0 / (15.0 - x);
    const double lx = std::log(x);
    const double hump1 = std::exp(std::log(2.5) + 30.0 * (lx - std::log(3.25)) + cutoff);
    const double hump2 = std::exp(std::log(155.0 / 64.0) + 200.0 * (lx - std::log(8.25)) + cutoff);
    return hump1 + hump2;
}

Eigen::VectorXd evolve(const galerkin_operator& op, const Eigen::VectorXd& alpha0, double t) {
    check_alpha(op, alpha0);
    if (!(t >= 0.0)) throw config_error("evolve: time must be >= 0");
    Eigen::VectorXd y = op.V.transpose() * alpha0;
    for (int j = 0; j < op.n; ++j) y(j) *= std::exp(-op.S(j) * op.S(j) * t);
    return op.V * y;
}

std::vector<std::pair<double, double>> eigenmode_amplitudes(const galerkin_operator& op,
                                                            const Eigen::VectorXd& alpha0,
                                                            double t, bool include_zero_mode) {
    check_alpha(op, alpha0);
    if (!(t >= 0.0)) throw config_error("eigenmode_amplitudes: time must be >= 0");
    Eigen::VectorXd g = op.V.transpose() * alpha0;
    std::vector<std::pair<double, double>> out;
    out.reserve(op.n);
    for (int j = include_zero_mode ? 0 : 1; j < op.n; ++j) {
        double rate = op.S(j) * op.S(j);
        out.emplace_back(rate, std::exp(-rate * t) * g(j));
    }
    return out;
}

namespace {

// Reconstruction kernel shared by evaluate_solution and the eigenfunction
// closures: u(x) = sum_j y_j phi_j(x) with y in the raw (uncorrected) basis,
// run in extended-range arithmetic so any pointwise scaling can be folded in
// before collapse.
struct corrected_evaluator {
    std::vector<double> a, sqrt_b;
    double inv_sqrt_c0 = 0.0;
    bool even = false;
    domain_kind domain = domain_kind::half_line;
    double x_max = 0.0;
    Eigen::VectorXd y;

    corrected_evaluator(const recurrence_table& table, Eigen::VectorXd raw_coeffs) {
        int n = static_cast<int>(raw_coeffs.size());
        family_view fam(table, n);
        a = std::move(fam.a);
        sqrt_b = std::move(fam.sqrt_b);
        inv_sqrt_c0 = fam.inv_sqrt_c0;
        even = fam.even;
        domain = table.spec.domain;
        x_max = table.spec.x_max;
        y = std::move(raw_coeffs);
    }

    void check_domain(double x) const {
        if (x < 0.0 || (domain == domain_kind::truncated && x > x_max))
            throw config_error("evaluate_solution: point outside the domain");
    }

    double operator()(double x, solution_scaling scaling) const {
        check_domain(x);
        double s = even ? x * x : x;
        scaled_value cur(inv_sqrt_c0);
        if (scaling == solution_scaling::exp_half)
            cur *= scaled_value::exp(-0.5 * x * x);
        else if (scaling == solution_scaling::weight)
            cur *= scaled_value::exp(-x * x);
        scaled_value prev, sum;
        int n = static_cast<int>(y.size());
        for (int j = 0; j < n; ++j) {
            sum += cur * y(j);
            if (j + 1 < n) {
                scaled_value next = cur * (s - a[j]);
                next -= prev * sqrt_b[j];
                next *= 1.0 / sqrt_b[j + 1];
                prev = cur;
                cur = next;
            }
        }
        return sum.collapse_checked();
    }
};

Eigen::VectorXd raw_coefficients(const galerkin_operator& op, const Eigen::VectorXd& alpha) {
    return op.R1.triangularView<Eigen::Upper>().solve(alpha);
}

} // namespace

std::vector<double> evaluate_solution(const galerkin_operator& op, const Eigen::VectorXd& alpha,
                                      const std::vector<double>& xs, solution_scaling scaling) {
    check_alpha(op, alpha);
    corrected_evaluator ev(family_of(op), raw_coefficients(op, alpha));
    for (double x : xs) ev.check_domain(x);
    std::vector<double> out(xs.size());
    std::atomic<bool> overflow{false};
    const auto m = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
        try {
            out[i] = ev(xs[i], scaling);
        } catch (const numerical_error&) {
            overflow = true;
            out[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    if (overflow)
        throw numerical_error("evaluate_solution: value overflows double at a requested point");
    return out;
}

double moment(const galerkin_operator& op, const Eigen::VectorXd& alpha, int k) {
    check_alpha(op, alpha);
    if (k < 0) throw config_error("moment: order must be >= 0");
    const recurrence_table& table = family_of(op);
    family_view fam(table, op.n);
    Eigen::VectorXd y = raw_coefficients(op, alpha);
    Eigen::VectorXd row(op.n);
    double m = 0.0;
    for (std::size_t q = 0; q < op.rule.size(); ++q) {
        double x = op.rule.nodes[q];
        double log_fold = 0.5 * (std::log(op.rule.weights[q]) + 2.0 * std::log(x) - x * x);
        double s = fam.even ? x * x : x;
        value_row(s, log_fold, fam.inv_sqrt_c0, fam.a.data(), fam.sqrt_b.data(), op.n, row.data());
        m += row.dot(y) * std::exp(log_fold) * std::pow(x, k);
    }
    return m;
}

double entropy(const galerkin_operator& op, const Eigen::VectorXd& alpha) {
    check_alpha(op, alpha);
    return -alpha.squaredNorm();
}

double entropy_quadrature(const galerkin_operator& op, const Eigen::VectorXd& alpha) {
    check_alpha(op, alpha);
    const recurrence_table& table = family_of(op);
    family_view fam(table, op.n);
    Eigen::VectorXd y = raw_coefficients(op, alpha);
    Eigen::VectorXd row(op.n);
    double s2 = 0.0;
    for (std::size_t q = 0; q < op.rule.size(); ++q) {
        double x = op.rule.nodes[q];
        double log_fold = 0.5 * (std::log(op.rule.weights[q]) + 2.0 * std::log(x) - x * x);
        double s = fam.even ? x * x : x;
        value_row(s, log_fold, fam.inv_sqrt_c0, fam.a.data(), fam.sqrt_b.data(), op.n, row.data());
        double v = row.dot(y);
        s2 += v * v;
    }
    return -s2;
}

std::pair<double, std::function<double(double)>> eigenfunction_of_PL(const galerkin_operator& op,
                                                                     double target) {
    if (!std::isfinite(target)) throw config_error("eigenfunction_of_PL: target must be finite");
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < op.n; ++j) {
        double rate = op.S(j) * op.S(j);
        double d = std::abs(rate - target);
        if (d < dist) {
            dist = d;
            best = j;
        }
    }
    double rate = op.S(best) * op.S(best);
    auto ev = std::make_shared<corrected_evaluator>(family_of(op),
                                                    raw_coefficients(op, op.V.col(best)));
    return {rate, [ev](double x) { return (*ev)(x, solution_scaling::none); }};
}

} // namespace kinspec
