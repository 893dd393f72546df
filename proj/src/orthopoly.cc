#include "kinspec/orthopoly.hh"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>

#include "kinspec/errors.hh"

namespace kinspec {

void weight_spec::validate() const {
    if (nu != 0 && nu != 2 && nu != 4)
        throw config_error("weight_spec: nu must be 0, 2 or 4");
    if (domain == domain_kind::truncated && !(x_max > 0.0))
        throw config_error("weight_spec: truncated domain needs x_max > 0");
}

namespace {

// Eigenvalues of the symmetric tridiagonal Jacobi matrix built from the
// first j recurrence coefficients; these are the zeros of monic p_j in the
// recurrence variable.
std::vector<double> jacobi_eigenvalues(const std::vector<double>& a, const std::vector<double>& b,
                                       int j) {
    if (j == 0) return {};
    Eigen::VectorXd diag(j), off(std::max(j - 1, 0));
    for (int i = 0; i < j; ++i) diag(i) = a[i];
    for (int i = 1; i < j; ++i) {
        if (!(b[i] > 0.0))
            throw numerical_error("jacobi_eigenvalues: non-positive recurrence ratio b");
        off(i - 1) = std::sqrt(b[i]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw numerical_error("jacobi_eigenvalues: eigensolver failed");
    std::vector<double> r(j);
    for (int i = 0; i < j; ++i) r[i] = es.eigenvalues()(i);
    return r;
}

// Zeros in x: identity for full parity, positive square roots for even.
std::vector<double> to_x_roots(const weight_spec& spec, std::vector<double> rec_roots) {
    if (spec.parity == parity_kind::even)
        for (double& r : rec_roots) r = std::sqrt(std::max(r, 0.0));
    return rec_roots;
}

// ln of the weight x^nu e^{-x^2}, for the tail cutoff test.
double log_weight(int nu, double x) { return nu * std::log(x) - x * x; }

constexpr double tail_cutoff_log = -736.8; // ln(1e-320)

} // namespace

std::vector<double> panel_edges(const weight_spec& spec, const std::vector<double>& xroots,
                                int tail_panels) {
    bool truncated = spec.domain == domain_kind::truncated;
    std::vector<double> edges{0.0};
    if (xroots.empty()) {
        // Degree-0 bootstrap step: no zeros available, so fall back to
        // unit-width panels over the bulk of the weight.
        double hi = truncated ? spec.x_max : 10.0;
        for (double e = 1.0; e < hi - 1e-12; e += 1.0) edges.push_back(e);
        edges.push_back(hi);
        if (truncated) return edges;
    } else {
        edges.insert(edges.end(), xroots.begin(), xroots.end());
        if (truncated) {
            // Subdivide the final span [largest zero, x_max]: for small
            // degrees the zeros sit well inside the domain and a single wide
            // panel would lose ~8 digits.
            double last = edges.back();
            double gap = edges.size() >= 3 ? edges[edges.size() - 1] - edges[edges.size() - 2] : 1.0;
            double span = spec.x_max - last;
            if (span > 1e-12) {
                int pieces = std::max(1, static_cast<int>(std::ceil(span / std::min(1.0, std::max(gap, 1e-3)))));
                for (int i = 1; i < pieces; ++i) edges.push_back(last + span * i / pieces);
                edges.push_back(spec.x_max);
            }
            return edges;
        }
    }
    // Half-line tail: widths grow by 1.5x from the last root gap until both
    // the requested minimum count and the weight cutoff are reached.
    double width = edges.size() >= 3 ? edges[edges.size() - 1] - edges[edges.size() - 2] : 1.0;
    width = std::max(width, 0.25);
    int count = 0;
    double last = edges.back();
    while (count < tail_panels || log_weight(spec.nu, last) > tail_cutoff_log) {
        if (count >= 60) break;
        last += width;
        width *= 1.5;
        edges.push_back(last);
        ++count;
    }
    return edges;
}

namespace {

// One Stieltjes inner-product pass: accumulates <p_j, p_j> and <s p_j, p_j>
// (s the recurrence variable) over a composite rule in x, entirely in
// scaled_value arithmetic so squared norms can exceed the double range.
void stieltjes_moments(const weight_spec& spec, const std::vector<double>& rec_roots,
                       const std::vector<double>& nodes, const std::vector<double>& mu,
                       scaled_value& cj, double& aj) {
    bool even = spec.parity == parity_kind::even;
    scaled_value sum_c, sum_a;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        double x = nodes[k];
        double s = even ? x * x : x;
        scaled_value p(1.0);
        for (double r : rec_roots) p *= (s - r);
        scaled_value term = p * p;
        term *= scaled_value::exp(-x * x);
        if (spec.nu != 0) term *= std::pow(x, spec.nu);
        term *= mu[k];
        sum_c += term;
        sum_a += term * s;
    }
    if (sum_c.sign() <= 0)
        throw numerical_error("build_recurrence: non-positive squared norm (quadrature failure)");
    cj = sum_c;
    aj = (sum_a / sum_c).collapse();
}

void expand_panels(const std::vector<double>& edges, int order, std::vector<double>& nodes,
                   std::vector<double>& mu) {
    auto base = gauss_legendre(order, -1.0, 1.0);
    nodes.clear();
    mu.clear();
    nodes.reserve((edges.size() - 1) * order);
    mu.reserve((edges.size() - 1) * order);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        double mid = 0.5 * (edges[p] + edges[p + 1]);
        double half = 0.5 * (edges[p + 1] - edges[p]);
        for (int i = 0; i < order; ++i) {
            nodes.push_back(mid + half * base.nodes[i]);
            mu.push_back(half * base.weights[i]);
        }
    }
}

} // namespace

recurrence_table build_recurrence(const weight_spec& spec, int n, int panel_order,
                                  int tail_panels) {
    spec.validate();
    if (n < 1) throw config_error("build_recurrence: n must be >= 1");
    if (panel_order < 8) throw config_error("build_recurrence: panel_order must be >= 8");
    if (tail_panels < 1) throw config_error("build_recurrence: tail_panels must be >= 1");

    recurrence_table t;
    t.spec = spec;
    t.n_max = n;
    t.panel_order = panel_order;
    t.tail_panels = tail_panels;
    t.a.reserve(n);
    t.b.reserve(n);
    t.c.reserve(n);

    std::vector<double> nodes, mu;
    for (int j = 0; j < n; ++j) {
        auto rec_roots = jacobi_eigenvalues(t.a, t.b, j);
        auto xroots = to_x_roots(spec, rec_roots);
        t.roots.push_back(xroots);
        auto edges = panel_edges(spec, xroots, tail_panels);
        expand_panels(edges, panel_order, nodes, mu);
        scaled_value cj;
        double aj;
        stieltjes_moments(spec, rec_roots, nodes, mu, cj, aj);
        t.a.push_back(aj);
        t.b.push_back(j == 0 ? 0.0 : (cj / t.c.back()).collapse());
        t.c.push_back(cj);
    }
    t.roots.push_back(to_x_roots(spec, jacobi_eigenvalues(t.a, t.b, n)));
    return t;
}

recurrence_table even_recurrence_closed_form(int n) {
    if (n < 1) throw config_error("even_recurrence_closed_form: n must be >= 1");
    recurrence_table t;
    t.spec = weight_spec{2, domain_kind::half_line, 0.0, parity_kind::even};
    t.n_max = n;
    scaled_value c(std::sqrt(M_PI) / 4.0);
    for (int j = 0; j < n; ++j) {
        t.a.push_back(2.0 * j + 1.5);
        double bj = j * (j + 0.5);
        t.b.push_back(bj);
        if (j > 0) c *= bj;
        t.c.push_back(c);
    }
    for (int j = 0; j <= n; ++j)
        t.roots.push_back(to_x_roots(t.spec, jacobi_eigenvalues(t.a, t.b, j)));
    return t;
}

std::vector<double> poly_roots(const recurrence_table& table, int j) {
    if (j < 0 || j > table.n_max)
        throw config_error("poly_roots: degree outside table range");
    return table.roots[j];
}

namespace {

// Even parity pairs each stored zero r with -r so the product stays a plain
// root product in x; full parity uses the zeros as stored.
inline void factor_list(const recurrence_table& t, int j, std::vector<double>& f) {
    f.clear();
    const auto& r = t.roots[j];
    if (t.spec.parity == parity_kind::even) {
        f.reserve(2 * r.size());
        for (double v : r) {
            f.push_back(v);
            f.push_back(-v);
        }
    } else {
        f.assign(r.begin(), r.end());
    }
}

} // namespace

scaled_value eval_poly(const recurrence_table& table, int j, double x) {
    if (j < 0 || j > table.n_max)
        throw config_error("eval_poly: degree outside table range");
    static thread_local std::vector<double> f;
    factor_list(table, j, f);
    scaled_value p(1.0);
    for (double r : f) p *= (x - r);
    return p;
}

void eval_poly_pair(const recurrence_table& table, int j, double x, scaled_value& p,
                    scaled_value& dp) {
    if (j < 0 || j > table.n_max)
        throw config_error("eval_poly_pair: degree outside table range");
    static thread_local std::vector<double> f;
    factor_list(table, j, f);
    if (f.empty()) {
        p = scaled_value(1.0);
        dp = scaled_value();
        return;
    }
    // Nearest factor decides between the logarithmic-sum derivative and the
    // product-rule form that stays finite across a root.
    std::size_t m = 0;
    double dmin = std::abs(x - f[0]);
    for (std::size_t k = 1; k < f.size(); ++k) {
        double d = std::abs(x - f[k]);
        if (d < dmin) { dmin = d; m = k; }
    }
    double scale = std::max(1.0, std::abs(f[m]));
    if (dmin > 1e-8 * scale) {
        scaled_value prod(1.0);
        double s = 0.0;
        for (double r : f) {
            prod *= (x - r);
            s += 1.0 / (x - r);
        }
        p = prod;
        dp = prod * s;
    } else {
        scaled_value q(1.0);
        double s = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            if (k == m) continue;
            q *= (x - f[k]);
            s += 1.0 / (x - f[k]);
        }
        double d = x - f[m];
        p = q * d;
        dp = q * (1.0 + d * s);
    }
}

double eval_basis(const recurrence_table& table, int j, double x, basis_form form) {
    if (x < 0.0) throw config_error("eval_basis: x must be >= 0");
    if (j < 0 || j >= table.n_max)
        throw config_error("eval_basis: basis index needs norms up to j, so j < n_max");
    scaled_value v = eval_poly(table, j, x) / table.c[j].sqrt();
    if (form == basis_form::weight_scaled) {
        v *= scaled_value::exp(-0.5 * x * x);
        if (table.spec.nu != 0) v *= std::pow(x, table.spec.nu / 2);
    }
    return v.collapse_checked();
}

} // namespace kinspec
