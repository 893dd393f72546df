#include "kinspec/fdgrid.hh"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>

#include "kinspec/errors.hh"

namespace kinspec {

namespace {

inline double h_weight(double x) { return x * x * std::exp(-x * x); }

} // namespace

hybrid_grid build_hybrid_grid(int n, tail_sizing sizing) {
    if (n < 4) throw config_error("build_hybrid_grid: need n >= 4");
    int m = sizing == tail_sizing::third ? n / 3 : (n <= 12 ? 1 : 2);
    if (n - m < 1) throw config_error("build_hybrid_grid: no interior points left");

    hybrid_grid g;
    g.n = n;
    g.m = m;

    auto leg = gauss_legendre(n - m, 0.0, 2.5);
    g.nodes = leg.nodes;
    g.weights = leg.weights;

    // Tail change of variables t = x^2 - 6.25: Laguerre nodes for e^{-t}
    // become x = sqrt(6.25 + t), and the weights are rescaled to the plain
    // dx measure (so that p(x^2) x e^{-x^2} integrates exactly).
    auto lag = gauss_laguerre(m);
    for (int j = 0; j < m; ++j) {
        double t = lag.nodes[j];
        double x = std::sqrt(6.25 + t);
        g.nodes.push_back(x);
        g.weights.push_back(lag.weights[j] * std::exp(t) / (2.0 * x));
    }
    return g;
}

tridiagonal_operator assemble_fd(const hybrid_grid& grid, const psi_fun& psi) {
    int n = grid.n;
    if (n < 3) throw config_error("assemble_fd: need at least 3 nodes");
    for (int i = 1; i < n; ++i)
        if (!(grid.nodes[i] > grid.nodes[i - 1]))
            throw config_error("assemble_fd: nodes must be strictly increasing");

    tridiagonal_operator op;
    op.n = n;
    op.grid = grid;
    op.sub.assign(n, 0.0);
    op.diag.assign(n, 0.0);
    op.super.assign(n, 0.0);

    // kappa at cell interfaces; zero-flux closure at both ends
    std::vector<double> kappa(n - 1), h(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        double xm = 0.5 * (grid.nodes[i] + grid.nodes[i + 1]);
        double pv = psi(xm);
        if (!(pv > 0.0) || !std::isfinite(pv))
            throw numerical_error("assemble_fd: diffusivity not positive/finite");
        h[i] = grid.nodes[i + 1] - grid.nodes[i];
        kappa[i] = pv * h_weight(xm);
    }
    for (int i = 0; i < n; ++i) {
        double cell = h_weight(grid.nodes[i]) * grid.weights[i];
        if (i + 1 < n) {
            op.super[i] = kappa[i] / (h[i] * cell);
            op.diag[i] -= op.super[i];
        }
        if (i > 0) {
            op.sub[i] = kappa[i - 1] / (h[i - 1] * cell);
            op.diag[i] -= op.sub[i];
        }
    }
    return op;
}

std::vector<double> evolve_fd(const tridiagonal_operator& op, const std::vector<double>& U0,
                              double t) {
    if (static_cast<int>(U0.size()) != op.n)
        throw config_error("evolve_fd: state length mismatch");
    if (!(t >= 0.0)) throw config_error("evolve_fd: time must be >= 0");
    int n = op.n;

    // similarity transform by d_i = sqrt(cell measure) makes the operator
    // symmetric tridiagonal; evolve in that frame
    Eigen::VectorXd d(n), diag(n), off(n - 1);
    for (int i = 0; i < n; ++i) {
        d(i) = std::sqrt(h_weight(op.grid.nodes[i]) * op.grid.weights[i]);
        diag(i) = op.diag[i];
    }
    for (int i = 0; i + 1 < n; ++i) off(i) = op.super[i] * d(i) / d(i + 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off);
    if (es.info() != Eigen::Success) throw numerical_error("evolve_fd: eigensolver failed");

    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = d(i) * U0[i];
    Eigen::VectorXd z = es.eigenvectors().transpose() * v;
    // The operator is negative semidefinite; any positive eigenvalue is
    // roundoff on the conserved mode and is pinned to zero so long-time
    // evolution stays bounded.
    for (int i = 0; i < n; ++i) z(i) *= std::exp(std::min(es.eigenvalues()(i), 0.0) * t);
    v = es.eigenvectors() * z;

    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = v(i) / d(i);
    return out;
}

std::pair<double, double> fd_error_norms(const std::vector<double>& U,
                                         const std::function<double(double)>& reference,
                                         const hybrid_grid& grid) {
    if (static_cast<int>(U.size()) != grid.n)
        throw config_error("fd_error_norms: state length mismatch");
    double err2 = 0.0, s = 0.0;
    for (int i = 0; i < grid.n; ++i) {
        double wm = h_weight(grid.nodes[i]) * grid.weights[i];
        double d = U[i] - reference(grid.nodes[i]);
        err2 += d * d * wm;
        s += U[i] * U[i] * wm;
    }
    return {std::sqrt(err2), -s};
}

double fd_mass(const std::vector<double>& U, const hybrid_grid& grid) {
    if (static_cast<int>(U.size()) != grid.n)
        throw config_error("fd_mass: state length mismatch");
    double m = 0.0;
    for (int i = 0; i < grid.n; ++i)
        m += U[i] * h_weight(grid.nodes[i]) * grid.weights[i];
    return m;
}

} // namespace kinspec
