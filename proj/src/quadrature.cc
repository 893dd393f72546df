#include "kinspec/quadrature.hh"

#include <cmath>
#include <map>
#include <mutex>
#include <Eigen/Dense>

#include "kinspec/errors.hh"
#include "kinspec/orthopoly.hh"

namespace kinspec {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
// matrix, weights are mu0 times the squared first components of the
// normalized eigenvectors.
void golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& offdiag, double mu0,
                  std::vector<double>& nodes, std::vector<double>& weights) {
    int n = static_cast<int>(diag.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw numerical_error("golub_welsch: tridiagonal eigensolver failed");
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        double q0 = es.eigenvectors()(0, i);
        weights[i] = mu0 * q0 * q0;
    }
}

// Base [-1,1] Legendre rules are reused across every composite panel, so
// cache them per order.
const std::pair<std::vector<double>, std::vector<double>>& legendre_base(int order) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd off(std::max(order - 1, 0));
    for (int k = 1; k < order; ++k) {
        double b = k * k / (4.0 * k * k - 1.0);
        off(k - 1) = std::sqrt(b);
    }
    auto& entry = cache[order];
    golub_welsch(diag, off, 2.0, entry.first, entry.second);
    return entry;
}

} // namespace

quadrature_rule gauss_legendre(int order, double lo, double hi) {
    if (order < 1) throw config_error("gauss_legendre: order must be >= 1");
    if (!(lo < hi)) throw config_error("gauss_legendre: need lo < hi");
    const auto& base = legendre_base(order);
    quadrature_rule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int i = 0; i < order; ++i) {
        rule.nodes[i] = mid + half * base.first[i];
        rule.weights[i] = half * base.second[i];
    }
    rule.tag = "legendre(order=" + std::to_string(order) + ")";
    return rule;
}

quadrature_rule gauss_laguerre(int order) {
    if (order < 1) throw config_error("gauss_laguerre: order must be >= 1");
    Eigen::VectorXd diag(order), off(std::max(order - 1, 0));
    for (int k = 0; k < order; ++k) diag(k) = 2.0 * k + 1.0;
    for (int k = 1; k < order; ++k) off(k - 1) = std::sqrt(static_cast<double>(k) * k);
    quadrature_rule rule;
    golub_welsch(diag, off, 1.0, rule.nodes, rule.weights);
    rule.tag = "laguerre(order=" + std::to_string(order) + ")";
    return rule;
}

quadrature_rule composite_rule(const recurrence_table& table, int j, int panel_order) {
    if (j < 0 || j > table.n_max)
        throw config_error("composite_rule: degree outside table range");
    int order = panel_order > 0 ? panel_order : table.panel_order;
    auto edges = panel_edges(table.spec, table.roots[j], table.tail_panels);
    const auto& base = legendre_base(order);
    quadrature_rule rule;
    rule.nodes.reserve((edges.size() - 1) * order);
    rule.weights.reserve((edges.size() - 1) * order);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        double mid = 0.5 * (edges[p] + edges[p + 1]);
        double half = 0.5 * (edges[p + 1] - edges[p]);
        for (int i = 0; i < order; ++i) {
            rule.nodes.push_back(mid + half * base.first[i]);
            rule.weights.push_back(half * base.second[i]);
        }
    }
    rule.tag = "composite(j=" + std::to_string(j) + ",order=" + std::to_string(order) + ")";
    return rule;
}

double integrate(const quadrature_rule& rule, const std::function<double(double)>& f) {
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        double v = f(rule.nodes[k]);
        if (!std::isfinite(v))
            throw numerical_error("integrate: integrand non-finite at node x=" +
                                  std::to_string(rule.nodes[k]));
        sum += v * rule.weights[k];
    }
    return sum;
}

double chandrasekhar_psi(double x) {
    constexpr double two_over_sqrt_pi = 1.1283791670955126;
    if (x < 0.01) {
        // (2/sqrt(pi)) sum_{n>=1} (-1)^{n+1} n/(n!(2n+1)) x^{2n-2}
        double x2 = x * x;
        double s = 1.0 / 3.0 +
                   x2 * (-1.0 / 5.0 +
                         x2 * (1.0 / 14.0 +
                               x2 * (-1.0 / 54.0 + x2 * (1.0 / 264.0 - x2 / 1560.0))));
        return two_over_sqrt_pi * s;
    }
    return (std::erf(x) - two_over_sqrt_pi * x * std::exp(-x * x)) / (2.0 * x * x * x);
}

} // namespace kinspec
