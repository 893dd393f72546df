#ifndef KINSPEC_QUADRATURE_HH
#define KINSPEC_QUADRATURE_HH

#include <functional>
#include <string>
#include <vector>

namespace kinspec {

struct recurrence_table;

// Nodes/weights of a Gaussian rule (standalone or composite). Nodes are
// strictly increasing and weights positive.
struct quadrature_rule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::string tag;

    std::size_t size() const { return nodes.size(); }
};

// Classical Gauss-Legendre rule affinely mapped to [lo, hi]; weights sum to
// hi - lo. Nodes/weights come from the Jacobi-matrix eigendecomposition
// (Golub-Welsch), as everywhere else in this library.
quadrature_rule gauss_legendre(int order, double lo, double hi);

// Gauss-Laguerre rule for weight e^{-t} on [0, inf); weights sum to 1.
quadrature_rule gauss_laguerre(int order);

// Composite per-panel Gauss-Legendre rule tied to a polynomial family:
// panel endpoints at the zeros of p_j plus the domain origin, tail panels
// beyond the largest zero (half-line) or a subdivided final span up to x_max
// (truncated). panel_order <= 0 picks up the table's build-time order.
quadrature_rule composite_rule(const recurrence_table& table, int j, int panel_order = 0);

// Plain weighted sum; throws numerical_error if f is non-finite at a node.
double integrate(const quadrature_rule& rule, const std::function<double(double)>& f);

// Diffusion coefficient Psi(x) = [erf(x) - (2/sqrt(pi)) x e^{-x^2}]/(2x^3):
// positive, strictly decreasing, Psi(0+) = 2/(3 sqrt(pi)), decaying like
// 1/(2x^3). The closed form loses all digits near 0 (the numerator is
// O(x^3)), so x < 0.01 switches to the Maclaurin series.
double chandrasekhar_psi(double x);

using psi_fun = std::function<double(double)>;

} // namespace kinspec

#endif
