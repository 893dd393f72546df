#ifndef KINSPEC_ORTHOPOLY_HH
#define KINSPEC_ORTHOPOLY_HH

#include <vector>
#include "kinspec/quadrature.hh"
#include "kinspec/scaled.hh"

namespace kinspec {

enum class domain_kind { half_line, truncated };
enum class parity_kind { full, even };

// Identifies one orthogonal polynomial family: weight x^nu e^{-x^2} on the
// half-line or on [0, x_max], either the full family or the even restriction
// (recurrence in the variable x^2).
struct weight_spec {
    int nu = 2;                               // 0, 2 or 4
    domain_kind domain = domain_kind::half_line;
    double x_max = 0.0;                       // used when domain == truncated
    parity_kind parity = parity_kind::full;

    void validate() const;
    bool operator==(const weight_spec&) const = default;
};

// Monic three-term recurrence p_{j+1} = (s - a_j) p_j - b_j p_{j-1} in the
// recurrence variable s (s = x for full parity, s = x^2 for even), plus
// squared norms c_j = <p_j, p_j> and per-degree zeros. Zeros are stored in
// the original variable x for both parities; tables are nested, so a table
// built for n serves any smaller dimension.
struct recurrence_table {
    weight_spec spec;
    int n_max = 0;
    std::vector<double> a;                    // n_max entries
    std::vector<double> b;                    // b[0] = 0
    std::vector<scaled_value> c;
    std::vector<std::vector<double>> roots;   // entries 0..n_max (zeros of p_j)
    int panel_order = 20;                     // build-time quadrature settings,
    int tail_panels = 6;                      // reused by composite_rule
};

enum class basis_form { unit, weight_scaled };

// Stieltjes construction: inner products by composite Gauss-Legendre panels
// delimited by the zeros of the current p_j (bootstrapped degree by degree),
// accumulated in scaled_value arithmetic. tail_panels is a minimum count for
// the geometric tail (ignored for truncated domains).
recurrence_table build_recurrence(const weight_spec& spec, int n, int panel_order = 20,
                                  int tail_panels = 6);

// Analytic table for (nu=2, half-line, even): a_j = 2j + 3/2, b_j = j(j+1/2),
// c_j = sqrt(pi)(2j+1)!/2^{2j+2}.
recurrence_table even_recurrence_closed_form(int n);

// Zeros of p_j (eigenvalues of the leading j-by-j Jacobi matrix), ascending,
// mapped back to x for even parity. j may run up to n_max.
std::vector<double> poly_roots(const recurrence_table& table, int j);

// Monic p_j(x) in product form over the stored zeros (for even parity the
// factors pair as (x - r)(x + r)), renormalized after every factor. Exact
// sign, exact zero at stored roots.
scaled_value eval_poly(const recurrence_table& table, int j, double x);

// Monic p_j and its x-derivative in one pass. The derivative uses the
// logarithmic sum p_j(x) * sum_k 1/(x - r_k); within a relative 1e-8 of the
// nearest root it switches to the product-rule form around that root, which
// stays exact as the root is crossed.
void eval_poly_pair(const recurrence_table& table, int j, double x, scaled_value& p,
                    scaled_value& dp);

// unit:          c_j^{-1/2} p_j(x)
// weight_scaled: rho(x)^{1/2} c_j^{-1/2} p_j(x), with the exponent of
//                rho^{1/2} folded into the scaled exponent before collapsing
//                (underflow-safe at large x). Throws on collapse overflow.
double eval_basis(const recurrence_table& table, int j, double x, basis_form form);

// Panel edge list shared by the Stieltjes bootstrap and composite_rule:
// origin + zeros of p_j, then the geometric tail (half-line, widths growing
// by 1.5x from the last root gap until both the minimum count and the
// weight < 1e-320 cutoff are met) or the subdivided final span (truncated).
// The degree-0 rule uses unit-width panels.
std::vector<double> panel_edges(const weight_spec& spec, const std::vector<double>& xroots,
                                int tail_panels);

} // namespace kinspec

#endif
