#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>
#include <Eigen/Dense>

#include "kinspec/orthopoly.hh"
#include "kinspec/quadrature.hh"

namespace kinspec {

// Pointwise scaling applied to reconstructed solutions before collapsing the
// extended-range accumulator to an ordinary double.
enum class solution_scaling { none, exp_half, weight };

// Projected evolution operator: triangular factors of the discrete mass and
// stiffness forms plus the singular system that diagonalizes the dynamics.
// S holds the eigen-frequencies s_j (ascending, S(0) == 0 exactly); the decay
// rates of the evolution are s_j^2.
struct galerkin_operator {
    weight_spec spec;
    int n = 0;
    Eigen::MatrixXd R1;       // n x n upper triangular, positive diagonal
    Eigen::MatrixXd R2_tilde; // (n-1) x (n-1) upper triangular, positive diagonal
    Eigen::MatrixXd V;        // n x n orthogonal, column 0 = e_0 (zero mode)
    Eigen::VectorXd S;        // ascending, S(0) = 0
    quadrature_rule rule;     // assembly rule, reused for projections/moments
    Eigen::MatrixXd E1;       // node-basis matrix, kept only when requested
    std::shared_ptr<const recurrence_table> table; // defining family
};

// Node-basis kernels. Entry (k, j) is sqrt(w(x_k) mu_k) phi_j(x_k) with
// w(x) = x^2 e^{-x^2} (the Hilbert-space measure, independent of the family's
// own weight exponent). The deriv variant carries sqrt(Psi w mu) phi_j'(x_k)
// and drops the constant column, returning n-1 columns for j = 1..n-1.
// The plain versions run the normalized three-term recurrence per node and
// parallelize over nodes; the _reference versions evaluate the root-product
// form serially and exist as the ground truth for tests and benchmarks.
Eigen::MatrixXd basis_node_matrix(const recurrence_table& table, int n,
                                  const quadrature_rule& rule);
Eigen::MatrixXd basis_node_matrix_reference(const recurrence_table& table, int n,
                                            const quadrature_rule& rule);
Eigen::MatrixXd basis_deriv_node_matrix(const recurrence_table& table, int n,
                                        const quadrature_rule& rule, const psi_fun& psi);
Eigen::MatrixXd basis_deriv_node_matrix_reference(const recurrence_table& table, int n,
                                                  const quadrature_rule& rule,
                                                  const psi_fun& psi);

galerkin_operator assemble(const recurrence_table& table, int n,
                           const psi_fun& psi = psi_fun(&chandrasekhar_psi),
                           bool keep_basis_matrix = false);

// Projection of initial data onto the corrected orthonormal basis:
// beta_i = <f, phi_i>_w by quadrature, then alpha = R1^{-T} beta.
Eigen::VectorXd project_initial(const std::function<double(double)>& f,
                                const galerkin_operator& op);

// Closed-form projection coefficients for the worked initial conditions
// f(x) = x (example 1) and f(x) = x^2 (example 2) on the half-line nu=2
// families; the even example-1 series is truncated at n.
Eigen::VectorXd analytic_alpha(int example, parity_kind parity, int n);

// Two-hump initial condition supported on (0, 15): a pair of power-law bumps
// cut off by exp(-15/(15-x)). The bare value peaks near 1e40; the physically
// scaled u e^{-x^2/2} peaks at order 1 near x = 12.75. Evaluated in log space
// so neither hump over- or underflows prematurely.
double two_hump_initial(double x);

// Exact-in-time evolution alpha(t) = V exp(-S^2 t) V^T alpha0.
Eigen::VectorXd evolve(const galerkin_operator& op, const Eigen::VectorXd& alpha0, double t);

// Eigenbasis amplitudes (s_j^2, gamma_j) with gamma_j = exp(-s_j^2 t) V_j^T alpha0.
std::vector<std::pair<double, double>> eigenmode_amplitudes(const galerkin_operator& op,
                                                            const Eigen::VectorXd& alpha0,
                                                            double t, bool include_zero_mode);

// Pointwise reconstruction u(x) = sum_j alpha_j [Phi(x) R1^{-1}]_j, the
// optional scaling folded into the extended-range accumulation.
std::vector<double> evaluate_solution(const galerkin_operator& op, const Eigen::VectorXd& alpha,
                                      const std::vector<double>& xs, solution_scaling scaling);

// Weighted moment <u, x^k>_w via the assembly rule.
double moment(const galerkin_operator& op, const Eigen::VectorXd& alpha, int k);

// Entropy S = -||u||_H^2; the coefficient form is exact, the quadrature form
// is the independent cross-check.
double entropy(const galerkin_operator& op, const Eigen::VectorXd& alpha);
double entropy_quadrature(const galerkin_operator& op, const Eigen::VectorXd& alpha);

// Eigenfunction of the projected operator nearest the target decay rate:
// returns (s_j^2, evaluator of column j of Phi(x) R1^{-1} V).
std::pair<double, std::function<double(double)>> eigenfunction_of_PL(const galerkin_operator& op,
                                                                     double target);

} // namespace kinspec
