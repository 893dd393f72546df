#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "kinspec/quadrature.hh"

namespace kinspec {

// Hybrid quadrature grid: Legendre nodes on [0, 2.5] joined with transformed
// Laguerre nodes on (2.5, inf). Weights approximate the plain dx measure and
// integrate p(x^2) x e^{-x^2} exactly on the tail for deg p < 2m.
struct hybrid_grid {
    int n = 0; // total points
    int m = 0; // tail points
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Tail sizing: a third of the points by default, or the legacy rule
// (1 point for n <= 12, else 2).
enum class tail_sizing { third, legacy };

hybrid_grid build_hybrid_grid(int n, tail_sizing sizing = tail_sizing::third);

// Conservative 3-point flux discretization of the diffusion operator on the
// grid; rows act on nodal values of u and annihilate constants exactly.
struct tridiagonal_operator {
    int n = 0;
    std::vector<double> sub, diag, super;
    hybrid_grid grid;
};

tridiagonal_operator assemble_fd(const hybrid_grid& grid,
                                 const psi_fun& psi = psi_fun(&chandrasekhar_psi));

// Exact-in-time evolution through the eigendecomposition of the
// diagonally-symmetrized operator.
std::vector<double> evolve_fd(const tridiagonal_operator& op, const std::vector<double>& U0,
                              double t);

// (H-norm error vs a reference function, entropy) using the grid weights
// against the measure x^2 e^{-x^2} dx.
std::pair<double, double> fd_error_norms(const std::vector<double>& U,
                                         const std::function<double(double)>& reference,
                                         const hybrid_grid& grid);

// Discrete mass sum U_i x_i^2 e^{-x_i^2} w_i.
double fd_mass(const std::vector<double>& U, const hybrid_grid& grid);

} // namespace kinspec
