// Compares the OpenMP node-parallel basis kernels against the serial
// root-product reference implementations, plus the downstream evaluation and
// evolution stages that sit on top of them. Usage: bench_kernels [n] [reps].

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "kinspec/galerkin.hh"
#include "kinspec/orthopoly.hh"
#include "kinspec/quadrature.hh"

using namespace kinspec;

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double best_seconds(int reps, F&& body) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    body();
    const double dt = std::chrono::duration<double>(clock_type::now() - t0).count();
    if (dt < best) best = dt;
  }
  return best;
}

} // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 120;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  if (n < 2 || reps < 1) {
    std::fprintf(stderr, "usage: bench_kernels [n >= 2] [reps >= 1]\n");
    return 1;
  }

  weight_spec spec;
  spec.validate();
  const recurrence_table table = build_recurrence(spec, n);
  const quadrature_rule rule = composite_rule(table, n, table.panel_order);
  std::printf("n = %d, quadrature nodes = %zu, omp_max_threads = %d, reps = %d (best-of)\n", n,
              rule.size(), omp_get_max_threads(), reps);

  double checksum = 0.0;
  const double t_val = best_seconds(reps, [&] {
    checksum += basis_node_matrix(table, n, rule).squaredNorm();
  });
  const double t_val_ref = best_seconds(reps, [&] {
    checksum += basis_node_matrix_reference(table, n, rule).squaredNorm();
  });
  const psi_fun psi(&chandrasekhar_psi);
  const double t_der = best_seconds(reps, [&] {
    checksum += basis_deriv_node_matrix(table, n, rule, psi).squaredNorm();
  });
  const double t_der_ref = best_seconds(reps, [&] {
    checksum += basis_deriv_node_matrix_reference(table, n, rule, psi).squaredNorm();
  });

  const galerkin_operator op = assemble(table, n);
  const Eigen::VectorXd alpha0 = project_initial([](double x) { return x; }, op);
  std::vector<double> xs(2001);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = 15.0 * static_cast<double>(i) / static_cast<double>(xs.size() - 1);
  const double t_eval = best_seconds(reps, [&] {
    const auto u = evaluate_solution(op, alpha0, xs, solution_scaling::exp_half);
    checksum += u[u.size() / 2];
  });
  const double t_evolve = best_seconds(reps, [&] {
    for (int k = 0; k < 200; ++k) checksum += evolve(op, alpha0, 1e-3 * (k + 1)).sum();
  });

  std::printf("%-28s %12s %12s %8s\n", "kernel", "parallel[s]", "serial[s]", "speedup");
  std::printf("%-28s %12.4f %12.4f %8.2f\n", "basis value matrix", t_val, t_val_ref,
              t_val_ref / t_val);
  std::printf("%-28s %12.4f %12.4f %8.2f\n", "basis derivative matrix", t_der, t_der_ref,
              t_der_ref / t_der);
  std::printf("%-28s %12.4f\n", "evaluate 2001 points", t_eval);
  std::printf("%-28s %12.4f\n", "evolve x 200 times", t_evolve);
  std::printf("(checksum %.6g)\n", checksum);
  return 0;
}
