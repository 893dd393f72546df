#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include "kinspec/galerkin.hh"
#include "kinspec/orthopoly.hh"
#include "kinspec/quadrature.hh"
#include "kinspec/serialize.hh"

using namespace kinspec;

namespace {

weight_spec half_line_full() { return weight_spec{}; }

weight_spec half_line_even() {
  weight_spec s;
  s.parity = parity_kind::even;
  return s;
}

weight_spec truncated_full() {
  weight_spec s;
  s.nu = 0;
  s.domain = domain_kind::truncated;
  s.x_max = 8.0;
  return s;
}

void check_columns_close(const Eigen::MatrixXd& fast, const Eigen::MatrixXd& ref) {
  REQUIRE(fast.rows() == ref.rows());
  REQUIRE(fast.cols() == ref.cols());
  for (int j = 0; j < ref.cols(); ++j) {
    const double scale = ref.col(j).norm();
    REQUIRE(scale > 0.0);
    CHECK((fast.col(j) - ref.col(j)).norm() < 1e-12 * scale);
  }
}

} // namespace

TEST_CASE("recurrence kernels match the root-product reference") {
  const psi_fun psi(&chandrasekhar_psi);
  for (const weight_spec& spec : {half_line_full(), half_line_even(), truncated_full()}) {
    const int n = 40;
    const recurrence_table table = build_recurrence(spec, n);
    const quadrature_rule rule = composite_rule(table, n);

    check_columns_close(basis_node_matrix(table, n, rule),
                        basis_node_matrix_reference(table, n, rule));
    check_columns_close(basis_deriv_node_matrix(table, n, rule, psi),
                        basis_deriv_node_matrix_reference(table, n, rule, psi));
  }
}

TEST_CASE("kernel output is bitwise independent of the thread count") {
  const int n = 32;
  const recurrence_table table = build_recurrence(half_line_full(), n);
  const quadrature_rule rule = composite_rule(table, n);
  const psi_fun psi(&chandrasekhar_psi);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Eigen::MatrixXd B1 = basis_node_matrix(table, n, rule);
  const Eigen::MatrixXd D1 = basis_deriv_node_matrix(table, n, rule, psi);
  omp_set_num_threads(4);
  const Eigen::MatrixXd B4 = basis_node_matrix(table, n, rule);
  const Eigen::MatrixXd D4 = basis_deriv_node_matrix(table, n, rule, psi);
  omp_set_num_threads(saved);

  CHECK((B1 - B4).cwiseAbs().maxCoeff() == 0.0);
  CHECK((D1 - D4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solution reconstruction is bitwise independent of the thread count") {
  const recurrence_table table = build_recurrence(half_line_full(), 24);
  const galerkin_operator op = assemble(table, 24);
  const Eigen::VectorXd alpha = project_initial([](double x) { return x; }, op);

  std::vector<double> xs;
  for (int i = 0; i <= 400; ++i) xs.push_back(8.0 * i / 400.0);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const std::vector<double> u1 = evaluate_solution(op, alpha, xs, solution_scaling::exp_half);
  omp_set_num_threads(4);
  const std::vector<double> u4 = evaluate_solution(op, alpha, xs, solution_scaling::exp_half);
  omp_set_num_threads(saved);
  CHECK(u1 == u4);
}

TEST_CASE("deep even basis survives weight underflow past x ~ 38.6") {
  // sqrt(w) vanishes as a double beyond x ~ 38.6 while phi_j grows to match,
  // so high-degree columns live exactly where a naive fold seeds zero. The
  // exponent-tracked recurrence must agree with the extended-range reference
  // there, and the quadrature Gram of the columns must stay the identity.
  const int n = 450;
  weight_spec spec;
  spec.parity = parity_kind::even;
  const recurrence_table table = load_or_build_table("kinspec_cache", spec, n);
  const quadrature_rule rule = composite_rule(table, n);
  REQUIRE(rule.nodes.back() > 40.0);

  const Eigen::MatrixXd E1 = basis_node_matrix(table, n, rule);
  const Eigen::MatrixXd G = E1.transpose() * E1;
  CHECK((G - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);

  // Spot-check the far nodes against the serial reference (restricted so the
  // O(n^2)-per-node reference stays fast).
  quadrature_rule far;
  std::vector<std::size_t> picked;
  for (std::size_t k = 0; k < rule.size(); k += 7)
    if (rule.nodes[k] > 38.0) {
      far.nodes.push_back(rule.nodes[k]);
      far.weights.push_back(rule.weights[k]);
      picked.push_back(k);
    }
  REQUIRE(far.size() > 20);
  const Eigen::MatrixXd ref = basis_node_matrix_reference(table, n, far);
  const psi_fun psi(&chandrasekhar_psi);
  const Eigen::MatrixXd ref_d = basis_deriv_node_matrix_reference(table, n, far, psi);
  const Eigen::MatrixXd fast_d = basis_deriv_node_matrix(table, n, far, psi);
  double worst = 0.0, worst_d = 0.0;
  for (std::size_t r = 0; r < picked.size(); ++r) {
    worst = std::max(worst,
                     (E1.row(static_cast<Eigen::Index>(picked[r])) - ref.row(static_cast<Eigen::Index>(r)))
                         .cwiseAbs()
                         .maxCoeff());
    worst_d = std::max(worst_d, (fast_d.row(static_cast<Eigen::Index>(r)) -
                                 ref_d.row(static_cast<Eigen::Index>(r)))
                                    .cwiseAbs()
                                    .maxCoeff());
  }
  CHECK(worst < 1e-12);
  CHECK(worst_d < 1e-12);
  // The far region genuinely carries order-one entries for the top degrees.
  CHECK(ref.cwiseAbs().maxCoeff() > 1e-3);
}
