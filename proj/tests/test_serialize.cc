#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "json.hpp"

#include "kinspec/errors.hh"
#include "kinspec/galerkin.hh"
#include "kinspec/serialize.hh"

using namespace kinspec;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* stem) {
  fs::path d = fs::temp_directory_path() / (std::string(stem) + "." + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_table(const recurrence_table& x, const recurrence_table& y) {
  if (!(x.spec == y.spec) || x.n_max != y.n_max || x.panel_order != y.panel_order ||
      x.tail_panels != y.tail_panels)
    return false;
  if (x.a != y.a || x.b != y.b || x.roots != y.roots) return false;
  if (x.c.size() != y.c.size()) return false;
  for (std::size_t i = 0; i < x.c.size(); ++i)
    if (x.c[i].sig != y.c[i].sig || x.c[i].e2 != y.c[i].e2) return false;
  return true;
}

} // namespace

TEST_CASE("recurrence tables survive the JSON round trip bitwise") {
  weight_spec spec;
  spec.domain = domain_kind::truncated;
  spec.x_max = 6.0;
  const recurrence_table table = build_recurrence(spec, 10);
  const recurrence_table back = table_from_json(table_to_json(table));
  CHECK(same_table(table, back));

  weight_spec even_spec;
  even_spec.parity = parity_kind::even;
  const recurrence_table even_table = build_recurrence(even_spec, 8);
  CHECK(same_table(even_table, table_from_json(table_to_json(even_table))));
}

TEST_CASE("table JSON tolerates extra keys but rejects damage") {
  const recurrence_table table = build_recurrence(weight_spec{}, 6);
  json j = table_to_json(table);

  json annotated = j;
  annotated["metadata"] = {{"source", "unit test"}};
  CHECK(same_table(table, table_from_json(annotated)));

  json wrong_version = j;
  wrong_version["format_version"] = 99;
  CHECK_THROWS_AS((void)table_from_json(wrong_version), config_error);

  json missing = j;
  missing.erase("a");
  CHECK_THROWS_AS((void)table_from_json(missing), config_error);

  json truncated = j;
  truncated["a"].erase(truncated["a"].size() - 1);
  CHECK_THROWS_AS((void)table_from_json(truncated), config_error);

  CHECK_THROWS_AS((void)table_from_json(json::array()), config_error);
}

TEST_CASE("quadrature rules survive the JSON round trip bitwise") {
  const recurrence_table table = build_recurrence(weight_spec{}, 8);
  const quadrature_rule rule = composite_rule(table, 8);
  const quadrature_rule back = rule_from_json(rule_to_json(rule));
  CHECK(back.nodes == rule.nodes);
  CHECK(back.weights == rule.weights);
  CHECK(back.tag == rule.tag);
}

TEST_CASE("operator bundles reload into identical dynamics") {
  const recurrence_table table = build_recurrence(weight_spec{}, 8);
  const galerkin_operator op = assemble(table, 6);
  const galerkin_operator back = operator_from_json(operator_to_json(op));

  CHECK(back.n == op.n);
  CHECK(back.spec == op.spec);
  CHECK((back.R1 - op.R1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.R2_tilde - op.R2_tilde).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.V - op.V).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.S - op.S).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.rule.nodes == op.rule.nodes);
  REQUIRE(back.table != nullptr);
  CHECK(same_table(*back.table, *op.table));

  const Eigen::VectorXd alpha0 = project_initial([](double x) { return x; }, op);
  const Eigen::VectorXd alpha0_back = project_initial([](double x) { return x; }, back);
  CHECK((alpha0 - alpha0_back).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd at = evolve(op, alpha0, 0.7);
  CHECK((at - evolve(back, alpha0_back, 0.7)).cwiseAbs().maxCoeff() == 0.0);
  const std::vector<double> xs{0.3, 1.0, 2.2};
  const auto u1 = evaluate_solution(op, at, xs, solution_scaling::none);
  const auto u2 = evaluate_solution(back, at, xs, solution_scaling::none);
  CHECK(u1 == u2);

  json damaged = operator_to_json(op);
  damaged["R1"]["rows"] = op.n + 1;
  CHECK_THROWS_AS((void)operator_from_json(damaged), config_error);
}

TEST_CASE("atomic writes leave complete files and no temporaries") {
  const fs::path dir = fresh_dir("kinspec_atomic");
  const fs::path target = dir / "out.txt";
  write_text_atomic(target.string(), "first\n");
  CHECK(slurp(target) == "first\n");
  write_text_atomic(target.string(), "second version\n");
  CHECK(slurp(target) == "second version\n");
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++count;
  }
  CHECK(count == 1);
  fs::remove_all(dir);
}

TEST_CASE("hash and numeric formatting are stable") {
  CHECK(fnv1a_hash("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash("kinspec") == 0x95b56164ef7f45eeull);

  for (double v : {0.1, 1.0 / 3.0, M_PI, 1e-308, 6.02e23, -2.5, 2.0, 0.0}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(2.0) == "2");

  const json meta = {{"command", "evolve"}, {"n", 8}};
  const std::string line = csv_metadata_line(meta);
  REQUIRE(line.size() > 3);
  CHECK(line.substr(0, 2) == "# ");
  CHECK(line.back() == '\n');
  CHECK(json::parse(line.substr(2)) == meta);
}

TEST_CASE("reference-solution CSV carries metadata and the scaled column") {
  const fs::path dir = fresh_dir("kinspec_eigcsv");
  const fs::path target = dir / "ref.csv";
  const eigen_solution sol = solve_ode(1.0, 3.0, 1e-10);
  save_eigen_solution_csv(target.string(), sol, {{"note", "unit test"}});

  std::ifstream in(target);
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line.substr(0, 2) == "# ");
  const json meta = json::parse(line.substr(2));
  CHECK(meta.at("lambda").get<double>() == 1.0);
  CHECK(meta.at("note").get<std::string>() == "unit test");
  CHECK(meta.at("A0").is_null()); // not fitted
  REQUIRE(std::getline(in, line));
  CHECK(line == "x,u,u_scaled");
  std::size_t rows = 0;
  double x = 0.0, u = 0.0, us = 0.0;
  while (std::getline(in, line)) {
    char comma;
    std::istringstream row(line);
    row >> x >> comma >> u >> comma >> us;
    ++rows;
  }
  CHECK(rows == sol.samples.size());
  CHECK(x == sol.samples.back()[0]);
  CHECK(us == doctest::Approx(u * std::exp(-x * x / 2)).epsilon(1e-15));
  fs::remove_all(dir);
}

TEST_CASE("the table cache reuses deeper tables and rebuilds shallower ones") {
  const fs::path dir = fresh_dir("kinspec_cache");
  weight_spec spec;
  spec.domain = domain_kind::truncated;
  spec.x_max = 6.0;

  const recurrence_table t8 = load_or_build_table(dir.string(), spec, 8);
  CHECK(t8.n_max == 8);
  int files = 0;
  fs::path cache_file;
  for (const auto& e : fs::directory_iterator(dir)) {
    cache_file = e.path();
    ++files;
  }
  REQUIRE(files == 1);
  const std::string bytes_after_build = slurp(cache_file);

  // Shallower request: served from the cached deeper table, file untouched.
  const recurrence_table t6 = load_or_build_table(dir.string(), spec, 6);
  CHECK(t6.n_max == 8);
  CHECK(slurp(cache_file) == bytes_after_build);
  CHECK(same_table(t6, t8));

  // Deeper request: rebuilt and the cache file replaced.
  const recurrence_table t12 = load_or_build_table(dir.string(), spec, 12);
  CHECK(t12.n_max == 12);
  CHECK(slurp(cache_file) != bytes_after_build);
  for (int j = 0; j < 8; ++j) {
    CHECK(t12.a[j] == t8.a[j]);
    CHECK(t12.b[j] == t8.b[j]);
  }

  // Different families get different cache entries.
  (void)load_or_build_table(dir.string(), weight_spec{}, 6);
  files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 2);
  fs::remove_all(dir);
}
