#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "kinspec/eigenref.hh"
#include "kinspec/errors.hh"
#include "kinspec/fdgrid.hh"
#include "kinspec/galerkin.hh"
#include "kinspec/orthopoly.hh"
#include "kinspec/serialize.hh"

namespace {

using nlohmann::json;
using namespace kinspec;

struct out_context {
  std::filesystem::path dir;
  json base_metadata; // command, config hash, precision
};

std::string file_path(const out_context& out, const std::string& name) {
  return (out.dir / name).string();
}

// Strict schema validation: every present key must be in the allowed list.
void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw config_error(where + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) ok = true;
    if (!ok) throw config_error(where + ": unknown field '" + item.key() + "'");
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw config_error(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw config_error(where + ": missing required field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw config_error(std::string("field '") + key + "': " + e.what());
  }
}

weight_spec parse_weight(const json& cfg) {
  weight_spec spec;
  if (!cfg.contains("weight")) {
    spec.validate();
    return spec;
  }
  const json& j = cfg.at("weight");
  require_keys(j, "weight", {"nu", "domain", "x_max", "parity"});
  spec.nu = field_or<int>(j, "nu", 2);
  const std::string domain = field_or<std::string>(j, "domain", "half_line");
  if (domain == "half_line")
    spec.domain = domain_kind::half_line;
  else if (domain == "truncated")
    spec.domain = domain_kind::truncated;
  else
    throw config_error("weight.domain must be 'half_line' or 'truncated'");
  spec.x_max = field_or<double>(j, "x_max", 0.0);
  const std::string parity = field_or<std::string>(j, "parity", "full");
  if (parity == "full")
    spec.parity = parity_kind::full;
  else if (parity == "even")
    spec.parity = parity_kind::even;
  else
    throw config_error("weight.parity must be 'full' or 'even'");
  spec.validate();
  return spec;
}

json weight_to_metadata(const weight_spec& spec) {
  json j{{"nu", spec.nu},
         {"domain", spec.domain == domain_kind::half_line ? "half_line" : "truncated"},
         {"parity", spec.parity == parity_kind::full ? "full" : "even"}};
  if (spec.domain == domain_kind::truncated) j["x_max"] = spec.x_max;
  return j;
}

std::vector<double> parse_times(const json& j, const std::string& where) {
  require_keys(j, where, {"kind", "start", "stop", "count"});
  const std::string kind = field_or<std::string>(j, "kind", "log");
  const double start = field_required<double>(j, "start", where);
  const double stop = field_required<double>(j, "stop", where);
  const int count = field_required<int>(j, "count", where);
  if (count < 1) throw config_error(where + ".count must be >= 1");
  if (!(start <= stop)) throw config_error(where + ".start must be <= stop");
  std::vector<double> ts(static_cast<std::size_t>(count));
  if (kind == "log") {
    if (!(start > 0.0)) throw config_error(where + ": log spacing needs start > 0");
    const double la = std::log(start), lb = std::log(stop);
    for (int i = 0; i < count; ++i)
      ts[static_cast<std::size_t>(i)] =
          count == 1 ? start : std::exp(la + (lb - la) * i / (count - 1));
  } else if (kind == "linear") {
    for (int i = 0; i < count; ++i)
      ts[static_cast<std::size_t>(i)] =
          count == 1 ? start : start + (stop - start) * i / (count - 1);
  } else {
    throw config_error(where + ".kind must be 'log' or 'linear'");
  }
  return ts;
}

std::vector<double> parse_x_grid(const json& j) {
  require_keys(j, "x_grid", {"start", "stop", "count"});
  const double start = field_required<double>(j, "start", "x_grid");
  const double stop = field_required<double>(j, "stop", "x_grid");
  const int count = field_required<int>(j, "count", "x_grid");
  if (count < 1) throw config_error("x_grid.count must be >= 1");
  if (!(start <= stop)) throw config_error("x_grid.start must be <= stop");
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    xs[static_cast<std::size_t>(i)] = count == 1 ? start : start + (stop - start) * i / (count - 1);
  return xs;
}

std::function<double(double)> initial_condition(const std::string& id) {
  if (id == "x") return [](double x) { return x; };
  if (id == "x2") return [](double x) { return x * x; };
  if (id == "one") return [](double) { return 1.0; };
  if (id == "two_hump") return [](double x) { return two_hump_initial(x); };
  throw config_error("initial must be one of 'x', 'x2', 'two_hump', 'one' (got '" + id + "')");
}

double log_measure(double x, double mu) { return std::log(mu) + 2.0 * std::log(x) - x * x; }

// -------------------------------------------------------------------------
// recurrence: serialize a table plus a coefficient report with a fitted
// large-k asymptote of b_k.

void cmd_recurrence(const json& cfg, const out_context& out) {
  require_keys(cfg, "config",
               {"command", "weight", "n", "closed_form", "panel_order", "tail_panels", "output"});
  const weight_spec spec = parse_weight(cfg);
  const int n = field_required<int>(cfg, "n", "config");
  const bool closed_form = field_or<bool>(cfg, "closed_form", false);
  const int panel_order = field_or<int>(cfg, "panel_order", 20);
  const int tail_panels = field_or<int>(cfg, "tail_panels", 6);
  const std::string output = field_or<std::string>(cfg, "output", "recurrence");

  recurrence_table table;
  if (closed_form) {
    if (spec.parity != parity_kind::even || spec.domain != domain_kind::half_line || spec.nu != 2)
      throw config_error("closed_form requires the even half-line family with nu = 2");
    table = even_recurrence_closed_form(n);
  } else {
    table = build_recurrence(spec, n, panel_order, tail_panels);
  }

  json meta = out.base_metadata;
  meta["weight"] = weight_to_metadata(spec);
  meta["n"] = n;
  meta["closed_form"] = closed_form;

  // Fit the tail of b_k with a domain-appropriate two-parameter model.
  const int k_lo = (n + 1) / 2, k_hi = n - 1;
  std::string model;
  double p0 = 0.0, p1 = 0.0;
  bool fitted = false;
  if (k_hi - k_lo >= 2) {
    Eigen::MatrixXd M(k_hi - k_lo + 1, 2);
    Eigen::VectorXd rhs(k_hi - k_lo + 1);
    for (int k = k_lo; k <= k_hi; ++k) {
      const int r = k - k_lo;
      const double kk = k;
      if (spec.domain == domain_kind::truncated) {
        model = "limit_plus_inverse_square";
        M(r, 0) = 1.0;
        M(r, 1) = 1.0 / ((kk + 1.0) * (kk + 1.0));
      } else if (spec.parity == parity_kind::full) {
        model = "linear_plus_inverse";
        M(r, 0) = kk + 1.0;
        M(r, 1) = 1.0 / (kk + 1.0);
      } else {
        model = "quadratic_plus_linear";
        M(r, 0) = kk * kk;
        M(r, 1) = kk;
      }
      rhs(r) = table.b[static_cast<std::size_t>(k)];
    }
    Eigen::Vector2d sol = M.colPivHouseholderQr().solve(rhs);
    p0 = sol(0);
    p1 = sol(1);
    fitted = true;
    meta["asymptote"] = json{{"model", model}, {"p0", p0}, {"p1", p1}, {"k_window", {k_lo, k_hi}}};
  }

  json table_json = table_to_json(table);
  table_json["metadata"] = meta;
  write_text_atomic(file_path(out, output + ".json"), table_json.dump() + "\n");

  std::ostringstream csv;
  csv << csv_metadata_line(meta) << "k,a,b,b_fit\n";
  for (int k = 0; k < n; ++k) {
    double fit = std::numeric_limits<double>::quiet_NaN();
    if (fitted) {
      const double kk = k;
      if (model == "limit_plus_inverse_square")
        fit = p0 + p1 / ((kk + 1.0) * (kk + 1.0));
      else if (model == "linear_plus_inverse")
        fit = p0 * (kk + 1.0) + p1 / (kk + 1.0);
      else
        fit = p0 * kk * kk + p1 * kk;
    }
    csv << k << ',' << format_double(table.a[static_cast<std::size_t>(k)]) << ','
        << format_double(table.b[static_cast<std::size_t>(k)]) << ',' << format_double(fit)
        << '\n';
  }
  write_text_atomic(file_path(out, output + "_asymptote.csv"), csv.str());
}

// -------------------------------------------------------------------------
// evolve: project an initial condition and emit the solution and the
// eigenmode amplitudes over a time grid.

void cmd_evolve(const json& cfg, const out_context& out) {
  require_keys(cfg, "config",
               {"command", "weight", "n", "initial", "times", "x_grid", "mode_floor",
                "panel_order", "tail_panels", "output"});
  const weight_spec spec = parse_weight(cfg);
  const int n = field_required<int>(cfg, "n", "config");
  const std::string initial = field_required<std::string>(cfg, "initial", "config");
  if (!cfg.contains("times")) throw config_error("config: missing required field 'times'");
  const std::vector<double> ts = parse_times(cfg.at("times"), "times");
  if (!cfg.contains("x_grid")) throw config_error("config: missing required field 'x_grid'");
  const std::vector<double> xs = parse_x_grid(cfg.at("x_grid"));
  const bool mode_floor = field_or<bool>(cfg, "mode_floor", false);
  const int panel_order = field_or<int>(cfg, "panel_order", 20);
  const int tail_panels = field_or<int>(cfg, "tail_panels", 6);
  const std::string output = field_or<std::string>(cfg, "output", "evolve");

  const auto f = initial_condition(initial);
  const recurrence_table table = build_recurrence(spec, n, panel_order, tail_panels);
  const galerkin_operator op = assemble(table, n);
  const Eigen::VectorXd alpha0 = project_initial(f, op);

  json meta = out.base_metadata;
  meta["weight"] = weight_to_metadata(spec);
  meta["n"] = n;
  meta["initial"] = initial;
  meta["mode_floor"] = mode_floor ? 1e-40 : 0.0;

  const double floor = mode_floor ? 1e-40 : 0.0;
  std::ostringstream sol_csv, mode_csv;
  sol_csv << csv_metadata_line(meta) << "t,x,u,u_scaled,mass,entropy\n";
  mode_csv << csv_metadata_line(meta) << "t,j,abs_alpha,s_squared,abs_gamma\n";
  for (double t : ts) {
    const Eigen::VectorXd alpha_t = evolve(op, alpha0, t);
    const double mass = moment(op, alpha_t, 0);
    const double ent = entropy(op, alpha_t);
    const std::vector<double> u = evaluate_solution(op, alpha_t, xs, solution_scaling::none);
    const std::vector<double> u_scaled =
        evaluate_solution(op, alpha_t, xs, solution_scaling::exp_half);
    for (std::size_t i = 0; i < xs.size(); ++i)
      sol_csv << format_double(t) << ',' << format_double(xs[i]) << ',' << format_double(u[i])
              << ',' << format_double(u_scaled[i]) << ',' << format_double(mass) << ','
              << format_double(ent) << '\n';
    const auto amps = eigenmode_amplitudes(op, alpha0, t, true);
    for (int j = 0; j < n; ++j) {
      const auto& [rate, gamma] = amps[static_cast<std::size_t>(j)];
      mode_csv << format_double(t) << ',' << j << ','
               << format_double(std::abs(alpha_t(j)) + floor) << ',' << format_double(rate) << ','
               << format_double(std::abs(gamma) + floor) << '\n';
    }
  }
  write_text_atomic(file_path(out, output + ".csv"), sol_csv.str());
  write_text_atomic(file_path(out, output + "_modes.csv"), mode_csv.str());
}

// -------------------------------------------------------------------------
// compare: full, even, and hybrid-grid finite differences against a
// high-resolution truncated-domain reference.

void cmd_compare(const json& cfg, const out_context& out) {
  require_keys(cfg, "config",
               {"command", "initial", "n_values", "reference_n", "times", "gs2_tail", "output"});
  const std::string initial = field_or<std::string>(cfg, "initial", "x");
  const std::vector<int> n_values =
      field_or<std::vector<int>>(cfg, "n_values", std::vector<int>{8, 16, 32});
  if (n_values.empty()) throw config_error("n_values must be non-empty");
  const int reference_n = field_or<int>(cfg, "reference_n", 400);
  std::vector<double> ts;
  if (cfg.contains("times"))
    ts = parse_times(cfg.at("times"), "times");
  else
    ts = parse_times(json{{"kind", "log"}, {"start", 1e-4}, {"stop", 1e3}, {"count", 90}},
                     "times");
  const std::string gs2_tail = field_or<std::string>(cfg, "gs2_tail", "third");
  if (gs2_tail != "third" && gs2_tail != "legacy")
    throw config_error("gs2_tail must be 'third' or 'legacy'");
  const std::string output = field_or<std::string>(cfg, "output", "compare");

  const auto f = initial_condition(initial);

  // Reference: full-parity truncated [0, 15] solve kept in factored form;
  // its quadrature rule doubles as the error-norm rule.
  weight_spec ref_spec;
  ref_spec.domain = domain_kind::truncated;
  ref_spec.x_max = 15.0;
  ref_spec.validate();
  const recurrence_table ref_table = build_recurrence(ref_spec, reference_n);
  const galerkin_operator ref_op = assemble(ref_table, reference_n, psi_fun(&chandrasekhar_psi),
                                            /*keep_basis_matrix=*/true);
  const Eigen::VectorXd ref_alpha0 = project_initial(f, ref_op);

  const auto N_ref = static_cast<Eigen::Index>(ref_op.rule.size());
  Eigen::VectorXd ref_fold(N_ref);
  for (Eigen::Index k = 0; k < N_ref; ++k)
    ref_fold(k) =
        std::exp(0.5 * log_measure(ref_op.rule.nodes[static_cast<std::size_t>(k)],
                                   ref_op.rule.weights[static_cast<std::size_t>(k)]));

  // Reference state per time: sqrt(w mu)-weighted nodal values + entropy.
  std::vector<Eigen::VectorXd> ref_values(ts.size());
  std::vector<Eigen::VectorXd> ref_alpha(ts.size());
  std::vector<double> ref_entropy(ts.size());
  for (std::size_t it = 0; it < ts.size(); ++it) {
    ref_alpha[it] = evolve(ref_op, ref_alpha0, ts[it]);
    Eigen::VectorXd y = ref_op.R1.triangularView<Eigen::Upper>().solve(ref_alpha[it]);
    ref_values[it] = ref_op.E1 * y;
    ref_entropy[it] = entropy(ref_op, ref_alpha[it]);
  }

  json meta = out.base_metadata;
  meta["initial"] = initial;
  meta["reference"] = json{{"scheme", "full"},
                           {"weight", weight_to_metadata(ref_spec)},
                           {"n", reference_n}};
  std::ostringstream csv;
  csv << csv_metadata_line(meta) << "scheme,n,t,h_error,entropy_error\n";

  const int n_top = *std::max_element(n_values.begin(), n_values.end());
  for (const std::string scheme : {"full", "even", "gs2"}) {
    if (scheme == "gs2") {
      for (int n : n_values) {
        const hybrid_grid grid =
            build_hybrid_grid(n, gs2_tail == "third" ? tail_sizing::third : tail_sizing::legacy);
        const tridiagonal_operator L = assemble_fd(grid);
        std::vector<double> U0(grid.nodes.size());
        for (std::size_t i = 0; i < grid.nodes.size(); ++i) U0[i] = f(grid.nodes[i]);
        for (std::size_t it = 0; it < ts.size(); ++it) {
          const std::vector<double> U = evolve_fd(L, U0, ts[it]);
          const std::vector<double> ref_at_nodes =
              evaluate_solution(ref_op, ref_alpha[it], grid.nodes, solution_scaling::none);
          const auto [h_err, ent] = fd_error_norms(
              U,
              [&](double x) {
                for (std::size_t i = 0; i < grid.nodes.size(); ++i)
                  if (grid.nodes[i] == x) return ref_at_nodes[i];
                return 0.0;
              },
              grid);
          csv << scheme << ',' << n << ',' << format_double(ts[it]) << ','
              << format_double(h_err) << ',' << format_double(std::abs(ent - ref_entropy[it]))
              << '\n';
        }
      }
      continue;
    }
    weight_spec spec;
    spec.parity = scheme == "even" ? parity_kind::even : parity_kind::full;
    spec.validate();
    const recurrence_table table = build_recurrence(spec, n_top);
    for (int n : n_values) {
      const galerkin_operator op = assemble(table, n);
      const Eigen::VectorXd alpha0 = project_initial(f, op);
      for (std::size_t it = 0; it < ts.size(); ++it) {
        const Eigen::VectorXd alpha_t = evolve(op, alpha0, ts[it]);
        const std::vector<double> u =
            evaluate_solution(op, alpha_t, ref_op.rule.nodes, solution_scaling::none);
        double err2 = 0.0;
        for (Eigen::Index k = 0; k < N_ref; ++k) {
          const double d = ref_fold(k) * u[static_cast<std::size_t>(k)] - ref_values[it](k);
          err2 += d * d;
        }
        const double ent = entropy(op, alpha_t);
        csv << scheme << ',' << n << ',' << format_double(ts[it]) << ','
            << format_double(std::sqrt(err2)) << ','
            << format_double(std::abs(ent - ref_entropy[it])) << '\n';
      }
    }
  }
  write_text_atomic(file_path(out, output + ".csv"), csv.str());
}

// -------------------------------------------------------------------------
// eigfun: discrete eigenfunction nearest a target decay rate, its continuous
// counterpart, the scaled residual, and the large-x envelope model.

void cmd_eigfun(const json& cfg, const out_context& out) {
  require_keys(cfg, "config",
               {"command", "weight", "n", "target_lambda", "tol", "x_max_ode", "fit_window",
                "residual_window", "x_grid", "panel_order", "tail_panels", "output"});
  const weight_spec spec = parse_weight(cfg);
  const int n = field_required<int>(cfg, "n", "config");
  const double target = field_or<double>(cfg, "target_lambda", 1.0);
  const double tol = field_or<double>(cfg, "tol", 1e-12);
  const double x_max_ode = field_or<double>(
      cfg, "x_max_ode", spec.domain == domain_kind::truncated ? spec.x_max : 15.0);
  const auto fit_window =
      field_or<std::vector<double>>(cfg, "fit_window", std::vector<double>{8.0, 14.0});
  const auto residual_window = field_or<std::vector<double>>(
      cfg, "residual_window", std::vector<double>{0.125, std::min(6.0, x_max_ode)});
  if (fit_window.size() != 2 || residual_window.size() != 2)
    throw config_error("fit_window and residual_window must be [lo, hi] pairs");
  std::vector<double> xs;
  if (cfg.contains("x_grid"))
    xs = parse_x_grid(cfg.at("x_grid"));
  else
    xs = parse_x_grid(json{
        {"start", 0.0},
        {"stop", spec.domain == domain_kind::truncated ? spec.x_max : 15.0},
        {"count", 1501}});
  const int panel_order = field_or<int>(cfg, "panel_order", 20);
  const int tail_panels = field_or<int>(cfg, "tail_panels", 6);
  const std::string output = field_or<std::string>(cfg, "output", "eigfun");

  const recurrence_table table = build_recurrence(spec, n, panel_order, tail_panels);
  const galerkin_operator op = assemble(table, n);
  int best = 0;
  {
    double dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double d = std::abs(op.S(j) * op.S(j) - target);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
  }
  const double rate = op.S(best) * op.S(best);
  const Eigen::VectorXd alpha_p = op.V.col(best);

  eigen_solution sol = solve_ode(rate, x_max_ode, tol);
  const auto [A0, theta0] = fit_envelope(sol, fit_window[0], fit_window[1]);
  sol.A0 = A0;
  sol.theta0 = theta0;

  const auto u_p = [&](double x) {
    return evaluate_solution(op, alpha_p, {x}, solution_scaling::none)[0];
  };
  const residual_report report =
      residual_diagnostic(u_p, sol, 0.0, residual_window[0], residual_window[1]);

  json meta = out.base_metadata;
  meta["weight"] = weight_to_metadata(spec);
  meta["n"] = n;
  meta["target_lambda"] = target;
  meta["lambda"] = rate;
  meta["mode_index"] = best;
  meta["ode_tol"] = tol;
  meta["A0"] = A0;
  meta["theta0"] = theta0;
  meta["residual_scale"] = report.scale;
  meta["residual_max_abs"] = report.max_abs;

  const std::vector<double> u = evaluate_solution(op, alpha_p, xs, solution_scaling::none);
  const std::vector<double> u_scaled =
      evaluate_solution(op, alpha_p, xs, solution_scaling::exp_half);
  double gibbs = 0.0;
  for (double v : u_scaled) gibbs = std::max(gibbs, std::abs(v));
  meta["max_scaled_amplitude"] = gibbs;

  std::ostringstream fn_csv;
  fn_csv << csv_metadata_line(meta) << "x,u,u_scaled\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    fn_csv << format_double(xs[i]) << ',' << format_double(u[i]) << ','
           << format_double(u_scaled[i]) << '\n';
  write_text_atomic(file_path(out, output + ".csv"), fn_csv.str());

  std::ostringstream coeff_csv;
  coeff_csv << csv_metadata_line(meta) << "j,alpha\n";
  for (int j = 0; j < n; ++j)
    coeff_csv << j << ',' << format_double(alpha_p(j)) << '\n';
  write_text_atomic(file_path(out, output + "_coeffs.csv"), coeff_csv.str());

  save_eigen_solution_csv(file_path(out, output + "_reference.csv"), sol, meta);

  std::ostringstream res_csv;
  res_csv << csv_metadata_line(meta) << "x,residual\n";
  for (const auto& [x, r] : report.extrema)
    res_csv << format_double(x) << ',' << format_double(r) << '\n';
  write_text_atomic(file_path(out, output + "_residual.csv"), res_csv.str());

  std::ostringstream env_csv;
  env_csv << csv_metadata_line(meta) << "x,p,q,u_model_scaled\n";
  for (double x : xs) {
    if (x < std::max(1.0, fit_window[0] * 0.5)) continue;
    const auto [p, q] = envelope(rate, x);
    env_csv << format_double(x) << ',' << format_double(p) << ',' << format_double(q) << ','
            << format_double(A0 * p * std::cos(q - theta0)) << '\n';
  }
  write_text_atomic(file_path(out, output + "_envelope.csv"), env_csv.str());
}

// -------------------------------------------------------------------------
// bench: wall-clock table for setup (factorize/eigensolve) and evolution
// phases of the spectral and finite-difference schemes. Informational only.

void cmd_bench(const json& cfg, const out_context& out) {
  require_keys(cfg, "config",
               {"command", "n_values", "initial", "times", "repeats", "gs2_tail", "output"});
  const std::vector<int> n_values =
      field_or<std::vector<int>>(cfg, "n_values", std::vector<int>{8, 16, 32});
  if (n_values.empty()) throw config_error("n_values must be non-empty");
  const std::string initial = field_or<std::string>(cfg, "initial", "x");
  std::vector<double> ts;
  if (cfg.contains("times"))
    ts = parse_times(cfg.at("times"), "times");
  else
    ts = parse_times(json{{"kind", "log"}, {"start", 1e-4}, {"stop", 1e3}, {"count", 90}},
                     "times");
  const int repeats = field_or<int>(cfg, "repeats", 3);
  if (repeats < 1) throw config_error("repeats must be >= 1");
  const std::string gs2_tail = field_or<std::string>(cfg, "gs2_tail", "third");
  if (gs2_tail != "third" && gs2_tail != "legacy")
    throw config_error("gs2_tail must be 'third' or 'legacy'");
  const std::string output = field_or<std::string>(cfg, "output", "bench");

  const auto f = initial_condition(initial);
  using clock = std::chrono::steady_clock;
  const auto seconds_since = [](clock::time_point t0) {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  json rows = json::array();
  for (int n : n_values) {
    double a_best = std::numeric_limits<double>::infinity();
    double b_best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = clock::now();
      weight_spec spec;
      spec.validate();
      const recurrence_table table = build_recurrence(spec, n);
      const galerkin_operator op = assemble(table, n);
      a_best = std::min(a_best, seconds_since(t0));
      const Eigen::VectorXd alpha0 = project_initial(f, op);
      const auto t1 = clock::now();
      double sink = 0.0;
      for (double t : ts) sink += evolve(op, alpha0, t).sum();
      b_best = std::min(b_best, seconds_since(t1));
      if (!std::isfinite(sink)) throw numerical_error("bench: non-finite evolution result");
    }
    rows.push_back(json{{"scheme", "spectral"},
                        {"n", n},
                        {"phase_a_seconds", a_best},
                        {"phase_b_seconds", b_best}});

    a_best = b_best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = clock::now();
      const hybrid_grid grid =
          build_hybrid_grid(n, gs2_tail == "third" ? tail_sizing::third : tail_sizing::legacy);
      const tridiagonal_operator L = assemble_fd(grid);
      a_best = std::min(a_best, seconds_since(t0));
      std::vector<double> U0(grid.nodes.size());
      for (std::size_t i = 0; i < grid.nodes.size(); ++i) U0[i] = f(grid.nodes[i]);
      const auto t1 = clock::now();
      double sink = 0.0;
      for (double t : ts) {
        const std::vector<double> U = evolve_fd(L, U0, t);
        sink += U.back();
      }
      b_best = std::min(b_best, seconds_since(t1));
      if (!std::isfinite(sink)) throw numerical_error("bench: non-finite evolution result");
    }
    rows.push_back(json{{"scheme", "fd_hybrid"},
                        {"n", n},
                        {"phase_a_seconds", a_best},
                        {"phase_b_seconds", b_best}});
  }

  json doc;
  doc["metadata"] = out.base_metadata;
  doc["metadata"]["initial"] = initial;
  doc["metadata"]["time_count"] = ts.size();
  doc["metadata"]["repeats"] = repeats;
  doc["metadata"]["note"] =
      "wall times are machine-local; fd_hybrid phase B includes its per-call eigensolve";
  doc["rows"] = rows;
  write_text_atomic(file_path(out, output + ".json"), doc.dump(2) + "\n");
}

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("config file is not valid JSON: " + std::string(e.what()));
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral and finite-difference solvers for the energy-diffusion kinetic model"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".", precision = "double";
  long long seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (created if absent)");
  app.add_option("--precision", precision, "arithmetic precision (only 'double')");
  app.add_option("--seed", seed, "reserved; accepted for interface stability");
  app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");
  CLI::App* sub_recurrence = app.add_subcommand("recurrence", "build and report a family table");
  CLI::App* sub_evolve = app.add_subcommand("evolve", "evolve an initial condition");
  CLI::App* sub_compare = app.add_subcommand("compare", "schemes vs reference error table");
  CLI::App* sub_eigfun = app.add_subcommand("eigfun", "discrete vs continuous eigenfunction");
  CLI::App* sub_bench = app.add_subcommand("bench", "wall-clock timing table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (precision != "double")
      throw config_error("unsupported precision '" + precision + "' (only 'double')");
    if (threads < 0) throw config_error("--threads must be >= 0");
    if (threads > 0) omp_set_num_threads(threads);
    (void)seed;

    const json cfg = load_config(config_path);
    if (!cfg.is_object()) throw config_error("config root must be a JSON object");
    const std::string command = sub_recurrence->parsed()  ? "recurrence"
                                : sub_evolve->parsed()    ? "evolve"
                                : sub_compare->parsed()   ? "compare"
                                : sub_eigfun->parsed()    ? "eigfun"
                                : sub_bench->parsed()     ? "bench"
                                                          : "";
    if (cfg.contains("command") && cfg.at("command").get<std::string>() != command)
      throw config_error("config 'command' does not match the invoked subcommand");

    out_context out;
    out.dir = out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out.dir, ec);
    if (ec) throw config_error("cannot create output directory: " + ec.message());
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(cfg.dump())));
    out.base_metadata =
        json{{"command", command}, {"config_hash", hash}, {"precision", "double"}};

    if (command == "recurrence")
      cmd_recurrence(cfg, out);
    else if (command == "evolve")
      cmd_evolve(cfg, out);
    else if (command == "compare")
      cmd_compare(cfg, out);
    else if (command == "eigfun")
      cmd_eigfun(cfg, out);
    else
      cmd_bench(cfg, out);
    return 0;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
