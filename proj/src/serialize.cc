#include "kinspec/serialize.hh"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "kinspec/errors.hh"

namespace kinspec {

namespace {

constexpr int kFormatVersion = 1;

std::string domain_name(domain_kind d) {
  return d == domain_kind::half_line ? "half_line" : "truncated";
}

domain_kind domain_from_name(const std::string& s) {
  if (s == "half_line") return domain_kind::half_line;
  if (s == "truncated") return domain_kind::truncated;
  throw config_error("unknown domain: " + s);
}

std::string parity_name(parity_kind p) {
  return p == parity_kind::full ? "full" : "even";
}

parity_kind parity_from_name(const std::string& s) {
  if (s == "full") return parity_kind::full;
  if (s == "even") return parity_kind::even;
  throw config_error("unknown parity: " + s);
}

nlohmann::json spec_to_json(const weight_spec& spec) {
  return nlohmann::json{{"nu", spec.nu},
                        {"domain", domain_name(spec.domain)},
                        {"x_max", spec.x_max},
                        {"parity", parity_name(spec.parity)}};
}

weight_spec spec_from_json(const nlohmann::json& j) {
  weight_spec spec;
  spec.nu = j.at("nu").get<int>();
  spec.domain = domain_from_name(j.at("domain").get<std::string>());
  spec.x_max = j.at("x_max").get<double>();
  spec.parity = parity_from_name(j.at("parity").get<std::string>());
  spec.validate();
  return spec;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      data[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd mat_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw config_error("matrix payload has inconsistent dimensions");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

void check_version(const nlohmann::json& j, const char* what) {
  if (!j.is_object() || !j.contains("format_version"))
    throw config_error(std::string(what) + ": missing format_version");
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw config_error(std::string(what) + ": unsupported format_version");
}

[[noreturn]] void rethrow_as_config(const char* what, const std::exception& e) {
  throw config_error(std::string(what) + ": " + e.what());
}

} // namespace

nlohmann::json table_to_json(const recurrence_table& table) {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& v : table.c) c.push_back({v.sig, v.e2});
  return nlohmann::json{{"format_version", kFormatVersion},
                        {"spec", spec_to_json(table.spec)},
                        {"n_max", table.n_max},
                        {"panel_order", table.panel_order},
                        {"tail_panels", table.tail_panels},
                        {"a", table.a},
                        {"b", table.b},
                        {"c", c},
                        {"roots", table.roots}};
}

recurrence_table table_from_json(const nlohmann::json& j) {
  try {
    check_version(j, "recurrence table");
    recurrence_table table;
    table.spec = spec_from_json(j.at("spec"));
    table.n_max = j.at("n_max").get<int>();
    table.panel_order = j.at("panel_order").get<int>();
    table.tail_panels = j.at("tail_panels").get<int>();
    table.a = j.at("a").get<std::vector<double>>();
    table.b = j.at("b").get<std::vector<double>>();
    for (const auto& pair : j.at("c")) {
      if (!pair.is_array() || pair.size() != 2)
        throw config_error("norm entries must be [significand, exponent] pairs");
      table.c.push_back(
          scaled_value::from_parts(pair[0].get<double>(), pair[1].get<std::int64_t>()));
    }
    table.roots = j.at("roots").get<std::vector<std::vector<double>>>();
    const auto coeffs = static_cast<std::size_t>(table.n_max);
    if (table.n_max < 0 || table.a.size() != coeffs || table.b.size() != coeffs ||
        table.c.size() != coeffs || table.roots.size() != coeffs + 1)
      throw config_error("recurrence table arrays do not match n_max");
    for (std::size_t deg = 0; deg <= coeffs; ++deg)
      if (table.roots[deg].size() != deg)
        throw config_error("root list does not match its polynomial degree");
    return table;
  } catch (const nlohmann::json::exception& e) {
    rethrow_as_config("recurrence table", e);
  }
}

nlohmann::json rule_to_json(const quadrature_rule& rule) {
  return nlohmann::json{{"format_version", kFormatVersion},
                        {"tag", rule.tag},
                        {"nodes", rule.nodes},
                        {"weights", rule.weights}};
}

quadrature_rule rule_from_json(const nlohmann::json& j) {
  try {
    check_version(j, "quadrature rule");
    quadrature_rule rule;
    rule.tag = j.at("tag").get<std::string>();
    rule.nodes = j.at("nodes").get<std::vector<double>>();
    rule.weights = j.at("weights").get<std::vector<double>>();
    if (rule.nodes.size() != rule.weights.size())
      throw config_error("quadrature rule nodes and weights differ in length");
    return rule;
  } catch (const nlohmann::json::exception& e) {
    rethrow_as_config("quadrature rule", e);
  }
}

nlohmann::json operator_to_json(const galerkin_operator& op) {
  if (!op.table) throw config_error("operator bundle requires its recurrence table");
  return nlohmann::json{{"format_version", kFormatVersion},
                        {"spec", spec_to_json(op.spec)},
                        {"n", op.n},
                        {"R1", mat_to_json(op.R1)},
                        {"R2_tilde", mat_to_json(op.R2_tilde)},
                        {"V", mat_to_json(op.V)},
                        {"S", std::vector<double>(op.S.data(), op.S.data() + op.S.size())},
                        {"rule", rule_to_json(op.rule)},
                        {"table", table_to_json(*op.table)}};
}

galerkin_operator operator_from_json(const nlohmann::json& j) {
  try {
    check_version(j, "operator bundle");
    galerkin_operator op;
    op.spec = spec_from_json(j.at("spec"));
    op.n = j.at("n").get<int>();
    op.R1 = mat_from_json(j.at("R1"));
    op.R2_tilde = mat_from_json(j.at("R2_tilde"));
    op.V = mat_from_json(j.at("V"));
    const auto s = j.at("S").get<std::vector<double>>();
    op.S = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    op.rule = rule_from_json(j.at("rule"));
    op.table = std::make_shared<const recurrence_table>(table_from_json(j.at("table")));
    if (op.n < 1 || op.R1.rows() != op.n || op.R1.cols() != op.n || op.V.rows() != op.n ||
        op.V.cols() != op.n || op.S.size() != op.n ||
        op.R2_tilde.rows() != std::max(op.n - 1, 0) ||
        op.R2_tilde.cols() != std::max(op.n - 1, 0) || op.table->n_max < op.n)
      throw config_error("operator bundle dimensions are inconsistent");
    return op;
  } catch (const nlohmann::json::exception& e) {
    rethrow_as_config("operator bundle", e);
  }
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw config_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw config_error("cannot replace " + path + ": " + ec.message());
  }
}

std::uint64_t fnv1a_hash(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_metadata_line(const nlohmann::json& metadata) {
  return "# " + metadata.dump() + "\n";
}

void save_eigen_solution_csv(const std::string& path, const eigen_solution& sol,
                             nlohmann::json extra_metadata) {
  nlohmann::json meta = std::move(extra_metadata);
  meta["kind"] = "eigenfunction_profile";
  meta["lambda"] = sol.lambda;
  meta["tol"] = sol.tol;
  meta["A0"] = std::isfinite(sol.A0) ? nlohmann::json(sol.A0) : nlohmann::json();
  meta["theta0"] = std::isfinite(sol.theta0) ? nlohmann::json(sol.theta0) : nlohmann::json();
  std::ostringstream out;
  out << csv_metadata_line(meta);
  out << "x,u,u_scaled\n";
  for (const auto& s : sol.samples) {
    const double x = s[0];
    const double u = s[1];
    out << format_double(x) << ',' << format_double(u) << ','
        << format_double(u * std::exp(-0.5 * x * x)) << '\n';
  }
  write_text_atomic(path, out.str());
}

recurrence_table load_or_build_table(const std::string& cache_dir, const weight_spec& spec, int n,
                                     int panel_order, int tail_panels) {
  spec.validate();
  std::filesystem::create_directories(cache_dir);
  std::ostringstream key;
  key << "nu=" << spec.nu << "|domain=" << domain_name(spec.domain)
      << "|x_max=" << format_double(spec.x_max) << "|parity=" << parity_name(spec.parity)
      << "|panel_order=" << panel_order << "|tail_panels=" << tail_panels;
  char name[64];
  std::snprintf(name, sizeof(name), "table_%016llx.json",
                static_cast<unsigned long long>(fnv1a_hash(key.str())));
  const std::string path = (std::filesystem::path(cache_dir) / name).string();

  if (std::filesystem::exists(path)) {
    try {
      std::ifstream in(path, std::ios::binary);
      nlohmann::json j = nlohmann::json::parse(in);
      recurrence_table cached = table_from_json(j);
      const bool same_family = cached.spec.nu == spec.nu && cached.spec.domain == spec.domain &&
                               cached.spec.x_max == spec.x_max &&
                               cached.spec.parity == spec.parity &&
                               cached.panel_order == panel_order &&
                               cached.tail_panels == tail_panels;
      if (same_family && cached.n_max >= n) return cached;
    } catch (const std::exception&) {
      // Unreadable or stale cache entry: fall through and rebuild it.
    }
  }

  recurrence_table table = build_recurrence(spec, n, panel_order, tail_panels);
  write_text_atomic(path, table_to_json(table).dump());
  return table;
}

} // namespace kinspec
