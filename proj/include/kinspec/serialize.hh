#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "kinspec/eigenref.hh"
#include "kinspec/galerkin.hh"
#include "kinspec/orthopoly.hh"
#include "kinspec/quadrature.hh"

namespace kinspec {

// Versioned JSON round-trips. Extended-range norms are stored as
// significand/exponent pairs so arbitrarily deep tables survive the trip.
nlohmann::json table_to_json(const recurrence_table& table);
recurrence_table table_from_json(const nlohmann::json& j);

nlohmann::json rule_to_json(const quadrature_rule& rule);
quadrature_rule rule_from_json(const nlohmann::json& j);

nlohmann::json operator_to_json(const galerkin_operator& op);
galerkin_operator operator_from_json(const nlohmann::json& j);

// Writes via a temporary file in the same directory plus rename, so readers
// never observe partial content.
void write_text_atomic(const std::string& path, const std::string& content);

// FNV-1a 64-bit, used for config fingerprints in output metadata.
std::uint64_t fnv1a_hash(const std::string& data);

// Shortest exact decimal form used for all CSV numeric output.
std::string format_double(double v);

// '#'-prefixed JSON metadata line placed at the top of CSV outputs.
std::string csv_metadata_line(const nlohmann::json& metadata);

// CSV of (x, u, u e^{-x^2/2}) with a metadata header carrying lambda, the
// fitted envelope parameters, and any extra fields supplied by the caller.
void save_eigen_solution_csv(const std::string& path, const eigen_solution& sol,
                             nlohmann::json extra_metadata = nlohmann::json::object());

// Disk-cached table construction keyed by family and rule parameters; a
// cached table deeper than n is reused as-is (tables are nested), otherwise
// it is rebuilt at the requested depth and the cache file replaced.
recurrence_table load_or_build_table(const std::string& cache_dir, const weight_spec& spec, int n,
                                     int panel_order = 20, int tail_panels = 6);

} // namespace kinspec
