#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "sot/geometry.hpp"
#include "sot/reflector.hpp"
#include "sot/solver.hpp"

namespace sot {

nlohmann::json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

/// Measure file format: {"dim": d, "points": [[...]], "weights": [...]}
/// with every coordinate and weight printed to 17 significant digits, so
/// values survive a round trip bit for bit.
std::string measure_to_json_text(const DiscreteMeasure& m);

nlohmann::json plan_to_json(const TransportPlan& plan, const DualPotentials& duals,
                            double total_cost);

nlohmann::json reflector_to_json(const ReflectorSpec& spec);
ReflectorSpec reflector_from_json(const nlohmann::json& j);

/// Wavefront OBJ text for a triangulated surface (1-based face indices).
std::string surface_to_obj(const SurfaceMesh& mesh, const std::string& header_comment = "");

/// FNV-1a over the canonical dump of a JSON document, as a hex string.
/// Stable across runs, used to stamp artifacts with their configuration.
std::string config_hash(const nlohmann::json& config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Formats a double with enough digits to round-trip exactly.
std::string format_full(double v);

}  // namespace sot
