#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "coag/model.hpp"

namespace coag {

/// Round-trip-safe decimal rendering (17 significant digits).
std::string format_real(double x);

ModelSpec model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ModelSpec& spec);
ModelSpec read_model_file(const std::string& path);

nlohmann::json validation_to_json(const ValidationReport& report);

/// Header `n_1,...,n_m,w`, one row per stored composition.
void write_distribution_csv(std::ostream& os, const SizeDistribution& dist);
nlohmann::json distribution_to_json(const SizeDistribution& dist);
SizeDistribution distribution_from_json(const nlohmann::json& doc);

/// FNV-1a over the canonical JSON form of the spec.
std::string spec_hash(const ModelSpec& spec);

}  // namespace coag
