#pragma once

// Versioned JSON model artifacts written by `geor2 fit` and consumed by the
// reporting commands.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "geor2/mcml.hpp"
#include "geor2/posterior.hpp"

namespace geor2 {

inline constexpr int kArtifactSchemaVersion = 1;

struct ModelArtifact {
  int schema_version = kArtifactSchemaVersion;
  std::string method;  // "mcml" or "linear_ml"
  std::string family;
  std::string link;
  std::vector<std::string> covariates;
  GlgmParams params;
  std::vector<std::string> parameter_names;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  std::vector<Interval> ci95;
  nlohmann::json schedule = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string data_hash;
  std::string config_hash;
};

nlohmann::json artifact_to_json(const ModelArtifact& artifact);
// Throws InputError on a missing field or unsupported schema_version.
ModelArtifact artifact_from_json(const nlohmann::json& j);
ModelArtifact load_artifact(const std::string& path);

void write_json_file(const std::string& path, const nlohmann::json& j);

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace geor2
