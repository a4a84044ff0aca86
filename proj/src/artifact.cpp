#include "geor2/artifact.hpp"

#include <fstream>
#include <limits>

#include "geor2/csvio.hpp"
#include "geor2/error.hpp"

namespace geor2 {

using nlohmann::json;

namespace {

// JSON has no NaN; fixed parameters carry null standard errors.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

json artifact_to_json(const ModelArtifact& a) {
  json j;
  j["schema_version"] = a.schema_version;
  j["method"] = a.method;
  j["family"] = a.family;
  j["link"] = a.link;
  j["covariates"] = a.covariates;
  j["params"] = {{"beta", std::vector<double>(a.params.beta.data(),
                                              a.params.beta.data() + a.params.beta.size())},
                 {"sigma2", a.params.cov.sigma2},
                 {"phi", a.params.cov.phi},
                 {"tau2", a.params.cov.tau2}};
  json table = json::array();
  for (std::size_t k = 0; k < a.parameter_names.size(); ++k) {
    table.push_back({{"name", a.parameter_names[k]},
                     {"estimate", a.estimates.at(k)},
                     {"std_error", number_or_null(a.std_errors.at(k))},
                     {"ci95", {number_or_null(a.ci95.at(k).lower), number_or_null(a.ci95.at(k).upper)}}});
  }
  j["estimates"] = table;
  j["std_error_scale"] = {{"beta", "natural"}, {"sigma2", "log"}, {"phi", "log"}, {"tau2", "log"}};
  j["schedule"] = a.schedule;
  j["seed"] = a.seed;
  j["diagnostics"] = a.diagnostics;
  j["data_hash"] = a.data_hash;
  j["config_hash"] = a.config_hash;
  return j;
}

ModelArtifact artifact_from_json(const json& j) {
  try {
    ModelArtifact a;
    a.schema_version = j.at("schema_version").get<int>();
    if (a.schema_version != kArtifactSchemaVersion)
      throw InputError("unsupported artifact schema_version " + std::to_string(a.schema_version));
    a.method = j.at("method").get<std::string>();
    a.family = j.at("family").get<std::string>();
    a.link = j.at("link").get<std::string>();
    a.covariates = j.at("covariates").get<std::vector<std::string>>();
    const json& p = j.at("params");
    const auto beta = p.at("beta").get<std::vector<double>>();
    a.params.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    a.params.cov = CovParams{p.at("sigma2").get<double>(), p.at("phi").get<double>(),
                             p.at("tau2").get<double>()};
    for (const json& row : j.at("estimates")) {
      a.parameter_names.push_back(row.at("name").get<std::string>());
      a.estimates.push_back(row.at("estimate").get<double>());
      a.std_errors.push_back(number_from(row.at("std_error")));
      a.ci95.push_back({number_from(row.at("ci95").at(0)), number_from(row.at("ci95").at(1))});
    }
    a.schedule = j.at("schedule");
    a.seed = j.at("seed").get<std::uint64_t>();
    a.diagnostics = j.at("diagnostics");
    a.data_hash = j.at("data_hash").get<std::string>();
    a.config_hash = j.at("config_hash").get<std::string>();
    if (static_cast<std::size_t>(a.params.beta.size()) != a.covariates.size() + 1)
      throw InputError("artifact beta length does not match its covariate list");
    return a;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model artifact: ") + e.what());
  }
}

ModelArtifact load_artifact(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
  return artifact_from_json(j);
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace geor2
