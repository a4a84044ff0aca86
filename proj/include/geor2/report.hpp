#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "geor2/dataset.hpp"
#include "geor2/r2engine.hpp"

namespace geor2 {

nlohmann::json r2_report_json(const R2Report& report, const std::string& family,
                              const std::string& config_hash);
// One header row and one value row; unavailable values are left empty.
void write_r2_report_csv(std::ostream& os, const R2Report& report, const std::string& config_hash);

// site_id, x1, x2, se_without, se_with, rel_reduction
void write_se_compare_csv(std::ostream& os, const SeComparison& cmp);

// site_id, x1, x2, m, y, prevalence, quintile (1..5, by empirical prevalence)
void write_prevalence_points_csv(std::ostream& os, const Dataset& data);

// Quintile class of each value: k if it lies in (q_{k-1}, q_k], using
// linearly interpolated sample quantiles.
std::vector<int> quintile_classes(const Eigen::VectorXd& values);

}  // namespace geor2
