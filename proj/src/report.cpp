#include "geor2/report.hpp"

#include <algorithm>
#include <ostream>

#include "geor2/csvio.hpp"

namespace geor2 {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::string optional_csv(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

json r2_report_json(const R2Report& r, const std::string& family, const std::string& config_hash) {
  return {{"family", family},
          {"r2_glm", r.r2_glm},
          {"r2_glgm", r.r2_glgm},
          {"r2_glgm_mc_se", optional_json(r.r2_glgm_mc_se)},
          {"partial_r2", optional_json(r.partial_r2)},
          {"partial_r2_mc_se", optional_json(r.partial_r2_mc_se)},
          {"B", r.B},
          {"seed", r.seed},
          {"config_hash", config_hash}};
}

void write_r2_report_csv(std::ostream& os, const R2Report& r, const std::string& config_hash) {
  os << "r2_glm,r2_glgm,r2_glgm_mc_se,partial_r2,partial_r2_mc_se,B,seed,config_hash\n";
  os << format_double(r.r2_glm) << ',' << format_double(r.r2_glgm) << ','
     << optional_csv(r.r2_glgm_mc_se) << ',' << optional_csv(r.partial_r2) << ','
     << optional_csv(r.partial_r2_mc_se) << ',' << r.B << ',' << r.seed << ',' << config_hash
     << '\n';
}

void write_se_compare_csv(std::ostream& os, const SeComparison& cmp) {
  os << "site_id,x1,x2,se_without,se_with,rel_reduction\n";
  for (const SeRecord& s : cmp.sites) {
    os << s.site_id << ',' << format_double(s.x1) << ',' << format_double(s.x2) << ','
       << format_double(s.se_without) << ',' << format_double(s.se_with) << ','
       << format_double(s.rel_reduction) << '\n';
  }
}

std::vector<int> quintile_classes(const Eigen::VectorXd& values) {
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const double last = static_cast<double>(sorted.size() - 1);
  double cuts[4];
  for (int k = 1; k <= 4; ++k) {
    const double pos = last * k / 5.0;
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    cuts[k - 1] = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
  std::vector<int> out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    int cls = 1;
    for (const double c : cuts) cls += values(i) > c;
    out.push_back(cls);
  }
  return out;
}

void write_prevalence_points_csv(std::ostream& os, const Dataset& data) {
  const Eigen::VectorXd prevalence = data.y.cwiseQuotient(data.trials);
  const std::vector<int> cls = quintile_classes(prevalence);
  os << "site_id,x1,x2,m,y,prevalence,quintile\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    os << (static_cast<Eigen::Index>(data.ids.size()) == data.size() ? data.ids[i]
                                                                      : std::to_string(i + 1))
       << ',' << format_double(data.coords(i, 0)) << ',' << format_double(data.coords(i, 1)) << ','
       << format_double(data.trials(i)) << ',' << format_double(data.y(i)) << ','
       << format_double(prevalence(i)) << ',' << cls[i] << '\n';
  }
}

}  // namespace geor2
