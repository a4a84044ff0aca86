#include "geor2/csvio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "geor2/error.hpp"

namespace geor2 {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_missing(const std::string& f) {
  std::string lower = f;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "na" || lower == "nan" || lower == "null";
}

}  // namespace

Dataset parse_dataset_csv(std::istream& in, const std::vector<std::string>& covariates,
                          const std::string& source) {
  auto fail = [&](long line, const std::string& what) -> void {
    std::ostringstream os;
    os << source << ":" << line << ": " << what;
    throw InputError(os.str());
  };

  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) fail(1, "empty file (header row required)");
  ++line_no;
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const std::vector<std::string> header = split_fields(trim(line));
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) fail(line_no, "empty column name at position " + std::to_string(c + 1));
    if (!index.emplace(header[c], c).second) fail(line_no, "duplicate column '" + header[c] + "'");
  }
  std::vector<std::string> wanted = {"id", "x1", "x2", "m", "y"};
  for (const auto& cov : covariates) {
    if (std::find(wanted.begin(), wanted.end(), cov) != wanted.end() && cov != "x1" && cov != "x2")
      fail(line_no, "covariate '" + cov + "' collides with a reserved column");
    if (std::count(covariates.begin(), covariates.end(), cov) > 1)
      fail(line_no, "covariate '" + cov + "' requested twice");
  }
  for (const auto& name : wanted)
    if (!index.count(name)) fail(line_no, "missing required column '" + name + "'");
  for (const auto& cov : covariates)
    if (!index.count(cov)) fail(line_no, "missing covariate column '" + cov + "'");

  std::vector<std::string> ids;
  std::vector<std::array<double, 4>> core;  // x1, x2, m, y
  std::vector<std::vector<double>> covs;
  auto number = [&](const std::vector<std::string>& fields, const std::string& col) {
    const std::string& f = fields[index.at(col)];
    if (is_missing(f)) fail(line_no, "missing value in column '" + col + "'");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
      fail(line_no, "column '" + col + "': cannot parse '" + f + "' as a finite number");
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(trim(line));
    if (fields.size() != header.size()) {
      std::ostringstream os;
      os << "expected " << header.size() << " fields, found " << fields.size();
      fail(line_no, os.str());
    }
    const std::string& id = fields[index.at("id")];
    if (is_missing(id)) fail(line_no, "missing value in column 'id'");
    ids.push_back(id);
    core.push_back({number(fields, "x1"), number(fields, "x2"), number(fields, "m"),
                    number(fields, "y")});
    std::vector<double> row;
    for (const auto& cov : covariates) row.push_back(number(fields, cov));
    covs.push_back(std::move(row));
  }
  if (ids.empty()) fail(line_no, "no data rows");

  const Eigen::Index n = static_cast<Eigen::Index>(ids.size());
  const Eigen::Index k = static_cast<Eigen::Index>(covariates.size());
  Dataset data;
  data.ids = std::move(ids);
  data.coords.resize(n, 2);
  data.trials.resize(n);
  data.y.resize(n);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.coords(i, 0) = core[i][0];
    data.coords(i, 1) = core[i][1];
    data.trials(i) = core[i][2];
    data.y(i) = core[i][3];
    for (Eigen::Index j = 0; j < k; ++j) x(i, j) = covs[i][j];
  }
  data.design = with_intercept(x);
  data.covariate_names = covariates;
  return data;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset read_dataset_csv(const std::string& path, const std::vector<std::string>& covariates) {
  std::istringstream in(read_file(path));
  return parse_dataset_csv(in, covariates, path);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  // Covariates named after the coordinate columns are already written.
  std::vector<Eigen::Index> extra;
  for (std::size_t j = 0; j < data.covariate_names.size(); ++j) {
    const auto& name = data.covariate_names[j];
    if (name != "x1" && name != "x2") extra.push_back(static_cast<Eigen::Index>(j) + 1);
  }
  os << "id,x1,x2,m,y";
  for (const Eigen::Index j : extra) os << ',' << data.covariate_names[j - 1];
  os << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    os << (static_cast<Eigen::Index>(data.ids.size()) == data.size() ? data.ids[i]
                                                                      : std::to_string(i + 1));
    os << ',' << format_double(data.coords(i, 0)) << ',' << format_double(data.coords(i, 1))
       << ',' << format_double(data.trials(i)) << ',' << format_double(data.y(i));
    for (const Eigen::Index j : extra) os << ',' << format_double(data.design(i, j));
    os << '\n';
  }
}

bool looks_like_lonlat(const Eigen::MatrixXd& coords) {
  return (coords.col(0).array().abs() <= 180.0).all() &&
         (coords.col(1).array().abs() <= 90.0).all();
}

}  // namespace geor2
