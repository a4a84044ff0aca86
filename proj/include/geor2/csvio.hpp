#pragma once

// Site-level CSV files: header row with at least id, x1, x2, m, y plus any
// covariate columns; comma separated, decimal point, no quoting.

#include <iosfwd>
#include <string>
#include <vector>

#include "geor2/dataset.hpp"

namespace geor2 {

// Throws InputError with the offending line and column on any schema
// violation or missing value. `covariates` selects and orders the design
// columns after the intercept.
Dataset parse_dataset_csv(std::istream& in, const std::vector<std::string>& covariates,
                          const std::string& source = "<input>");
Dataset read_dataset_csv(const std::string& path, const std::vector<std::string>& covariates);

// Writes id, x1, x2, m, y followed by the non-intercept design columns.
void write_dataset_csv(std::ostream& os, const Dataset& data);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// True when every coordinate falls within longitude/latitude ranges.
bool looks_like_lonlat(const Eigen::MatrixXd& coords);

std::string read_file(const std::string& path);

}  // namespace geor2
