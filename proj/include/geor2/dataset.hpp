#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geor2/expfam.hpp"

namespace geor2 {

// Georeferenced outcomes. The design matrix carries an explicit leading
// column of ones; covariate_names labels the remaining columns.
struct Dataset {
  std::vector<std::string> ids;
  Eigen::MatrixXd coords;  // n x 2, planar
  Eigen::VectorXd trials;  // m_i
  Eigen::VectorXd y;
  Eigen::MatrixXd design;  // n x p
  std::vector<std::string> covariate_names;

  Eigen::Index size() const { return y.size(); }
  Eigen::Index num_coefficients() const { return design.cols(); }

  // Outcomes on the family's mean scale (proportions y/m for binomial).
  Eigen::VectorXd observed_means(const Family& family) const;

  // Same sites and outcomes with the design reduced to the intercept.
  Dataset intercept_only() const;
};

// Builds a design with a leading intercept followed by the given columns.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& covariates);

double min_pairwise_distance(const Eigen::MatrixXd& coords);

// Throws InputError describing the first violated invariant.
void validate_dataset(const Dataset& data, const Family& family);

}  // namespace geor2
