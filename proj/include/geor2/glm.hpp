#pragma once

#include <Eigen/Dense>

#include "geor2/dataset.hpp"
#include "geor2/expfam.hpp"

namespace geor2 {

struct GlmFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd fitted_means;  // mean scale
  Eigen::MatrixXd covariance;    // of beta
  Eigen::VectorXd std_errors;
  double dispersion = 1.0;       // RSS/(n-p) for gaussian, 1 for binomial/poisson
  double deviance = 0.0;
  double max_abs_score = 0.0;    // on the column-scaled design
  bool converged = false;
  bool separation_warning = false;
  int iterations = 0;
};

inline constexpr int kIrlsMaxIterations = 100;
inline constexpr double kIrlsRelDevianceTol = 1e-10;
inline constexpr double kIrlsScoreTol = 1e-8;

// Iteratively reweighted least squares with step halving. Throws
// ConvergenceError after kIrlsMaxIterations.
GlmFit fit_glm(const Dataset& data, const Family& family);

// Fitted mean of the intercept-only GLM (proportion scale for binomial).
double baseline_prediction(const Dataset& data, const Family& family);

// 1 - sum c_V(y_i, yhat_i) / sum c_V(y_i, yhat_0). May be negative.
double r2_glm(const Dataset& data, const Family& family, const GlmFit& fit);

// Sum of c_V(observed_i, fitted_i) on the mean scale.
double sum_cv(const Family& family, const Eigen::VectorXd& observed,
              const Eigen::VectorXd& fitted);
double sum_cv(const Family& family, const Eigen::VectorXd& observed, double fitted);

}  // namespace geor2
