#pragma once

// Closed forms for the linear geostatistical model
//   y = D beta + S + e,  S ~ N(0, Sigma),  e ~ N(0, tau2 I),
// where the expected residual variation over S | y is available exactly.

#include <Eigen/Dense>

#include "geor2/dataset.hpp"
#include "geor2/gpcov.hpp"

namespace geor2 {

struct LinearPosterior {
  Eigen::VectorXd xi;     // E[S | y] = Sigma (Sigma + tau2 I)^{-1} (y - D beta)
  Eigen::MatrixXd omega;  // Var[S | y] = Sigma - Sigma (Sigma + tau2 I)^{-1} Sigma
  double expected_total_variation = 0.0;
  // ||y - D beta - xi||^2 + tr(omega); must agree with the value above.
  double identity_form = 0.0;
};

LinearPosterior linear_posterior(const Dataset& data, const Eigen::VectorXd& beta,
                                 const CovParams& cov);

// 1 - E[sum (y_i - D_i beta - S_i)^2 | y] / sum (y_i - ybar)^2.
double r2_linear_glgm(const Dataset& data, const Eigen::VectorXd& beta, const CovParams& cov);

struct LinearMlFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_se;  // conditional on the fitted (phi, tau2 / sigma2)
  CovParams cov;
  double log_likelihood = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// Profile log-likelihood at range phi and noise ratio nu = tau2 / sigma2,
// with beta and sigma2 profiled out in closed form.
struct LinearProfile {
  double log_likelihood = 0.0;
  Eigen::VectorXd beta;
  Eigen::MatrixXd beta_cov_unscaled;  // (D^T V^{-1} D)^{-1}
  double sigma2 = 0.0;
};
LinearProfile linear_profile(const Dataset& data, const Eigen::MatrixXd& distances, double phi,
                             double nu);

// Exact maximum likelihood for (beta, sigma2, phi, tau2).
LinearMlFit fit_linear_ml(const Dataset& data);

}  // namespace geor2
