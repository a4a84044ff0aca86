#include "geor2/lingeo.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "geor2/error.hpp"
#include "geor2/glm.hpp"
#include "geor2/optim.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearPosterior linear_posterior(const Dataset& data, const VectorXd& beta, const CovParams& cov) {
  validate_dataset(data, Family::gaussian());
  cov.validate();
  if (!(cov.tau2 > 0.0))
    throw DomainError("linear geostatistical posterior requires a positive nugget tau2");
  if (beta.size() != data.design.cols())
    throw InputError("beta length does not match the design matrix");

  const Index n = data.size();
  const MatrixXd sigma = exponential_covariance(data.coords, cov);
  MatrixXd k = sigma;
  k.diagonal().array() += cov.tau2;
  Eigen::LLT<MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("Sigma + tau2 I is not positive definite");

  const VectorXd r = data.y - data.design * beta;
  LinearPosterior out;
  out.xi = sigma * llt.solve(r);
  const MatrixXd half = llt.matrixL().solve(sigma);  // L^{-1} Sigma
  out.omega = sigma - half.transpose() * half;
  const double trace = out.omega.trace();
  out.expected_total_variation = r.squaredNorm() + out.xi.dot(out.xi - 2.0 * r) + trace;
  out.identity_form = (r - out.xi).squaredNorm() + trace;

  const double gap = std::abs(out.expected_total_variation - out.identity_form);
  if (gap > 1e-8 * std::max(1.0, out.expected_total_variation)) {
    std::ostringstream os;
    os << "expected total variation self-check failed (gap " << gap << ", n=" << n << ")";
    throw Error(os.str());
  }
  return out;
}

double r2_linear_glgm(const Dataset& data, const VectorXd& beta, const CovParams& cov) {
  const LinearPosterior post = linear_posterior(data, beta, cov);
  const Family gaussian = Family::gaussian();
  const double denom = sum_cv(gaussian, data.y, baseline_prediction(data, gaussian));
  if (!(denom > 0.0))
    throw UndefinedR2Error("R2_GLGM undefined: all observations are identical");
  return 1.0 - post.expected_total_variation / denom;
}

LinearProfile linear_profile(const Dataset& data, const MatrixXd& distances, double phi,
                             double nu) {
  const Index n = data.size();
  MatrixXd v = exponential_correlation(distances, phi);
  v.diagonal().array() += nu;
  Eigen::LLT<MatrixXd> llt(v);
  LinearProfile out;
  if (llt.info() != Eigen::Success) {
    out.log_likelihood = -std::numeric_limits<double>::infinity();
    return out;
  }
  const MatrixXd& x = data.design;
  const MatrixXd lx = llt.matrixL().solve(x);
  const VectorXd ly = llt.matrixL().solve(data.y);
  const MatrixXd xtvx = lx.transpose() * lx;
  out.beta_cov_unscaled = xtvx.ldlt().solve(MatrixXd::Identity(x.cols(), x.cols()));
  out.beta = out.beta_cov_unscaled * (lx.transpose() * ly);
  const double q = (ly - lx * out.beta).squaredNorm();
  out.sigma2 = q / static_cast<double>(n);
  const double log_det = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  out.log_likelihood = -0.5 * (static_cast<double>(n) *
                                   (std::log(2.0 * std::numbers::pi * out.sigma2) + 1.0) +
                               log_det);
  return out;
}

LinearMlFit fit_linear_ml(const Dataset& data) {
  validate_dataset(data, Family::gaussian());
  const MatrixXd dist = distance_matrix(data.coords);
  const double diag = (data.coords.colwise().maxCoeff() - data.coords.colwise().minCoeff()).norm();
  const double dmin = min_pairwise_distance(data.coords);
  const double log_phi_lo = std::log(dmin / 100.0);
  const double log_phi_hi = std::log(100.0 * diag);
  constexpr double log_nu_lo = -18.0;  // nu ~ 1.5e-8
  constexpr double log_nu_hi = 18.0;

  auto objective = [&](const VectorXd& theta) {
    if (theta(0) < log_phi_lo || theta(0) > log_phi_hi || theta(1) < log_nu_lo ||
        theta(1) > log_nu_hi)
      return std::numeric_limits<double>::infinity();
    return -linear_profile(data, dist, std::exp(theta(0)), std::exp(theta(1))).log_likelihood;
  };

  VectorXd best(2);
  double best_value = std::numeric_limits<double>::infinity();
  int evals = 0;
  for (const double frac : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    for (const double nu : {0.01, 0.1, 1.0, 10.0}) {
      const VectorXd theta = (VectorXd(2) << std::log(frac * diag), std::log(nu)).finished();
      const double v = objective(theta);
      ++evals;
      if (v < best_value) {
        best_value = v;
        best = theta;
      }
    }
  }
  if (!std::isfinite(best_value))
    throw IllConditionedError("linear model profile likelihood undefined on the start grid");

  const optim::Result opt = optim::minimize_bfgs(objective, best);
  const double phi = std::exp(opt.x(0));
  const double nu = std::exp(opt.x(1));
  const LinearProfile prof = linear_profile(data, dist, phi, nu);

  LinearMlFit fit;
  fit.beta = prof.beta;
  fit.beta_se = (prof.sigma2 * prof.beta_cov_unscaled).diagonal().cwiseSqrt();
  fit.cov = CovParams{prof.sigma2, phi, nu * prof.sigma2};
  fit.log_likelihood = prof.log_likelihood;
  fit.converged = opt.converged;
  fit.evaluations = evals + opt.evaluations;
  return fit;
}

}  // namespace geor2
