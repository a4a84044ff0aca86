#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace geor2 {

// Isotropic exponential covariance sigma2 * exp(-u / phi), plus an optional
// nugget used only by the Gaussian-response model.
struct CovParams {
  double sigma2 = 1.0;
  double phi = 1.0;
  double tau2 = 0.0;

  void validate() const;
};

struct CovMatrix {
  Eigen::MatrixXd sigma;  // includes any jitter on the diagonal
  Eigen::MatrixXd chol;   // lower triangular, sigma = chol * chol^T
  double log_det = 0.0;
  double jitter = 0.0;    // diagonal jitter that was needed, 0 if none
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-6;

Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& coords);

// exp(-u / phi) elementwise.
Eigen::MatrixXd exponential_correlation(const Eigen::MatrixXd& distances, double phi);

// sigma2 * exp(-u / phi) with no nugget and no jitter.
Eigen::MatrixXd exponential_covariance(const Eigen::MatrixXd& coords, const CovParams& params);

// Cholesky with jitter escalation 1e-10 * scale, x10, ..., 1e-6 * scale.
// Throws IllConditionedError naming min_distance when every attempt fails.
CovMatrix factorize_with_jitter(Eigen::MatrixXd sigma, double scale, double min_distance);

CovMatrix build_cov(const Eigen::MatrixXd& coords, const CovParams& params);

// chol * z with z ~ N(0, I) drawn from a generator seeded by `seed`.
Eigen::VectorXd gp_sample(const CovMatrix& cov, std::uint64_t seed);

}  // namespace geor2
