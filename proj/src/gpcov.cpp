#include "geor2/gpcov.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "geor2/dataset.hpp"
#include "geor2/error.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void CovParams::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw DomainError("covariance variance sigma2 must be positive");
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw DomainError("covariance range phi must be positive");
  if (!(tau2 >= 0.0) || !std::isfinite(tau2))
    throw DomainError("nugget tau2 must be nonnegative");
}

MatrixXd distance_matrix(const MatrixXd& coords) {
  const Index n = coords.rows();
  MatrixXd d(n, n);
  for (Index j = 0; j < n; ++j) {
    d(j, j) = 0.0;
    for (Index i = j + 1; i < n; ++i) {
      const double dx = coords(i, 0) - coords(j, 0);
      const double dy = coords(i, 1) - coords(j, 1);
      d(i, j) = d(j, i) = std::sqrt(dx * dx + dy * dy);
    }
  }
  return d;
}

MatrixXd exponential_correlation(const MatrixXd& distances, double phi) {
  return (-distances.array() / phi).exp().matrix();
}

MatrixXd exponential_covariance(const MatrixXd& coords, const CovParams& params) {
  params.validate();
  return params.sigma2 * exponential_correlation(distance_matrix(coords), params.phi);
}

CovMatrix factorize_with_jitter(MatrixXd sigma, double scale, double min_distance) {
  constexpr double ladder[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  static_assert(ladder[1] == kJitterStart && ladder[5] == kJitterMax);
  for (const double step : ladder) {
    const double jitter = step * scale;
    MatrixXd attempt = sigma;
    attempt.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(attempt);
    if (llt.info() != Eigen::Success) continue;
    CovMatrix out;
    out.chol = llt.matrixL();
    out.log_det = 2.0 * out.chol.diagonal().array().log().sum();
    out.sigma = std::move(attempt);
    out.jitter = jitter;
    return out;
  }
  std::ostringstream os;
  os << "covariance matrix (n=" << sigma.rows() << ") not positive definite after jitter "
     << kJitterMax * scale << "; minimum pairwise distance is " << min_distance;
  throw IllConditionedError(os.str());
}

CovMatrix build_cov(const MatrixXd& coords, const CovParams& params) {
  MatrixXd sigma = exponential_covariance(coords, params);
  const double dmin = coords.rows() > 1 ? min_pairwise_distance(coords) : 0.0;
  return factorize_with_jitter(std::move(sigma), params.sigma2, dmin);
}

VectorXd gp_sample(const CovMatrix& cov, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  VectorXd z(cov.chol.rows());
  for (Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return cov.chol.triangularView<Eigen::Lower>() * z;
}

}  // namespace geor2
