#include <doctest.h>

#include <cmath>
#include <random>

#include "geor2/error.hpp"
#include "geor2/glm.hpp"
#include "geor2/gpcov.hpp"
#include "geor2/lingeo.hpp"
#include "oracles.hpp"

using namespace geor2;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Gaussian conditioning in precision form: Var = (Sigma^-1 + I / tau2)^-1,
// mean = Var r / tau2.
struct PrecisionPosterior {
  VectorXd mean;
  MatrixXd cov;
};

PrecisionPosterior precision_posterior(const Dataset& d, const VectorXd& beta, double sigma2,
                                       double phi, double tau2) {
  const MatrixXd sigma = oracle::exp_cov(d.coords, sigma2, phi, 0.0);
  const Eigen::Index n = d.size();
  const MatrixXd prec = sigma.inverse() + MatrixXd::Identity(n, n) / tau2;
  PrecisionPosterior out;
  out.cov = prec.inverse();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  out.mean = out.cov * (d.y - d.design * beta) / tau2;
  return out;
}

}  // namespace

TEST_SUITE("lingeo") {

TEST_CASE("posterior moments agree with the precision form") {
  const Dataset d = oracle::gaussian_dataset(25, 12, 1, VectorXd{{1.0, 0.5}}, 0.8, 0.3, 0.3);
  const VectorXd beta{{0.9, 0.55}};
  const LinearPosterior post = linear_posterior(d, beta, {0.8, 0.3, 0.3});
  const PrecisionPosterior ref = precision_posterior(d, beta, 0.8, 0.3, 0.3);
  CHECK((post.xi - ref.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((post.omega - ref.cov).cwiseAbs().maxCoeff() < 1e-10);
  const VectorXd r = d.y - d.design * beta;
  CHECK(post.expected_total_variation ==
        doctest::Approx((r - ref.mean).squaredNorm() + ref.cov.trace()).epsilon(1e-10));
  CHECK(std::abs(post.expected_total_variation - post.identity_form) < 1e-8);
}

TEST_CASE("smoothing never inflates variance") {
  const Dataset d = oracle::gaussian_dataset(20, 5, 0, VectorXd{{0.0}}, 1.3, 0.5, 0.2);
  const LinearPosterior post = linear_posterior(d, VectorXd{{0.1}}, {1.3, 0.5, 0.2});
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(post.omega);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
  CHECK(eig.eigenvalues().maxCoeff() <= 1.3 + 1e-9);
  CHECK((post.omega - post.omega.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("limits of the latent variance and the nugget") {
  const Dataset d = oracle::gaussian_dataset(30, 21, 1, VectorXd{{2.0, -1.0}}, 0.5, 0.2, 0.5);
  const VectorXd beta{{2.1, -0.9}};
  const double rss = (d.y - d.design * beta).squaredNorm();

  const LinearPosterior none = linear_posterior(d, beta, {1e-14, 0.2, 0.5});
  CHECK(none.xi.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(none.omega.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(none.expected_total_variation == doctest::Approx(rss).epsilon(1e-9));

  const LinearPosterior flat = linear_posterior(d, beta, {1.0, 0.2, 1e12});
  const MatrixXd sigma = oracle::exp_cov(d.coords, 1.0, 0.2, 0.0);
  CHECK(flat.xi.cwiseAbs().maxCoeff() < 1e-9);
  CHECK((flat.omega - sigma).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(flat.expected_total_variation == doctest::Approx(rss + sigma.trace()).epsilon(1e-9));
}

TEST_CASE("expected variation matches exact posterior draws") {
  const Dataset d = oracle::gaussian_dataset(30, 7, 1, VectorXd{{1.0, 1.0}}, 1.0, 0.25, 0.4);
  const VectorXd beta{{1.05, 0.95}};
  const LinearPosterior post = linear_posterior(d, beta, {1.0, 0.25, 0.4});
  const PrecisionPosterior ref = precision_posterior(d, beta, 1.0, 0.25, 0.4);
  const MatrixXd l = ref.cov.llt().matrixL();
  const VectorXd r = d.y - d.design * beta;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> norm;
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  VectorXd z(30);
  for (int k = 0; k < draws; ++k) {
    for (int i = 0; i < 30; ++i) z(i) = norm(rng);
    const double v = (r - ref.mean - l * z).squaredNorm();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - post.expected_total_variation) < 3.0 * se);
}

TEST_CASE("shifting y and the trend together changes nothing") {
  Dataset d = oracle::gaussian_dataset(20, 3, 1, VectorXd{{0.5, 0.2}}, 0.7, 0.3, 0.3);
  const VectorXd beta{{0.4, 0.25}};
  const LinearPosterior a = linear_posterior(d, beta, {0.7, 0.3, 0.3});
  d.y.array() += 100.0;
  const LinearPosterior b = linear_posterior(d, VectorXd{{100.4, 0.25}}, {0.7, 0.3, 0.3});
  CHECK((a.xi - b.xi).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.omega - b.omega).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(a.expected_total_variation == doctest::Approx(b.expected_total_variation).epsilon(1e-10));
}

TEST_CASE("coefficient of determination reductions") {
  const Dataset d = oracle::gaussian_dataset(40, 9, 2, VectorXd{{1.0, 0.7, -0.3}}, 0.2, 0.2, 0.5);
  const oracle::Ols ols = oracle::least_squares(d.design, d.y);
  CHECK(std::abs(r2_linear_glgm(d, ols.beta, {1e-14, 0.2, 0.5}) - (1.0 - ols.rss / ols.tss)) < 1e-8);
  const Dataset none = d.intercept_only();
  CHECK(std::abs(r2_linear_glgm(none, VectorXd{{d.y.mean()}}, {1e-14, 0.2, 0.5})) < 1e-8);
  // The field explains part of what the trend leaves over.
  CHECK(r2_linear_glgm(d, ols.beta, {0.5, 0.2, 0.5}) > 1.0 - ols.rss / ols.tss);
}

TEST_CASE("errors") {
  const Dataset d = oracle::gaussian_dataset(10, 1, 0, VectorXd{{0.0}}, 0.5, 0.2, 0.5);
  CHECK_THROWS_AS(linear_posterior(d, VectorXd{{0.0}}, {0.5, 0.2, 0.0}), DomainError);
  CHECK_THROWS_AS(linear_posterior(d, VectorXd{{0.0, 1.0}}, {0.5, 0.2, 0.1}), InputError);
  Dataset flat = d;
  flat.y.setConstant(3.0);
  CHECK_THROWS_AS(r2_linear_glgm(flat, VectorXd{{3.0}}, {0.5, 0.2, 0.1}), UndefinedR2Error);
}

TEST_CASE("profile likelihood equals the full Gaussian likelihood at its profiled values") {
  const Dataset d = oracle::gaussian_dataset(30, 14, 1, VectorXd{{1.0, 0.5}}, 1.0, 0.3, 0.3);
  const double phi = 0.35, nu = 0.4;
  const LinearProfile prof = linear_profile(d, distance_matrix(d.coords), phi, nu);
  auto full = [&](const VectorXd& beta, double sigma2) {
    return oracle::mvn_logpdf(d.y, d.design * beta, oracle::exp_cov(d.coords, sigma2, phi, sigma2 * nu));
  };
  CHECK(prof.log_likelihood == doctest::Approx(full(prof.beta, prof.sigma2)).epsilon(1e-10));
  // beta and sigma2 are the maximizers at fixed (phi, nu).
  for (double eps : {-1e-3, 1e-3}) {
    CHECK(full(prof.beta + VectorXd::Constant(2, eps), prof.sigma2) < prof.log_likelihood);
    CHECK(full(prof.beta, prof.sigma2 * (1.0 + eps)) < prof.log_likelihood);
  }
}

TEST_CASE("exact maximum likelihood") {
  const Dataset d = oracle::gaussian_dataset(120, 33, 1, VectorXd{{1.0, 0.5}}, 1.0, 0.2, 0.25);
  const LinearMlFit fit = fit_linear_ml(d);
  CHECK(fit.converged);
  // No worse than the generating values or a grid of nearby points.
  const MatrixXd dist = distance_matrix(d.coords);
  CHECK(fit.log_likelihood >= linear_profile(d, dist, 0.2, 0.25).log_likelihood - 1e-8);
  for (double fp : {0.8, 1.25})
    for (double fn : {0.8, 1.25})
      CHECK(fit.log_likelihood >=
            linear_profile(d, dist, fit.cov.phi * fp, fit.cov.tau2 / fit.cov.sigma2 * fn).log_likelihood);
  CHECK(std::abs(fit.beta(1) - 0.5) < 3.0 * fit.beta_se(1));
  CHECK(fit.cov.sigma2 > 0.2);
  CHECK(fit.cov.sigma2 < 5.0);
  CHECK(fit.cov.tau2 < 1.0);
}

}  // TEST_SUITE
