#pragma once

// Sampling S | (y, d) for a generalized linear geostatistical model:
// Newton-Raphson to the Laplace mode, then a Langevin Metropolis-Hastings
// chain in the space standardized by the Laplace Hessian.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

#include "geor2/dataset.hpp"
#include "geor2/expfam.hpp"
#include "geor2/gpcov.hpp"

namespace geor2 {

struct GlgmParams {
  Eigen::VectorXd beta;
  CovParams cov;

  void validate(const Dataset& data) const;
};

struct LaplaceMode {
  Eigen::VectorXd s_hat;
  Eigen::MatrixXd hessian_chol;  // lower factor of W(s_hat) + Sigma^{-1}
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

inline constexpr int kNewtonMaxIterations = 100;
inline constexpr double kModeGradientTol = 1e-6;

// Supports binomial/logit, poisson/log and gaussian/identity (using tau2 as
// the noise variance). Throws ConvergenceError after 100 Newton steps.
LaplaceMode laplace_mode(const Dataset& data, const Family& family, const GlgmParams& params);

struct SamplerSchedule {
  int burn_in = 10000;
  int thin = 8;
  int samples = 1000;
  std::uint64_t seed = 0;
};

inline constexpr double kTargetAcceptance = 0.574;

struct PosteriorDraws {
  Eigen::MatrixXd draws;  // samples x n
  double acceptance_rate = 0.0;  // post burn-in
  double burn_in_acceptance = 0.0;
  double initial_step_size = 0.0;
  double step_size = 0.0;  // frozen value used after burn-in
  bool step_size_frozen = true;
  int burn_in = 0;
  int thin = 1;
  std::uint64_t seed = 0;
  long proposals_after_burn_in = 0;
};

PosteriorDraws sample_posterior(const Dataset& data, const Family& family,
                                const GlgmParams& params, const SamplerSchedule& schedule);

// One row per retained draw, one column per site.
void write_draws_csv(std::ostream& os, const Dataset& data, const PosteriorDraws& draws);

}  // namespace geor2
