#pragma once

// Monte Carlo maximum likelihood for the binomial-logit geostatistical model.
//
// With draws s_1..s_B from S | y at a reference psi0 = (beta0, sigma2_0, phi0),
//   L(psi) / L(psi0) ~= (1/B) sum_j p(y, s_j; psi) / p(y, s_j; psi0),
// which is maximized over psi; psi0 is then moved to the maximizer and the
// draws refreshed until the estimate stops moving.
//
// Each coefficient either enters through p(y | D beta + s) with the field s_j
// held fixed, or is absorbed into the latent variable u_j = s_j + D_A beta0_A,
// in which case it enters only through the Gaussian prior of u. Any split is
// an exact identity; they differ in Monte Carlo variance. Absorbing every
// coefficient gives the usual linear-predictor form, where p(y | eta) cancels.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "geor2/dataset.hpp"
#include "geor2/expfam.hpp"
#include "geor2/posterior.hpp"

namespace geor2 {

// One flag per coefficient; true means absorbed into the latent prior.
using CoefficientSplit = std::vector<bool>;

struct McmlSchedule {
  SamplerSchedule sampler;  // seed is the base seed of the whole fit
  int max_reference_updates = 5;
  double tolerance = 0.01;  // infinity norm of the parameter change, optimization scale
  std::optional<double> fixed_sigma2;
  std::optional<double> fixed_phi;
  std::optional<CoefficientSplit> split;  // chosen per reference update when empty
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct McmlFit {
  GlgmParams params;
  std::vector<std::string> parameter_names;  // beta names, then sigma2, phi
  Eigen::VectorXd estimates;                 // natural scale
  // beta: natural scale; sigma2 and phi: log scale. NaN for fixed parameters.
  Eigen::VectorXd std_errors;
  std::vector<Interval> ci95;  // natural scale, back-transformed for sigma2 and phi
  int mc_samples_used = 0;
  double relative_likelihood_at_optimum = 0.0;
  int reference_updates = 0;
  bool converged = false;
  std::vector<double> parameter_changes;  // one per reference update
  std::vector<double> acceptance_rates;
  std::vector<CoefficientSplit> splits;
  double hessian_condition = 0.0;
};

// beta from the GLM, sigma2 = 1, phi = a quarter of the bounding-box diagonal.
GlgmParams default_init(const Dataset& data, const Family& family);

// Absorbs coefficient j when that makes its importance-weight score vary less
// over S | y, judged with the Laplace approximation at the reference:
// (D^T Sigma^-1 H^-1 Sigma^-1 D)_jj against (D^T W H^-1 W D)_jj.
CoefficientSplit choose_split(const Dataset& data, const Family& family,
                              const GlgmParams& reference);

// log of the Monte Carlo likelihood ratio L(psi) / L(psi0) for a fixed set
// of draws. Caches work per phi and per beta; not safe to share across threads.
class McRelativeLikelihood {
 public:
  McRelativeLikelihood(const Dataset& data, const Family& family, const GlgmParams& reference,
                       Eigen::MatrixXd draws, CoefficientSplit split = {});

  double operator()(const GlgmParams& params) const;
  Eigen::Index num_draws() const { return draws_.rows(); }
  const CoefficientSplit& split() const { return split_; }

 private:
  Eigen::VectorXd conditional_terms(const Eigen::VectorXd& beta) const;
  bool prior_terms(double phi) const;  // refreshes the per-phi cache; false if singular
  Eigen::VectorXd joint(const GlgmParams& params) const;

  const Dataset& data_;
  Family family_;
  Eigen::MatrixXd draws_;  // B x n, field values
  CoefficientSplit split_;  // empty means nothing absorbed
  bool any_absorbed_ = false;
  bool all_absorbed_ = false;
  Eigen::VectorXd beta0_;
  double tau2_;
  Eigen::MatrixXd distances_;
  double min_distance_;
  Eigen::VectorXd reference_;  // per-draw log p(y, s_j; psi0)

  mutable std::optional<double> cached_phi_;
  mutable Eigen::VectorXd quad_;  // s_j^T R(phi)^{-1} s_j
  mutable double log_det_ = 0.0;
  mutable Eigen::MatrixXd cross_;  // rows s_j^T R^{-1} D
  mutable Eigen::MatrixXd gram_;   // D^T R^{-1} D
  mutable std::optional<Eigen::VectorXd> cached_beta_;
  mutable Eigen::VectorXd cond_;
};

McmlFit fit_mcml(const Dataset& data, const Family& family, const GlgmParams& init,
                 const McmlSchedule& schedule);

}  // namespace geor2
