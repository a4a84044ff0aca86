#pragma once

#include <Eigen/Dense>

#include "geor2/dataset.hpp"
#include "geor2/expfam.hpp"

namespace geor2 {

// log p(y | eta) for the supported conditional models, dropping terms that
// do not involve eta:
//   binomial/logit   y eta - m log(1 + e^eta)
//   poisson/log      y eta - e^eta
//   gaussian/identity  -(y - eta)^2 / (2 tau2)
class ConditionalLikelihood {
 public:
  ConditionalLikelihood(const Dataset& data, const Family& family, double tau2);

  double term(Eigen::Index i, double eta) const;
  double value(const Eigen::VectorXd& eta) const;
  // Gradient in eta and the negated second derivative (W), both elementwise.
  void derivatives(const Eigen::VectorXd& eta, Eigen::VectorXd& grad, Eigen::VectorXd& curv) const;

 private:
  enum class Model { binomial_logit, poisson_log, gaussian_identity };
  Model model_;
  const Eigen::VectorXd& y_;
  const Eigen::VectorXd& m_;
  double tau2_;
};

double softplus(double x);

}  // namespace geor2
