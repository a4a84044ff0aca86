#pragma once

#include <Eigen/Dense>
#include <functional>

namespace geor2::optim {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Options {
  int max_iterations = 300;
  double gradient_tol = 1e-6;  // on the infinity norm
  double diff_step = 1e-5;     // central-difference step when no gradient is given
  double max_step = 2.0;       // cap on the infinity norm of a single line-search step
};

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

Eigen::VectorXd central_gradient(const Objective& f, const Eigen::VectorXd& x, double h);
Eigen::MatrixXd central_hessian(const Objective& f, const Eigen::VectorXd& x, double h);

// Quasi-Newton (BFGS, inverse-Hessian form) with Armijo backtracking.
// Non-finite objective values are treated as +infinity by the line search.
Result minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const Options& options = {},
                     const Gradient& gradient = {});

}  // namespace geor2::optim
