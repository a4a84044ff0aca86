#include "geor2/optim.hpp"

#include <cmath>
#include <limits>

namespace geor2::optim {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd central_gradient(const Objective& f, const VectorXd& x, double h) {
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

MatrixXd central_hessian(const Objective& f, const VectorXd& x, double h) {
  const Index k = x.size();
  MatrixXd hess(k, k);
  const double f0 = f(x);
  VectorXd xp = x;
  for (Index i = 0; i < k; ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (Index j = 0; j < i; ++j) {
      double acc = 0.0;
      for (const auto& [si, sj] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
        xp(i) = x(i) + si * h;
        xp(j) = x(j) + sj * h;
        acc += si * sj * f(xp);
      }
      xp(i) = x(i);
      xp(j) = x(j);
      hess(i, j) = hess(j, i) = acc / (4.0 * h * h);
    }
  }
  return hess;
}

Result minimize_bfgs(const Objective& f, VectorXd x0, const Options& options,
                     const Gradient& gradient) {
  Result res;
  int evals = 0;
  auto value = [&](const VectorXd& x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  auto grad = [&](const VectorXd& x) -> VectorXd {
    if (gradient) return gradient(x);
    evals += 2 * static_cast<int>(x.size());
    return central_gradient(f, x, options.diff_step);
  };

  const Index k = x0.size();
  VectorXd x = std::move(x0);
  double fx = value(x);
  VectorXd g = grad(x);
  MatrixXd hinv = MatrixXd::Identity(k, k);
  bool scaled = false;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (g.cwiseAbs().maxCoeff() < options.gradient_tol) {
      res.converged = true;
      break;
    }
    VectorXd dir = -hinv * g;
    if (g.dot(dir) >= 0.0) {
      hinv.setIdentity();
      dir = -g;
    }
    double t = 1.0;
    const double dmax = dir.cwiseAbs().maxCoeff();
    if (dmax * t > options.max_step) t = options.max_step / dmax;

    const double slope = g.dot(dir);
    VectorXd x_new;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + t * dir;
      f_new = value(x_new);
      if (f_new <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No further descent possible at working precision.
      res.converged = g.cwiseAbs().maxCoeff() < std::sqrt(options.gradient_tol);
      break;
    }
    const VectorXd g_new = grad(x_new);
    const VectorXd s = x_new - x;
    const VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (!scaled) {
        hinv *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const MatrixXd eye = MatrixXd::Identity(k, k);
      hinv = (eye - rho * s * yv.transpose()) * hinv * (eye - rho * yv * s.transpose()) +
             rho * s * s.transpose();
    }
    const double improvement = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    if (improvement <= 1e-15 * (1.0 + std::abs(fx)) &&
        g.cwiseAbs().maxCoeff() < std::sqrt(options.gradient_tol)) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  res.gradient = g;
  res.iterations = it;
  res.evaluations = evals;
  return res;
}

}  // namespace geor2::optim
