#include "geor2/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geor2/error.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd Dataset::observed_means(const Family& family) const {
  if (family.kind == FamilyKind::binomial) return y.cwiseQuotient(trials);
  return y;
}

Dataset Dataset::intercept_only() const {
  Dataset out = *this;
  out.design = MatrixXd::Ones(size(), 1);
  out.covariate_names.clear();
  return out;
}

MatrixXd with_intercept(const MatrixXd& covariates) {
  MatrixXd d(covariates.rows(), covariates.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(covariates.cols()) = covariates;
  return d;
}

double min_pairwise_distance(const MatrixXd& coords) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < coords.rows(); ++i)
    for (Index j = i + 1; j < coords.rows(); ++j)
      best = std::min(best, (coords.row(i) - coords.row(j)).norm());
  return best;
}

namespace {

bool is_integral(double v) { return std::floor(v) == v; }

[[noreturn]] void invalid(const std::string& what) {
  throw InputError("invalid dataset: " + what);
}

}  // namespace

void validate_dataset(const Dataset& data, const Family& family) {
  const Index n = data.size();
  if (n < 3) invalid("need at least 3 observations");
  if (data.coords.rows() != n || data.coords.cols() != 2)
    invalid("coordinates must be an n x 2 matrix");
  if (data.trials.size() != n) invalid("trials length differs from outcomes");
  if (data.design.rows() != n) invalid("design rows differ from outcomes");
  if (data.design.cols() < 1) invalid("design needs an intercept column");
  if (!data.ids.empty() && static_cast<Index>(data.ids.size()) != n)
    invalid("ids length differs from outcomes");
  if (static_cast<Index>(data.covariate_names.size()) != data.design.cols() - 1)
    invalid("covariate_names must label every non-intercept design column");
  if (!data.coords.allFinite() || !data.trials.allFinite() || !data.y.allFinite() ||
      !data.design.allFinite())
    invalid("non-finite values present");
  if (!(data.design.col(0).array() == 1.0).all())
    invalid("first design column must be the intercept (all ones)");

  const double dmin = min_pairwise_distance(data.coords);
  if (!(dmin > 0.0)) invalid("duplicate coordinates (minimum pairwise distance is 0)");

  Eigen::ColPivHouseholderQR<MatrixXd> qr(data.design);
  if (qr.rank() < data.design.cols()) invalid("design matrix is not of full column rank");

  for (Index i = 0; i < n; ++i) {
    const double m = data.trials(i);
    const double y = data.y(i);
    std::ostringstream where;
    where << " at row " << i;
    switch (family.kind) {
      case FamilyKind::binomial:
        if (!(m >= 1.0) || !is_integral(m))
          invalid("binomial trials must be positive integers" + where.str());
        if (!is_integral(y) || y < 0.0 || y > m)
          invalid("binomial outcome must be an integer in [0, m]" + where.str());
        break;
      case FamilyKind::poisson:
        if (m != 1.0) invalid("poisson offsets are not supported (m must be 1)" + where.str());
        if (y < 0.0 || !is_integral(y))
          invalid("poisson outcome must be a nonnegative integer" + where.str());
        break;
      case FamilyKind::gaussian:
        if (m != 1.0) invalid("gaussian rows must have m = 1" + where.str());
        break;
      case FamilyKind::quasi:
        if (!(m > 0.0)) invalid("m must be positive" + where.str());
        if (!family.in_mean_domain(y / m))
          invalid("outcome outside the quasi mean domain" + where.str());
        break;
    }
  }
}

namespace {

double xlogx_ratio(double a, double b) { return a > 0.0 ? a * std::log(a / b) : 0.0; }

// NaN for quasi families, which fall back to a coefficient-change criterion.
double deviance(const Family& family, const VectorXd& obs, const VectorXd& m,
                const VectorXd& mu) {
  double d = 0.0;
  switch (family.kind) {
    case FamilyKind::gaussian:
      return (obs - mu).squaredNorm();
    case FamilyKind::binomial:
      for (Index i = 0; i < obs.size(); ++i)
        d += m(i) * (xlogx_ratio(obs(i), mu(i)) + xlogx_ratio(1.0 - obs(i), 1.0 - mu(i)));
      return 2.0 * d;
    case FamilyKind::poisson:
      for (Index i = 0; i < obs.size(); ++i)
        d += m(i) * (xlogx_ratio(obs(i), mu(i)) - (obs(i) - mu(i)));
      return 2.0 * d;
    case FamilyKind::quasi:
      break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

VectorXd initial_means(const Family& family, const VectorXd& obs, const VectorXd& m) {
  VectorXd mu(obs.size());
  for (Index i = 0; i < obs.size(); ++i) {
    switch (family.link) {
      case Link::logit: mu(i) = (obs(i) * m(i) + 0.5) / (m(i) + 1.0); break;
      case Link::log: mu(i) = obs(i) + 0.1; break;
      case Link::identity: mu(i) = obs(i); break;
    }
  }
  return mu;
}

double clamp_mean(const Family& family, double mu) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (family.link == Link::logit) return std::clamp(mu, eps, 1.0 - eps);
  if (family.link == Link::log) return std::max(mu, eps);
  return mu;
}

struct Weights {
  VectorXd w;
  VectorXd mu_eta;
  VectorXd variance;
};

Weights irls_weights(const Family& family, const VectorXd& m, const VectorXd& mu) {
  Weights out{VectorXd(mu.size()), VectorXd(mu.size()), VectorXd(mu.size())};
  for (Index i = 0; i < mu.size(); ++i) {
    const double mc = clamp_mean(family, mu(i));
    out.mu_eta(i) = link_mu_eta(family, mc);
    out.variance(i) = family.variance(mc);
    out.w(i) = m(i) * out.mu_eta(i) * out.mu_eta(i) / out.variance(i);
  }
  return out;
}

double scaled_max_score(const MatrixXd& design, const VectorXd& m, const VectorXd& obs,
                        const VectorXd& mu, const Weights& wt) {
  VectorXd r(mu.size());
  for (Index i = 0; i < mu.size(); ++i)
    r(i) = m(i) * (obs(i) - mu(i)) * wt.mu_eta(i) / wt.variance(i);
  double best = 0.0;
  for (Index j = 0; j < design.cols(); ++j) {
    const double scale = design.col(j).cwiseAbs().maxCoeff();
    best = std::max(best, std::abs(design.col(j).dot(r)) / scale);
  }
  return best;
}

VectorXd inverse_link(const Family& family, const VectorXd& eta) {
  return eta.unaryExpr([&family](double e) { return link_invert(family, e); });
}

}  // namespace

GlmFit fit_glm(const Dataset& data, const Family& family) {
  validate_dataset(data, family);
  const MatrixXd& x = data.design;
  const VectorXd obs = data.observed_means(family);
  const VectorXd& m = data.trials;
  const Index n = data.size();
  const Index p = x.cols();
  const bool use_deviance = family.kind != FamilyKind::quasi;

  VectorXd mu = initial_means(family, obs, m);
  VectorXd eta = mu.unaryExpr([&family](double v) { return link_apply(family, v); });
  VectorXd beta = VectorXd::Zero(p);
  double dev_old = deviance(family, obs, m, mu);
  bool have_beta = false;

  GlmFit fit;
  for (int it = 1; it <= kIrlsMaxIterations; ++it) {
    const Weights wt = irls_weights(family, m, mu);
    const VectorXd z = eta + (obs - mu).cwiseQuotient(wt.mu_eta);
    const VectorXd sw = wt.w.cwiseSqrt();
    VectorXd beta_new =
        (sw.asDiagonal() * x).colPivHouseholderQr().solve(sw.cwiseProduct(z));

    VectorXd eta_new = x * beta_new;
    VectorXd mu_new = inverse_link(family, eta_new);
    double dev_new = deviance(family, obs, m, mu_new);
    if (use_deviance && have_beta) {
      // Only genuine increases trigger halving; roundoff-level noise near the
      // optimum must not stall the iteration.
      const double slack = 1e-9 * (std::abs(dev_old) + 0.1);
      for (int halve = 0; halve < 30 && (!std::isfinite(dev_new) || dev_new > dev_old + slack);
           ++halve) {
        beta_new = 0.5 * (beta + beta_new);
        eta_new = x * beta_new;
        mu_new = inverse_link(family, eta_new);
        dev_new = deviance(family, obs, m, mu_new);
      }
    }

    bool small_change;
    if (use_deviance) {
      small_change = std::abs(dev_new - dev_old) / (std::abs(dev_new) + 0.1) < kIrlsRelDevianceTol;
    } else {
      small_change = have_beta && (beta_new - beta).cwiseAbs().maxCoeff() <
                                      kIrlsRelDevianceTol * (1.0 + beta_new.cwiseAbs().maxCoeff());
    }

    beta = beta_new;
    eta = eta_new;
    mu = mu_new;
    dev_old = dev_new;
    have_beta = true;
    fit.iterations = it;

    const Weights wt_new = irls_weights(family, m, mu);
    fit.max_abs_score = scaled_max_score(x, m, obs, mu, wt_new);
    if (small_change && fit.max_abs_score < kIrlsScoreTol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged) {
    std::ostringstream os;
    os << "IRLS did not converge after " << kIrlsMaxIterations
       << " iterations (max scaled score " << fit.max_abs_score << ")";
    throw ConvergenceError(os.str());
  }

  fit.beta = beta;
  fit.fitted_means = mu;
  fit.deviance = use_deviance ? dev_old : 0.0;

  const Weights wt = irls_weights(family, m, mu);
  const double dof = n > p ? static_cast<double>(n - p) : static_cast<double>(n);
  switch (family.kind) {
    case FamilyKind::gaussian:
      fit.dispersion = (obs - mu).squaredNorm() / dof;
      break;
    case FamilyKind::quasi: {
      double pearson = 0.0;
      for (Index i = 0; i < n; ++i)
        pearson += m(i) * (obs(i) - mu(i)) * (obs(i) - mu(i)) / wt.variance(i);
      fit.dispersion = pearson / dof;
      break;
    }
    default:
      fit.dispersion = 1.0;
  }
  const MatrixXd info = x.transpose() * wt.w.asDiagonal() * x;
  fit.covariance = fit.dispersion * info.ldlt().solve(MatrixXd::Identity(p, p));
  fit.std_errors = fit.covariance.diagonal().cwiseSqrt();
  if (family.kind == FamilyKind::binomial)
    fit.separation_warning = eta.cwiseAbs().maxCoeff() > 30.0;
  return fit;
}

double baseline_prediction(const Dataset& data, const Family& family) {
  // The intercept-only score equation solves to the pooled mean for the named families.
  switch (family.kind) {
    case FamilyKind::gaussian:
    case FamilyKind::poisson:
      validate_dataset(data, family);
      return data.y.mean();
    case FamilyKind::binomial:
      validate_dataset(data, family);
      return data.y.sum() / data.trials.sum();
    case FamilyKind::quasi: break;
  }
  return fit_glm(data.intercept_only(), family).fitted_means(0);
}

double sum_cv(const Family& family, const VectorXd& observed, const VectorXd& fitted) {
  double total = 0.0;
  for (Index i = 0; i < observed.size(); ++i) total += c_v(family, observed(i), fitted(i)).value;
  return total;
}

double sum_cv(const Family& family, const VectorXd& observed, double fitted) {
  double total = 0.0;
  for (Index i = 0; i < observed.size(); ++i) total += c_v(family, observed(i), fitted).value;
  return total;
}

double r2_glm(const Dataset& data, const Family& family, const GlmFit& fit) {
  if (fit.fitted_means.size() != data.size())
    throw InputError("GLM fit does not match the dataset size");
  const VectorXd obs = data.observed_means(family);
  const double y0 = baseline_prediction(data, family);
  const double denom = sum_cv(family, obs, y0);
  if (!(denom > 0.0))
    throw UndefinedR2Error("R2_GLM undefined: all observations equal the baseline prediction");
  // An intercept-only fit is the baseline itself; skip the IRLS rounding.
  if (data.design.cols() == 1) return 0.0;
  return 1.0 - sum_cv(family, obs, fit.fitted_means) / denom;
}

}  // namespace geor2
