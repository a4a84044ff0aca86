#include "geor2/posterior.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "geor2/error.hpp"
#include "geor2/likelihood.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

ConditionalLikelihood::ConditionalLikelihood(const Dataset& data, const Family& family,
                                             double tau2)
    : y_(data.y), m_(data.trials), tau2_(tau2) {
  if (family.kind == FamilyKind::binomial && family.link == Link::logit) {
    model_ = Model::binomial_logit;
  } else if (family.kind == FamilyKind::poisson && family.link == Link::log) {
    model_ = Model::poisson_log;
  } else if (family.kind == FamilyKind::gaussian && family.link == Link::identity) {
    if (!(tau2 > 0.0))
      throw DomainError("gaussian latent-field model requires a positive nugget tau2");
    model_ = Model::gaussian_identity;
  } else {
    throw DomainError("latent-field likelihood supports binomial/logit, poisson/log and "
                      "gaussian/identity only (got " + std::string(family.name()) + ")");
  }
}

double ConditionalLikelihood::term(Index i, double eta) const {
  switch (model_) {
    case Model::binomial_logit: return y_(i) * eta - m_(i) * softplus(eta);
    case Model::poisson_log: return y_(i) * eta - std::exp(eta);
    case Model::gaussian_identity: {
      const double r = y_(i) - eta;
      return -0.5 * r * r / tau2_;
    }
  }
  return 0.0;
}

double ConditionalLikelihood::value(const VectorXd& eta) const {
  double total = 0.0;
  for (Index i = 0; i < eta.size(); ++i) total += term(i, eta(i));
  return total;
}

void ConditionalLikelihood::derivatives(const VectorXd& eta, VectorXd& grad,
                                        VectorXd& curv) const {
  grad.resize(eta.size());
  curv.resize(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    switch (model_) {
      case Model::binomial_logit: {
        const double e = eta(i);
        const double mu = e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
        grad(i) = y_(i) - m_(i) * mu;
        curv(i) = m_(i) * mu * (1.0 - mu);
        break;
      }
      case Model::poisson_log: {
        const double mu = std::exp(eta(i));
        grad(i) = y_(i) - mu;
        curv(i) = mu;
        break;
      }
      case Model::gaussian_identity:
        grad(i) = (y_(i) - eta(i)) / tau2_;
        curv(i) = 1.0 / tau2_;
        break;
    }
  }
}

void GlgmParams::validate(const Dataset& data) const {
  cov.validate();
  if (beta.size() != data.design.cols())
    throw InputError("beta length does not match the design matrix");
  if (!beta.allFinite()) throw DomainError("non-finite regression coefficients");
}

namespace {

// Shared state for mode finding: prior factor and linear predictor offset.
struct LatentModel {
  CovMatrix prior;
  VectorXd offset;  // D beta
};

LatentModel make_latent_model(const Dataset& data, const Family& family,
                              const GlgmParams& params) {
  validate_dataset(data, family);
  params.validate(data);
  return {build_cov(data.coords, params.cov), data.design * params.beta};
}

LaplaceMode find_mode(const LatentModel& model, const ConditionalLikelihood& lik) {
  const Index n = model.offset.size();
  const auto lower = model.prior.chol.triangularView<Eigen::Lower>();
  // Whitened coordinates s = L v keep the Newton system I + L^T W L well
  // conditioned even when sigma2 is tiny.
  VectorXd v = VectorXd::Zero(n);
  VectorXd s = VectorXd::Zero(n);
  VectorXd grad, curv;
  auto objective = [&](const VectorXd& vv, const VectorXd& ss) {
    return lik.value(model.offset + ss) - 0.5 * vv.squaredNorm();
  };
  double f = objective(v, s);

  LaplaceMode out;
  for (int it = 0; it <= kNewtonMaxIterations; ++it) {
    lik.derivatives(model.offset + s, grad, curv);
    const VectorXd grad_s = grad - lower.transpose().solve(v);
    out.gradient_norm = grad_s.norm();
    out.iterations = it;
    if (out.gradient_norm < kModeGradientTol) {
      out.converged = true;
      break;
    }
    if (it == kNewtonMaxIterations) break;

    const MatrixXd lt = model.prior.chol.transpose();
    MatrixXd h = lt * curv.asDiagonal() * model.prior.chol;
    h.diagonal().array() += 1.0;
    const VectorXd grad_v = lt * grad - v;
    VectorXd step = h.llt().solve(grad_v);

    VectorXd v_new = v + step;
    VectorXd s_new = lower * v_new;
    double f_new = objective(v_new, s_new);
    const double slack = 1e-12 * (1.0 + std::abs(f));
    for (int halve = 0; halve < 40 && !(f_new >= f - slack); ++halve) {
      step *= 0.5;
      v_new = v + step;
      s_new = lower * v_new;
      f_new = objective(v_new, s_new);
    }
    v = v_new;
    s = s_new;
    f = f_new;
  }
  if (!out.converged) {
    std::ostringstream os;
    os << "Laplace mode search did not converge after " << kNewtonMaxIterations
       << " Newton steps (gradient norm " << out.gradient_norm << ")";
    throw ConvergenceError(os.str());
  }

  lik.derivatives(model.offset + s, grad, curv);
  const MatrixXd linv =
      model.prior.chol.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(n, n));
  MatrixXd hess = linv.transpose() * linv;
  hess.diagonal() += curv;
  Eigen::LLT<MatrixXd> llt(hess);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("negative log-posterior Hessian at the mode is not positive definite");
  out.s_hat = s;
  out.hessian_chol = llt.matrixL();
  return out;
}

}  // namespace

LaplaceMode laplace_mode(const Dataset& data, const Family& family, const GlgmParams& params) {
  const LatentModel model = make_latent_model(data, family, params);
  const ConditionalLikelihood lik(data, family, params.cov.tau2);
  return find_mode(model, lik);
}

namespace {

// Log target and gradient in the standardized coordinates
//   S = s_hat + A u,  A = L_H^{-T}.
class StandardizedTarget {
 public:
  StandardizedTarget(const LatentModel& model, const LaplaceMode& mode,
                     const ConditionalLikelihood& lik)
      : lik_(lik), eta_hat_(model.offset + mode.s_hat) {
    const Index n = eta_hat_.size();
    a_ = mode.hessian_chol.transpose().triangularView<Eigen::Upper>().solve(
        MatrixXd::Identity(n, n));
    const auto lower = model.prior.chol.triangularView<Eigen::Lower>();
    m_ = lower.solve(a_);
    v_hat_ = lower.solve(mode.s_hat);
  }

  // Returns log pi(u); fills grad. Throws on a non-finite log-posterior.
  double evaluate(const VectorXd& u, VectorXd& grad) {
    eta_.noalias() = eta_hat_;
    eta_.noalias() += a_.triangularView<Eigen::Upper>() * u;
    white_.noalias() = v_hat_;
    white_.noalias() += m_ * u;
    const double value = lik_.value(eta_) - 0.5 * white_.squaredNorm();
    if (!std::isfinite(value)) report_non_finite();
    lik_.derivatives(eta_, lik_grad_, curv_);
    grad.noalias() = a_.triangularView<Eigen::Upper>().transpose() * lik_grad_;
    grad.noalias() -= m_.transpose() * white_;
    return value;
  }

  const MatrixXd& a() const { return a_; }

 private:
  [[noreturn]] void report_non_finite() const {
    for (Index i = 0; i < eta_.size(); ++i) {
      if (!std::isfinite(eta_(i)) || !std::isfinite(lik_.term(i, eta_(i)))) {
        std::ostringstream os;
        os << "non-finite log-posterior at site component " << i << " (eta=" << eta_(i) << ")";
        throw SamplerError(os.str());
      }
    }
    throw SamplerError("non-finite log-posterior in the latent-field prior term");
  }

  const ConditionalLikelihood& lik_;
  VectorXd eta_hat_;
  MatrixXd a_;
  MatrixXd m_;
  VectorXd v_hat_;
  VectorXd eta_, white_, lik_grad_, curv_;
};

}  // namespace

PosteriorDraws sample_posterior(const Dataset& data, const Family& family,
                                const GlgmParams& params, const SamplerSchedule& schedule) {
  if (schedule.samples < 1) throw InputError("sampler needs at least one retained draw");
  if (schedule.thin < 1) throw InputError("thinning interval must be at least 1");
  if (schedule.burn_in < 0) throw InputError("burn-in must be nonnegative");

  const LatentModel model = make_latent_model(data, family, params);
  const ConditionalLikelihood lik(data, family, params.cov.tau2);
  const LaplaceMode mode = find_mode(model, lik);
  StandardizedTarget target(model, mode, lik);

  const Index n = data.size();
  std::mt19937_64 rng(schedule.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  PosteriorDraws out;
  out.draws.resize(schedule.samples, n);
  out.burn_in = schedule.burn_in;
  out.thin = schedule.thin;
  out.seed = schedule.seed;

  double h = 1.65 * std::pow(static_cast<double>(n), -1.0 / 6.0);
  out.initial_step_size = h;

  VectorXd u = VectorXd::Zero(n);
  VectorXd grad(n), grad_prop(n), z(n), u_prop(n);
  double logp = target.evaluate(u, grad);

  const long total = static_cast<long>(schedule.burn_in) +
                     static_cast<long>(schedule.samples) * schedule.thin;
  long accepted_burn = 0;
  long accepted_after = 0;
  Index stored = 0;
  for (long t = 1; t <= total; ++t) {
    for (Index i = 0; i < n; ++i) z(i) = normal(rng);
    const double h2 = h * h;
    u_prop = u + 0.5 * h2 * grad + h * z;
    const double logp_prop = target.evaluate(u_prop, grad_prop);
    // log q(u | u') - log q(u' | u)
    const double reverse = (u - u_prop - 0.5 * h2 * grad_prop).squaredNorm();
    const double forward = (h * z).squaredNorm();
    const double log_ratio = logp_prop - logp - (reverse - forward) / (2.0 * h2);
    const double alpha = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    const bool accept = std::log(uniform(rng)) < log_ratio;
    if (accept) {
      u.swap(u_prop);
      grad.swap(grad_prop);
      logp = logp_prop;
    }
    if (t <= schedule.burn_in) {
      accepted_burn += accept;
      const double kappa = std::pow(static_cast<double>(t), -0.6);
      h *= std::exp(kappa * (alpha - kTargetAcceptance));
    } else {
      accepted_after += accept;
      if ((t - schedule.burn_in) % schedule.thin == 0) {
        out.draws.row(stored++) =
            (mode.s_hat + target.a().triangularView<Eigen::Upper>() * u).transpose();
      }
    }
  }
  out.step_size = h;
  out.proposals_after_burn_in = total - schedule.burn_in;
  out.acceptance_rate =
      static_cast<double>(accepted_after) / static_cast<double>(out.proposals_after_burn_in);
  out.burn_in_acceptance =
      schedule.burn_in > 0 ? static_cast<double>(accepted_burn) / schedule.burn_in : 0.0;

  if (out.proposals_after_burn_in >= 50 &&
      (out.acceptance_rate < 0.1 || out.acceptance_rate > 0.9)) {
    std::ostringstream os;
    os << "Langevin sampler acceptance rate " << out.acceptance_rate
       << " outside [0.1, 0.9] after adaptation (step size " << h << ")";
    throw SamplerError(os.str());
  }
  return out;
}

void write_draws_csv(std::ostream& os, const Dataset& data, const PosteriorDraws& draws) {
  const Index n = draws.draws.cols();
  for (Index i = 0; i < n; ++i) {
    if (i) os << ',';
    if (static_cast<Index>(data.ids.size()) == n)
      os << "s_" << data.ids[i];
    else
      os << "s_" << i;
  }
  os << '\n';
  os.precision(17);
  for (Index j = 0; j < draws.draws.rows(); ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i) os << ',';
      os << draws.draws(j, i);
    }
    os << '\n';
  }
}

}  // namespace geor2
