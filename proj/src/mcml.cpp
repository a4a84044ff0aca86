#include "geor2/mcml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geor2/error.hpp"
#include "geor2/glm.hpp"
#include "geor2/likelihood.hpp"
#include "geor2/optim.hpp"
#include "geor2/seeds.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

GlgmParams default_init(const Dataset& data, const Family& family) {
  GlgmParams init;
  init.beta = fit_glm(data, family).beta;
  const double diag =
      (data.coords.colwise().maxCoeff() - data.coords.colwise().minCoeff()).norm();
  init.cov = CovParams{1.0, diag / 4.0, 0.0};
  return init;
}

CoefficientSplit choose_split(const Dataset& data, const Family& family,
                              const GlgmParams& reference) {
  const LaplaceMode mode = laplace_mode(data, family, reference);
  const ConditionalLikelihood lik(data, family, reference.cov.tau2);
  VectorXd grad, w;
  lik.derivatives(data.design * reference.beta + mode.s_hat, grad, w);
  const CovMatrix prior = build_cov(data.coords, reference.cov);
  const auto h = mode.hessian_chol.triangularView<Eigen::Lower>();
  const MatrixXd& d = data.design;
  const MatrixXd field = h.solve(w.asDiagonal() * d);
  const MatrixXd latent = h.solve(prior.chol.transpose().triangularView<Eigen::Upper>().solve(
      prior.chol.triangularView<Eigen::Lower>().solve(d)));
  CoefficientSplit split(static_cast<std::size_t>(d.cols()));
  for (Index j = 0; j < d.cols(); ++j)
    split[static_cast<std::size_t>(j)] = latent.col(j).squaredNorm() < field.col(j).squaredNorm();
  return split;
}

McRelativeLikelihood::McRelativeLikelihood(const Dataset& data, const Family& family,
                                           const GlgmParams& reference, MatrixXd draws,
                                           CoefficientSplit split)
    : data_(data), family_(family), draws_(std::move(draws)), split_(std::move(split)),
      beta0_(reference.beta), tau2_(reference.cov.tau2) {
  static_cast<void>(ConditionalLikelihood{data_, family_, tau2_});  // rejects unsupported families
  reference.validate(data);
  if (draws_.cols() != data.size() || draws_.rows() < 1)
    throw InputError("draw matrix does not match the dataset");
  if (!split_.empty() && split_.size() != static_cast<std::size_t>(data.design.cols()))
    throw InputError("coefficient split does not match the design");
  any_absorbed_ = std::any_of(split_.begin(), split_.end(), [](bool a) { return a; });
  all_absorbed_ = !split_.empty() && std::all_of(split_.begin(), split_.end(), [](bool a) { return a; });
  distances_ = distance_matrix(data.coords);
  min_distance_ = min_pairwise_distance(data.coords);
  if (!prior_terms(reference.cov.phi))
    throw IllConditionedError("reference correlation matrix is singular");
  reference_ = joint(reference);
}

bool McRelativeLikelihood::prior_terms(double phi) const {
  if (cached_phi_ && *cached_phi_ == phi) return true;
  CovMatrix r;
  try {
    r = factorize_with_jitter(exponential_correlation(distances_, phi), 1.0, min_distance_);
  } catch (const IllConditionedError&) {
    cached_phi_.reset();
    return false;
  }
  // Columns of L^{-1} S^T are the whitened draws.
  const auto l = r.chol.triangularView<Eigen::Lower>();
  const MatrixXd white = l.solve(draws_.transpose());
  quad_ = white.colwise().squaredNorm().transpose();
  log_det_ = r.log_det;
  if (any_absorbed_) {
    const MatrixXd c = l.solve(data_.design);
    cross_ = white.transpose() * c;
    gram_ = c.transpose() * c;
  }
  cached_phi_ = phi;
  return true;
}

VectorXd McRelativeLikelihood::conditional_terms(const VectorXd& beta) const {
  if (cached_beta_ && cached_beta_->size() == beta.size() && *cached_beta_ == beta) return cond_;
  const ConditionalLikelihood lik(data_, family_, tau2_);
  const VectorXd offset = data_.design * beta;
  const Index b = draws_.rows();
  VectorXd acc = VectorXd::Zero(b);
  for (Index i = 0; i < draws_.cols(); ++i) {
    const double off = offset(i);
    const auto col = draws_.col(i);
    for (Index j = 0; j < b; ++j) acc(j) += lik.term(i, off + col(j));
  }
  cached_beta_ = beta;
  cond_ = acc;
  return acc;
}

// Per-draw log joint density up to terms that cancel against the reference.
VectorXd McRelativeLikelihood::joint(const GlgmParams& params) const {
  const double n = static_cast<double>(data_.size());
  const double s2 = params.cov.sigma2;
  // Absorbed coefficients keep their reference value inside p(y | .) and move
  // the prior mean instead: u_j - D_A beta_A = s_j - D_A delta_A.
  VectorXd in_lik = params.beta;
  VectorXd delta = VectorXd::Zero(params.beta.size());
  for (std::size_t j = 0; j < split_.size(); ++j) {
    if (!split_[j]) continue;
    const auto k = static_cast<Index>(j);
    in_lik(k) = beta0_(k);
    delta(k) = params.beta(k) - beta0_(k);
  }
  VectorXd q = quad_;
  if (any_absorbed_)
    q += VectorXd::Constant(q.size(), delta.dot(gram_ * delta)) - 2.0 * cross_ * delta;
  VectorXd out = (-0.5 * (n * std::log(s2) + log_det_ + q.array() / s2)).matrix();
  if (!all_absorbed_) out += conditional_terms(in_lik);  // constant when everything is absorbed
  return out;
}

double McRelativeLikelihood::operator()(const GlgmParams& params) const {
  const double s2 = params.cov.sigma2;
  if (!(s2 > 0.0) || !(params.cov.phi > 0.0) || !std::isfinite(s2) ||
      !std::isfinite(params.cov.phi))
    return -std::numeric_limits<double>::infinity();
  if (!prior_terms(params.cov.phi)) return -std::numeric_limits<double>::infinity();
  const VectorXd w = joint(params) - reference_;
  const double top = w.maxCoeff();
  if (!std::isfinite(top)) return -std::numeric_limits<double>::infinity();
  return top + std::log((w.array() - top).exp().sum()) -
         std::log(static_cast<double>(w.size()));
}

namespace {

// Maps optimization coordinates theta = (gamma, [log sigma2], [log phi]) to
// parameters. gamma are coefficients of the centred and scaled design, so
// beta = T gamma.
class Parameterization {
 public:
  Parameterization(const Dataset& data, const McmlSchedule& schedule)
      : p_(data.design.cols()), fixed_sigma2_(schedule.fixed_sigma2),
        fixed_phi_(schedule.fixed_phi) {
    t_ = MatrixXd::Identity(p_, p_);
    for (Index j = 1; j < p_; ++j) {
      const auto col = data.design.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() /
                                  static_cast<double>(col.size()));
      t_(j, j) = 1.0 / sd;
      t_(0, j) = -mean / sd;
    }
    t_inv_ = t_.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p_, p_));
  }

  Index size() const { return p_ + (fixed_sigma2_ ? 0 : 1) + (fixed_phi_ ? 0 : 1); }
  Index num_beta() const { return p_; }
  bool sigma2_free() const { return !fixed_sigma2_; }
  bool phi_free() const { return !fixed_phi_; }
  const MatrixXd& t() const { return t_; }

  VectorXd to_theta(const GlgmParams& params) const {
    VectorXd theta(size());
    theta.head(p_) = t_inv_ * params.beta;
    Index k = p_;
    if (!fixed_sigma2_) theta(k++) = std::log(params.cov.sigma2);
    if (!fixed_phi_) theta(k++) = std::log(params.cov.phi);
    return theta;
  }

  GlgmParams from_theta(const VectorXd& theta) const {
    GlgmParams out;
    out.beta = t_ * theta.head(p_);
    Index k = p_;
    out.cov.sigma2 = fixed_sigma2_ ? *fixed_sigma2_ : std::exp(theta(k++));
    out.cov.phi = fixed_phi_ ? *fixed_phi_ : std::exp(theta(k++));
    out.cov.tau2 = 0.0;
    return out;
  }

 private:
  Index p_;
  std::optional<double> fixed_sigma2_;
  std::optional<double> fixed_phi_;
  MatrixXd t_;
  MatrixXd t_inv_;
};

}  // namespace

McmlFit fit_mcml(const Dataset& data, const Family& family, const GlgmParams& init,
                 const McmlSchedule& schedule) {
  if (family.kind != FamilyKind::binomial || family.link != Link::logit)
    throw DomainError("Monte Carlo maximum likelihood is implemented for binomial/logit only");
  validate_dataset(data, family);
  if (schedule.max_reference_updates < 1)
    throw InputError("at least one reference update is required");

  const Parameterization param(data, schedule);
  GlgmParams reference = param.from_theta(param.to_theta(init));
  reference.validate(data);

  McmlFit fit;
  optim::Options opts;
  opts.diff_step = 1e-5;
  opts.gradient_tol = 1e-5;
  VectorXd theta_hat;
  std::optional<McRelativeLikelihood> mc;

  for (int k = 0; k < schedule.max_reference_updates; ++k) {
    SamplerSchedule sched = schedule.sampler;
    sched.seed = derive_seed(schedule.sampler.seed, static_cast<std::uint64_t>(k));
    PosteriorDraws draws = sample_posterior(data, family, reference, sched);
    fit.acceptance_rates.push_back(draws.acceptance_rate);
    CoefficientSplit split = schedule.split ? *schedule.split : choose_split(data, family, reference);
    fit.splits.push_back(split);
    mc.emplace(data, family, reference, std::move(draws.draws), std::move(split));

    const VectorXd theta0 = param.to_theta(reference);
    auto objective = [&](const VectorXd& theta) { return -(*mc)(param.from_theta(theta)); };
    const optim::Result opt = optim::minimize_bfgs(objective, theta0, opts);
    if (!opt.converged && opt.gradient.cwiseAbs().maxCoeff() > 1e-3) {
      std::ostringstream os;
      os << "MC likelihood optimizer failed at reference update " << k + 1
         << " (gradient " << opt.gradient.cwiseAbs().maxCoeff() << ")";
      throw ConvergenceError(os.str());
    }
    theta_hat = opt.x;
    fit.relative_likelihood_at_optimum = -opt.value;
    const double change = (theta_hat - theta0).cwiseAbs().maxCoeff();
    fit.parameter_changes.push_back(change);
    fit.reference_updates = k + 1;
    if (change < schedule.tolerance) {
      fit.converged = true;
      break;
    }
    reference = param.from_theta(theta_hat);
  }

  // Observed information of the MC log-likelihood at the optimum.
  auto objective = [&](const VectorXd& theta) { return -(*mc)(param.from_theta(theta)); };
  const MatrixXd hess = optim::central_hessian(objective, theta_hat, 1e-4);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (hess + hess.transpose()));
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  fit.hessian_condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(lmin > 0.0) || !std::isfinite(lmax)) {
    std::ostringstream os;
    os << "MC log-likelihood Hessian is not positive definite (condition number "
       << fit.hessian_condition << ", smallest eigenvalue " << lmin << ")";
    throw IllConditionedError(os.str());
  }
  const MatrixXd cov_theta = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                             eig.eigenvectors().transpose();

  const Index p = param.num_beta();
  fit.params = param.from_theta(theta_hat);
  fit.mc_samples_used = schedule.sampler.samples;
  for (Index j = 0; j < p; ++j)
    fit.parameter_names.push_back(j == 0 ? "(intercept)" : data.covariate_names[j - 1]);
  fit.parameter_names.push_back("sigma2");
  fit.parameter_names.push_back("phi");

  fit.estimates.resize(p + 2);
  fit.estimates.head(p) = fit.params.beta;
  fit.estimates(p) = fit.params.cov.sigma2;
  fit.estimates(p + 1) = fit.params.cov.phi;
  fit.std_errors = VectorXd::Constant(p + 2, std::numeric_limits<double>::quiet_NaN());
  fit.ci95.assign(p + 2, Interval{});

  const MatrixXd cov_beta = param.t() * cov_theta.topLeftCorner(p, p) * param.t().transpose();
  for (Index j = 0; j < p; ++j) {
    const double se = std::sqrt(cov_beta(j, j));
    fit.std_errors(j) = se;
    fit.ci95[j] = {fit.params.beta(j) - 1.96 * se, fit.params.beta(j) + 1.96 * se};
  }
  Index k = p;
  auto log_scale = [&](Index slot, bool free, double value) {
    if (!free) {
      fit.ci95[slot] = {value, value};
      return;
    }
    const double se = std::sqrt(cov_theta(k, k));
    fit.std_errors(slot) = se;
    fit.ci95[slot] = {std::exp(std::log(value) - 1.96 * se), std::exp(std::log(value) + 1.96 * se)};
    ++k;
  };
  log_scale(p, param.sigma2_free(), fit.params.cov.sigma2);
  log_scale(p + 1, param.phi_free(), fit.params.cov.phi);
  return fit;
}

}  // namespace geor2
