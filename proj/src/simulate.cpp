#include "geor2/simulate.hpp"

#include <random>
#include <sstream>

#include "geor2/error.hpp"
#include "geor2/gpcov.hpp"
#include "geor2/seeds.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TrendKind trend_from_name(std::string_view name) {
  if (name == "none") return TrendKind::none;
  if (name == "planar") return TrendKind::planar;
  if (name == "normal") return TrendKind::normal;
  throw InputError("unknown trend '" + std::string(name) + "' (expected none, planar or normal)");
}

std::string_view trend_name(TrendKind kind) {
  switch (kind) {
    case TrendKind::none: return "none";
    case TrendKind::planar: return "planar";
    case TrendKind::normal: return "normal";
  }
  return "none";
}

namespace {

Index covariate_count(const SimSpec& spec) {
  switch (spec.trend) {
    case TrendKind::none: return 0;
    case TrendKind::planar: return 2;
    case TrendKind::normal: return spec.normal_covariates;
  }
  return 0;
}

}  // namespace

void SimSpec::validate() const {
  auto bad = [](const std::string& what) { throw InputError("invalid simulation spec: " + what); };
  if (n < 3) bad("n must be at least 3");
  if (!(xmin < xmax) || !(ymin < ymax)) bad("bounding box is empty");
  if (truth.beta.size() != covariate_count(*this) + 1) {
    std::ostringstream os;
    os << "trend '" << trend_name(trend) << "' needs " << covariate_count(*this) + 1
       << " coefficients, got " << truth.beta.size();
    bad(os.str());
  }
  if (!(truth.cov.sigma2 >= 0.0)) bad("sigma2 must be nonnegative");
  if (!(truth.cov.phi > 0.0)) bad("phi must be positive");
  if (!(truth.cov.tau2 >= 0.0)) bad("tau2 must be nonnegative");
  if (trend == TrendKind::normal && normal_covariates < 1) bad("normal trend needs covariates");
  if (family.kind == FamilyKind::binomial && (m_min < 1 || m_max < m_min))
    bad("binomial trials range must satisfy 1 <= m_min <= m_max");
  if (family.kind == FamilyKind::gaussian && !(truth.cov.tau2 > 0.0))
    bad("gaussian responses need a positive nugget tau2");
  if (family.kind == FamilyKind::quasi) bad("quasi families cannot be simulated");
}

Simulation simulate(const SimSpec& spec) {
  spec.validate();
  const Index n = spec.n;
  std::mt19937_64 site_rng(derive_seed(spec.seed, 0));
  std::mt19937_64 cov_rng(derive_seed(spec.seed, 1));
  std::mt19937_64 outcome_rng(derive_seed(spec.seed, 3));
  std::mt19937_64 trials_rng(derive_seed(spec.seed, 4));

  Simulation sim;
  Dataset& data = sim.data;
  data.coords.resize(n, 2);
  std::uniform_real_distribution<double> ux(spec.xmin, spec.xmax);
  std::uniform_real_distribution<double> uy(spec.ymin, spec.ymax);
  for (Index i = 0; i < n; ++i) {
    data.coords(i, 0) = ux(site_rng);
    data.coords(i, 1) = uy(site_rng);
    data.ids.push_back(std::to_string(i + 1));
  }

  const Index k = covariate_count(spec);
  MatrixXd x(n, k);
  switch (spec.trend) {
    case TrendKind::none:
      break;
    case TrendKind::planar:
      x = spec.trend_scale * data.coords;
      data.covariate_names = {"trend_x1", "trend_x2"};
      break;
    case TrendKind::normal: {
      std::normal_distribution<double> normal;
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) x(i, j) = normal(cov_rng);
      for (Index j = 0; j < k; ++j) data.covariate_names.push_back("z" + std::to_string(j + 1));
      break;
    }
  }
  data.design = with_intercept(x);

  sim.latent = VectorXd::Zero(n);
  if (spec.truth.cov.sigma2 > 0.0) {
    CovParams field = spec.truth.cov;
    field.tau2 = 0.0;
    sim.latent = gp_sample(build_cov(data.coords, field), derive_seed(spec.seed, 2));
  }
  const VectorXd eta = data.design * spec.truth.beta + sim.latent;

  data.trials = VectorXd::Ones(n);
  data.y.resize(n);
  std::uniform_int_distribution<int> trials(spec.m_min, spec.m_max);
  for (Index i = 0; i < n; ++i) {
    const double mu = link_invert(spec.family, eta(i));
    switch (spec.family.kind) {
      case FamilyKind::binomial: {
        const int m = trials(trials_rng);
        data.trials(i) = m;
        data.y(i) = std::binomial_distribution<int>(m, mu)(outcome_rng);
        break;
      }
      case FamilyKind::poisson:
        data.y(i) = static_cast<double>(std::poisson_distribution<long>(mu)(outcome_rng));
        break;
      case FamilyKind::gaussian:
        data.y(i) = mu + std::sqrt(spec.truth.cov.tau2) *
                             std::normal_distribution<double>()(outcome_rng);
        break;
      case FamilyKind::quasi:
        break;
    }
  }
  return sim;
}

}  // namespace geor2
