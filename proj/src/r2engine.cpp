#include "geor2/r2engine.hpp"

#include <cmath>
#include <limits>

#include "geor2/error.hpp"
#include "geor2/glm.hpp"

namespace geor2 {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::optional<double> batch_means_se(const VectorXd& values, int batches) {
  const Index b = values.size();
  if (b < 2) return std::nullopt;
  const Index count = b >= batches ? batches : b;
  const Index size = b / count;
  VectorXd means(count);
  for (Index k = 0; k < count; ++k) means(k) = values.segment(k * size, size).mean();
  const double centre = means.mean();
  const double var = (means.array() - centre).square().sum() / static_cast<double>(count - 1);
  return std::sqrt(var / static_cast<double>(count));
}

VectorXd draw_total_variations(const Dataset& data, const Family& family, const VectorXd& beta,
                               const MatrixXd& draws) {
  if (draws.cols() != data.size())
    throw InputError("posterior draws do not match the dataset (column count differs)");
  if (beta.size() != data.design.cols())
    throw InputError("beta length does not match the design matrix");
  const VectorXd obs = data.observed_means(family);
  for (Index i = 0; i < obs.size(); ++i)
    if (!family.in_mean_domain(obs(i)))
      throw DomainError("observed value outside the family mean domain");
  const VectorXd offset = data.design * beta;
  VectorXd totals = VectorXd::Zero(draws.rows());
  for (Index i = 0; i < draws.cols(); ++i) {
    for (Index j = 0; j < draws.rows(); ++j) {
      const double mu = link_invert(family, offset(i) + draws(j, i));
      totals(j) += c_v_value(family, obs(i), mu);
    }
  }
  return totals;
}

McEstimate total_variation_mc(const Dataset& data, const Family& family, const GlgmParams& params,
                              const PosteriorDraws& draws) {
  const VectorXd totals = draw_total_variations(data, family, params.beta, draws.draws);
  return {totals.mean(), batch_means_se(totals)};
}

namespace {

double baseline_variation(const Dataset& data, const Family& family) {
  const double denom =
      sum_cv(family, data.observed_means(family), baseline_prediction(data, family));
  if (!(denom > 0.0))
    throw UndefinedR2Error("R2 undefined: all observations equal the baseline prediction");
  return denom;
}

}  // namespace

R2Estimate r2_glgm_mc(const Dataset& data, const Family& family, const GlgmParams& params,
                      const PosteriorDraws& draws) {
  const double denom = baseline_variation(data, family);
  const McEstimate tv = total_variation_mc(data, family, params, draws);
  R2Estimate out{1.0 - tv.mean / denom, std::nullopt};
  if (tv.mc_se) out.mc_se = *tv.mc_se / denom;
  return out;
}

R2Estimate partial_r2(const Dataset& data, const Family& family, const GlgmParams& with,
                      const PosteriorDraws& draws_with, const GlgmParams& without,
                      const PosteriorDraws& draws_without) {
  if (without.beta.size() != 1)
    throw InputError("the without-covariates model must be intercept-only");
  if (draws_with.draws.cols() != data.size() || draws_without.draws.cols() != data.size())
    throw InputError("mismatched datasets: draw sets have different site counts");
  const McEstimate num = total_variation_mc(data, family, with, draws_with);
  const McEstimate den = total_variation_mc(data.intercept_only(), family, without, draws_without);
  if (!(den.mean > 0.0))
    throw UndefinedR2Error("partial R2 undefined: zero expected variation without covariates");
  const double ratio = num.mean / den.mean;
  R2Estimate out{1.0 - ratio, std::nullopt};
  if (num.mc_se && den.mc_se) {
    const double a = *num.mc_se / num.mean;
    const double b = *den.mc_se / den.mean;
    out.mc_se = std::abs(ratio) * std::sqrt(a * a + b * b);
  }
  return out;
}

VectorXd prevalence_se(const Dataset& data, const Family& family, const GlgmParams& params,
                       const PosteriorDraws& draws) {
  if (draws.draws.cols() != data.size())
    throw InputError("posterior draws do not match the dataset (column count differs)");
  const VectorXd offset = data.design * params.beta;
  const Index b = draws.draws.rows();
  VectorXd se = VectorXd::Zero(data.size());
  if (b < 2) return se;
  for (Index i = 0; i < data.size(); ++i) {
    const VectorXd p = draws.draws.col(i).unaryExpr(
        [&](double s) { return link_invert(family, offset(i) + s); });
    const double mean = p.mean();
    se(i) = std::sqrt((p.array() - mean).square().sum() / static_cast<double>(b - 1));
  }
  return se;
}

SeComparison compare_se(const Dataset& data, const VectorXd& se_without, const VectorXd& se_with) {
  if (se_without.size() != data.size() || se_with.size() != data.size())
    throw InputError("standard-error vectors do not match the dataset");
  SeComparison out;
  out.max_relative_reduction = -std::numeric_limits<double>::infinity();
  Index not_larger = 0;
  for (Index i = 0; i < data.size(); ++i) {
    SeRecord rec;
    rec.site_id = static_cast<Index>(data.ids.size()) == data.size() ? data.ids[i]
                                                                      : std::to_string(i + 1);
    rec.x1 = data.coords(i, 0);
    rec.x2 = data.coords(i, 1);
    rec.se_without = se_without(i);
    rec.se_with = se_with(i);
    rec.rel_reduction = se_without(i) > 0.0 ? 1.0 - se_with(i) / se_without(i) : 0.0;
    out.max_relative_reduction = std::max(out.max_relative_reduction, rec.rel_reduction);
    not_larger += se_with(i) <= se_without(i);
    out.sites.push_back(std::move(rec));
  }
  out.fraction_not_larger = static_cast<double>(not_larger) / static_cast<double>(data.size());
  return out;
}

}  // namespace geor2
