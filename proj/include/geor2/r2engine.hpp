#pragma once

// Monte Carlo coefficients of determination for geostatistical GLMs and the
// prediction standard-error comparison between two fitted models.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geor2/dataset.hpp"
#include "geor2/expfam.hpp"
#include "geor2/posterior.hpp"

namespace geor2 {

inline constexpr int kBatchCount = 20;

// Batch-means standard error of the mean of a (possibly autocorrelated)
// series: kBatchCount batches of floor(B / kBatchCount) values; below
// kBatchCount values every value is its own batch. Empty for fewer than 2.
std::optional<double> batch_means_se(const Eigen::VectorXd& values, int batches = kBatchCount);

// Inner sums sum_i c_V(y_i, g^{-1}(d_i^T beta + s_j(x_i))), one per draw.
Eigen::VectorXd draw_total_variations(const Dataset& data, const Family& family,
                                      const Eigen::VectorXd& beta, const Eigen::MatrixXd& draws);

struct McEstimate {
  double mean = 0.0;
  std::optional<double> mc_se;  // empty when B = 1
};

McEstimate total_variation_mc(const Dataset& data, const Family& family, const GlgmParams& params,
                              const PosteriorDraws& draws);

struct R2Estimate {
  double value = 0.0;
  std::optional<double> mc_se;
};

// 1 - E[total variation | y] / sum_i c_V(y_i, yhat_0), yhat_0 from the
// intercept-only GLM.
R2Estimate r2_glgm_mc(const Dataset& data, const Family& family, const GlgmParams& params,
                      const PosteriorDraws& draws);

// 1 - E_with[...] / E_without[...]. `without` must be intercept-only; its
// draws come from the intercept-only model. Standard error by the delta
// method treating the two chains as independent.
R2Estimate partial_r2(const Dataset& data, const Family& family, const GlgmParams& with,
                      const PosteriorDraws& draws_with, const GlgmParams& without,
                      const PosteriorDraws& draws_without);

// Per-site standard deviation over draws of g^{-1}(d_i^T beta + s_j(x_i)).
Eigen::VectorXd prevalence_se(const Dataset& data, const Family& family, const GlgmParams& params,
                              const PosteriorDraws& draws);

struct SeRecord {
  std::string site_id;
  double x1 = 0.0;
  double x2 = 0.0;
  double se_without = 0.0;
  double se_with = 0.0;
  double rel_reduction = 0.0;  // 1 - se_with / se_without
};

struct SeComparison {
  std::vector<SeRecord> sites;
  double max_relative_reduction = 0.0;
  double fraction_not_larger = 0.0;  // share of sites with se_with <= se_without
};

SeComparison compare_se(const Dataset& data, const Eigen::VectorXd& se_without,
                        const Eigen::VectorXd& se_with);

struct R2Report {
  double r2_glm = 0.0;
  double r2_glgm = 0.0;
  std::optional<double> r2_glgm_mc_se;
  std::optional<double> partial_r2;
  std::optional<double> partial_r2_mc_se;
  int B = 0;
  std::uint64_t seed = 0;
};

}  // namespace geor2
