#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

#include "geor2/dataset.hpp"
#include "geor2/expfam.hpp"
#include "geor2/posterior.hpp"

namespace geor2 {

enum class TrendKind {
  none,    // intercept only
  planar,  // covariates trend_x1 = scale * x1, trend_x2 = scale * x2
  normal,  // covariates z1..zk drawn iid N(0, 1)
};

TrendKind trend_from_name(std::string_view name);
std::string_view trend_name(TrendKind kind);

struct SimSpec {
  int n = 100;
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  Family family = Family::binomial();
  // sigma2 = 0 switches the latent field off.
  GlgmParams truth;
  int m_min = 1;
  int m_max = 1;
  TrendKind trend = TrendKind::none;
  int normal_covariates = 0;
  double trend_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Simulation {
  Dataset data;
  Eigen::VectorXd latent;  // realized S(x_i)
};

// Sites uniform in the box, S from the exponential-covariance process,
// outcomes from the family given eta = d^T beta + S.
Simulation simulate(const SimSpec& spec);

}  // namespace geor2
