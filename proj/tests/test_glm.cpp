#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "geor2/error.hpp"
#include "geor2/glm.hpp"
#include "oracles.hpp"

using namespace geor2;
using Eigen::VectorXd;

namespace {

Dataset tiny(const VectorXd& y, const VectorXd& m) {
  Dataset d = oracle::grid_dataset(static_cast<int>(y.size()), 3, 0);
  d.y = y;
  d.trials = m;
  return d;
}

// Re-evaluates the coefficient of determination term by term.
double r2_literal(const Family& f, const VectorXd& obs, const VectorXd& fitted, double base) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    num += c_v(f, obs(i), fitted(i)).value;
    den += c_v(f, obs(i), base).value;
  }
  return 1.0 - num / den;
}

}  // namespace

TEST_SUITE("glm") {

TEST_CASE("baseline predictions") {
  CHECK(baseline_prediction(tiny(VectorXd{{1.0, 2.0, 3.0}}, VectorXd::Ones(3)), Family::gaussian()) ==
        doctest::Approx(2.0).epsilon(1e-14));
  // Pooled proportion 6/12; three sites because datasets need n >= 3.
  CHECK(baseline_prediction(tiny(VectorXd{{1.0, 3.0, 2.0}}, VectorXd{{2.0, 6.0, 4.0}}),
                            Family::binomial()) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(baseline_prediction(tiny(VectorXd{{0.0, 2.0, 4.0}}, VectorXd::Ones(3)), Family::poisson()) ==
        doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("gaussian IRLS is least squares") {
  Dataset d = oracle::gaussian_dataset(60, 41, 2, VectorXd{{1.0, 2.0, -0.5}}, 0.0, 0.1, 1.0);
  const GlmFit fit = fit_glm(d, Family::gaussian());
  const oracle::Ols ols = oracle::least_squares(d.design, d.y);
  CHECK((fit.beta - ols.beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(r2_glm(d, Family::gaussian(), fit) - (1.0 - ols.rss / ols.tss)) < 1e-12);
  CHECK(fit.dispersion == doctest::Approx(ols.rss / (60 - 3)).epsilon(1e-12));
  CHECK(fit.converged);
}

TEST_CASE("logistic regression against independent Newton scoring") {
  const VectorXd truth{{-1.0, 0.5, -0.5}};
  const Dataset d = oracle::binomial_dataset(200, 17, 2, 10, truth, 0.0, 0.1);
  const GlmFit fit = fit_glm(d, Family::binomial());
  const VectorXd ref = oracle::newton_logistic(d.design, d.y, d.trials);
  CHECK((fit.beta - ref).cwiseAbs().maxCoeff() < 1e-9);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(fit.beta(j) - truth(j)) < 3.0 * fit.std_errors(j));
  CHECK(fit.max_abs_score < kIrlsScoreTol);
  CHECK(!fit.separation_warning);
}

TEST_CASE("poisson regression against independent Newton scoring") {
  Dataset d = oracle::grid_dataset(150, 5, 1);
  std::mt19937_64 rng(5);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    std::poisson_distribution<int> pois(std::exp(0.7 + 0.4 * d.design(i, 1)));
    d.y(i) = pois(rng);
  }
  const GlmFit fit = fit_glm(d, Family::poisson());
  CHECK((fit.beta - oracle::newton_poisson(d.design, d.y)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("coefficient of determination") {
  const Dataset strong = oracle::binomial_dataset(150, 23, 1, 20, VectorXd{{0.0, 1.5}}, 0.0, 0.1);
  const GlmFit fit = fit_glm(strong, Family::binomial());
  const double r2 = r2_glm(strong, Family::binomial(), fit);
  const VectorXd props = strong.y.cwiseQuotient(strong.trials);
  CHECK(r2 == doctest::Approx(r2_literal(Family::binomial(), props, fit.fitted_means,
                                         baseline_prediction(strong, Family::binomial())))
                  .epsilon(1e-12));
  const Dataset none = strong.intercept_only();
  CHECK(r2_glm(none, Family::binomial(), fit_glm(none, Family::binomial())) == 0.0);
  CHECK(r2 > 0.3);
  CHECK(r2 <= 1.0);
}

TEST_CASE("intercept-only designs give exactly zero") {
  for (const Family& f : {Family::gaussian(), Family::poisson()}) {
    Dataset d = oracle::gaussian_dataset(40, 8, 0, VectorXd{{3.0}}, 0.5, 0.2, 0.5);
    d.y = d.y.cwiseAbs().array().round();
    CHECK(r2_glm(d, f, fit_glm(d, f)) == 0.0);
  }
}

TEST_CASE("affine rescaling of a covariate leaves R2 unchanged") {
  Dataset d = oracle::binomial_dataset(120, 31, 2, 15, VectorXd{{-0.5, 0.8, 0.3}}, 0.0, 0.1);
  const double r2 = r2_glm(d, Family::binomial(), fit_glm(d, Family::binomial()));
  d.design.col(1) = 1000.0 * d.design.col(1).array() + 250.0;
  d.design.col(2) = -0.001 * d.design.col(2).array() - 7.0;
  const GlmFit fit = fit_glm(d, Family::binomial());
  CHECK(std::abs(r2_glm(d, Family::binomial(), fit) - r2) < 1e-10);
}

TEST_CASE("permuting observations leaves outputs unchanged") {
  const Dataset d = oracle::binomial_dataset(80, 2, 1, 12, VectorXd{{0.3, -0.6}}, 0.0, 0.1);
  std::vector<int> order(80);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(1));
  Dataset p = d;
  for (int i = 0; i < 80; ++i) {
    p.ids[i] = d.ids[order[i]];
    p.coords.row(i) = d.coords.row(order[i]);
    p.design.row(i) = d.design.row(order[i]);
    p.y(i) = d.y(order[i]);
    p.trials(i) = d.trials(order[i]);
  }
  const GlmFit a = fit_glm(d, Family::binomial());
  const GlmFit b = fit_glm(p, Family::binomial());
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(r2_glm(d, Family::binomial(), a) == doctest::Approx(r2_glm(p, Family::binomial(), b)).epsilon(1e-12));
}

TEST_CASE("proportions of exactly 0 and 1 enter c_V as they are") {
  Dataset d = oracle::grid_dataset(6, 4, 1);
  d.trials = VectorXd::Constant(6, 5.0);
  d.y = VectorXd{{0.0, 5.0, 1.0, 4.0, 2.0, 3.0}};
  const GlmFit fit = fit_glm(d, Family::binomial());
  CHECK(std::isfinite(r2_glm(d, Family::binomial(), fit)));
}

TEST_CASE("errors") {
  SUBCASE("identical outcomes leave R2 undefined") {
    Dataset d = tiny(VectorXd{{2.0, 2.0, 2.0, 2.0}}, VectorXd::Ones(4));
    CHECK_THROWS_AS(r2_glm(d, Family::gaussian(), fit_glm(d, Family::gaussian())), UndefinedR2Error);
  }
  SUBCASE("rank-deficient design") {
    Dataset d = oracle::grid_dataset(10, 1, 2);
    d.design.col(2) = 2.0 * d.design.col(1);
    d.y = d.design.col(1);
    CHECK_THROWS_AS(fit_glm(d, Family::gaussian()), InputError);
  }
  SUBCASE("binomial count above its denominator") {
    Dataset d = tiny(VectorXd{{1.0, 7.0, 2.0}}, VectorXd{{2.0, 6.0, 4.0}});
    CHECK_THROWS_AS(fit_glm(d, Family::binomial()), InputError);
  }
  SUBCASE("too few sites") {
    Dataset d = tiny(VectorXd{{1.0, 3.0}}, VectorXd{{2.0, 6.0}});
    CHECK_THROWS_AS(fit_glm(d, Family::binomial()), InputError);
  }
  SUBCASE("duplicate coordinates") {
    Dataset d = tiny(VectorXd{{1.0, 3.0, 2.0}}, VectorXd{{2.0, 6.0, 4.0}});
    d.coords.row(2) = d.coords.row(0);
    CHECK_THROWS_AS(fit_glm(d, Family::binomial()), InputError);
  }
  SUBCASE("complete separation is flagged") {
    Dataset d = oracle::grid_dataset(20, 9, 1);
    d.trials = VectorXd::Ones(20);
    for (int i = 0; i < 20; ++i) d.y(i) = d.design(i, 1) > 0.0 ? 1.0 : 0.0;
    bool flagged = false;
    try {
      flagged = fit_glm(d, Family::binomial()).separation_warning;
    } catch (const ConvergenceError&) {
      flagged = true;
    }
    CHECK(flagged);
  }
}

}  // TEST_SUITE
