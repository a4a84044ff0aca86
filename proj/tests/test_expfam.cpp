#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "geor2/error.hpp"
#include "geor2/expfam.hpp"
#include "oracles.hpp"

using namespace geor2;

TEST_SUITE("expfam") {

TEST_CASE("closed forms on the documented examples") {
  CHECK(c_v(Family::gaussian(), 1.0, 3.0).value == 4.0);
  CHECK(c_v(Family::poisson(), 0.0, 1.0).value == doctest::Approx(2.0).epsilon(1e-15));
  // 30-digit quadrature of sqrt(1 + (1 - 2u)^2) over [0.2, 0.5], squared.
  const CvResult r = c_v(Family::binomial(), 0.2, 0.5);
  CHECK(std::abs(r.value - 0.100574469655079243737552886275) < 1e-14);
  CHECK(r.method == CvMethod::closed_form);
  CHECK(r.abs_error_bound == 0.0);
}

TEST_CASE("named families match quadrature on random endpoints") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> wide(0.0, 40.0);
  for (int k = 0; k < 100; ++k) {
    const double a = unit(rng), b = unit(rng);
    CHECK(std::abs(c_v(Family::binomial(), a, b).value -
                   c_v_quadrature(Family::binomial(), a, b).value) < 1e-10);
    const double c = wide(rng), d = wide(rng);
    CHECK(std::abs(c_v(Family::poisson(), c, d).value -
                   c_v_quadrature(Family::poisson(), c, d).value) < 1e-10 * std::max(1.0, (c - d) * (c - d)));
    const double lo = c - 20.0;
    CHECK(c_v(Family::gaussian(), lo, d).value == (d - lo) * (d - lo));
  }
}

TEST_CASE("binomial closed form against an independent Gauss-Legendre rule") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const double a = unit(rng), b = unit(rng);
    const double ref = oracle::arc_length_squared([](double u) { return 1.0 - 2.0 * u; }, a, b);
    CHECK(c_v(Family::binomial(), a, b).value == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("symmetry, zero on the diagonal and additivity of arc length") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const Family& f : {Family::binomial(), Family::poisson(), Family::gaussian()}) {
    for (int k = 0; k < 30; ++k) {
      double v[3] = {unit(rng), unit(rng), unit(rng)};
      std::sort(v, v + 3);
      CHECK(c_v(f, v[0], v[1]).value == c_v(f, v[1], v[0]).value);
      CHECK(c_v(f, v[2], v[2]).value == 0.0);
      const double whole = std::sqrt(c_v(f, v[0], v[2]).value);
      const double parts = std::sqrt(c_v(f, v[0], v[1]).value) + std::sqrt(c_v(f, v[1], v[2]).value);
      CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
      // Arc length is never shorter than the chord along the mean axis.
      CHECK(c_v(f, v[0], v[2]).value >= (v[2] - v[0]) * (v[2] - v[0]) * (1 - 1e-15));
    }
  }
}

TEST_CASE("quasi families integrate numerically") {
  SUBCASE("variance mu^2 with analytic derivative") {
    const Family f = Family::quasi(Link::log, [](double u) { return u * u; },
                                   [](double u) { return 2.0 * u; }, 0.0);
    const CvResult r = c_v(f, 0.5, 2.0);
    CHECK(r.method == CvMethod::quadrature);
    CHECK(std::abs(r.value - 16.588408311815219648116106189) < 1e-9);
    CHECK(r.abs_error_bound <= 1e-9);
  }
  SUBCASE("finite-difference derivative reproduces the binomial closed form") {
    const Family f = Family::quasi(Link::logit, [](double u) { return u * (1.0 - u); }, {}, 0.0, 1.0);
    CHECK(c_v(f, 0.0, 1.0).value == doctest::Approx(c_v(Family::binomial(), 0.0, 1.0).value).epsilon(1e-9));
    CHECK(c_v(f, 0.13, 0.71).value == doctest::Approx(c_v(Family::binomial(), 0.13, 0.71).value).epsilon(1e-9));
  }
  SUBCASE("quasi-Poisson equals Poisson") {
    const Family f = Family::quasi(Link::log, [](double u) { return u; }, {}, 0.0);
    CHECK(c_v(f, 0.0, 5.0).value == doctest::Approx(50.0).epsilon(1e-10));
  }
}

TEST_CASE("quadrature reports non-convergence instead of truncating") {
  // V'(u) = 1/u^2 near 0 makes the arc length diverge.
  const Family f = Family::quasi(Link::log, [](double u) { return -1.0 / u; },
                                 [](double u) { return 1.0 / (u * u); }, 0.0);
  CHECK_THROWS_AS(c_v(f, 1e-300, 1.0), ConvergenceError);
}

TEST_CASE("domain violations") {
  CHECK_THROWS_AS(c_v(Family::binomial(), -0.1, 0.5), DomainError);
  CHECK_THROWS_AS(c_v(Family::binomial(), 0.5, 1.01), DomainError);
  CHECK_THROWS_AS(c_v(Family::poisson(), -1.0, 2.0), DomainError);
  CHECK_THROWS_AS(c_v(Family::gaussian(), std::numeric_limits<double>::quiet_NaN(), 1.0), DomainError);
  CHECK_THROWS_AS(link_apply(Family::binomial(), 1.5), DomainError);
  CHECK_THROWS_AS(link_apply(Family::poisson(), -2.0), DomainError);
  CHECK_THROWS_AS(family_from_name("gamma"), InputError);
}

TEST_CASE("variance functions of the named families") {
  CHECK(Family::binomial().variance(0.3) == doctest::Approx(0.21));
  CHECK(Family::binomial().variance_deriv(0.3) == doctest::Approx(0.4));
  CHECK(Family::poisson().variance(4.0) == 4.0);
  CHECK(Family::poisson().variance_deriv(4.0) == 1.0);
  CHECK(Family::gaussian().variance_deriv(-3.0) == 0.0);
  for (double mu : {0.0, 0.1, 0.5, 0.99, 1.0}) CHECK(Family::binomial().variance(mu) >= 0.0);
}

TEST_CASE("links") {
  CHECK(link_invert(Family::binomial(), 0.0) == 0.5);
  CHECK(link_apply(Family::gaussian(), -2.75) == -2.75);
  CHECK(link_invert(Family::poisson(), std::log(3.0)) == doctest::Approx(3.0).epsilon(1e-15));
  for (const Family& f : {Family::poisson(), Family::gaussian()})
    for (double eta = -30.0; eta <= 30.0; eta += 0.37)
      CHECK(std::abs(link_apply(f, link_invert(f, eta)) - eta) < 1e-12 * std::max(1.0, std::abs(eta)));
  // A mean near 1 is stored to within half an ulp of 1, so the logit can only be
  // recovered to about 2^-53 (1 + e^eta); below zero the full 1e-12 holds.
  for (double eta = -30.0; eta <= 30.0; eta += 0.37) {
    const double err = std::abs(link_apply(Family::binomial(), link_invert(Family::binomial(), eta)) - eta);
    const double limit = eta <= 0.0 ? 1e-12 : 1e-12 + 0x1p-52 * (1.0 + std::exp(eta));
    CHECK(err <= limit);
  }
  // Saturates without overflow.
  CHECK(link_invert(Family::binomial(), 700.0) == 1.0);
  CHECK(link_invert(Family::binomial(), -700.0) >= 0.0);
  CHECK(link_invert(Family::binomial(), -700.0) < 1e-300);
  CHECK(std::isfinite(link_mu_eta(Family::binomial(), link_invert(Family::binomial(), -700.0))));
}

}  // TEST_SUITE
