#pragma once

// Exponential-family links, variance functions and the squared variance
// arc length c_V(a, b) used by every coefficient of determination here.

#include <functional>
#include <limits>
#include <string>
#include <string_view>

namespace geor2 {

enum class FamilyKind { gaussian, binomial, poisson, quasi };
enum class Link { identity, logit, log };

struct Family {
  FamilyKind kind = FamilyKind::gaussian;
  Link link = Link::identity;

  // Only consulted for kind == quasi.
  std::function<double(double)> quasi_variance;
  std::function<double(double)> quasi_variance_deriv;  // empty: central differences
  double quasi_lower = -std::numeric_limits<double>::infinity();
  double quasi_upper = std::numeric_limits<double>::infinity();

  static Family gaussian();
  static Family binomial();
  static Family poisson();
  static Family quasi(Link link, std::function<double(double)> variance,
                      std::function<double(double)> variance_deriv = {},
                      double lower = -std::numeric_limits<double>::infinity(),
                      double upper = std::numeric_limits<double>::infinity());

  double variance(double mu) const;
  double variance_deriv(double mu) const;

  // Closed mean domain [lower, upper] on which c_V is defined.
  double mean_lower() const;
  double mean_upper() const;
  bool in_mean_domain(double mu) const;

  std::string_view name() const;
};

Family family_from_name(std::string_view name);
std::string_view link_name(Link link);

double link_apply(const Family& family, double mu);
double link_invert(const Family& family, double eta);
// dmu/deta at the given mean.
double link_mu_eta(const Family& family, double mu);

enum class CvMethod { closed_form, quadrature };

struct CvResult {
  double value = 0.0;
  double abs_error_bound = 0.0;
  CvMethod method = CvMethod::closed_form;
};

inline constexpr double kCvQuadratureTol = 1e-10;
inline constexpr int kCvQuadratureMaxDepth = 50;

// c_V(a, b) = (int_a^b sqrt(1 + V'(u)^2) du)^2. Closed form for the three
// named families, adaptive Simpson quadrature for quasi.
CvResult c_v(const Family& family, double a, double b);

// Always integrates numerically, whatever the family.
CvResult c_v_quadrature(const Family& family, double a, double b,
                        double abs_tol = kCvQuadratureTol);

// Fast path returning only the value; used in the Monte Carlo inner loops.
double c_v_value(const Family& family, double a, double b);

}  // namespace geor2
