#include "geor2/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "geor2/error.hpp"

namespace geor2 {

namespace {

struct SimpsonState {
  const std::function<double(double)>& f;
  double error_sum = 0.0;
  bool exhausted = false;
};

double simpson_step(SimpsonState& st, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = st.f(lm);
  const double frm = st.f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // A few unconditional bisections guard against a lucky early agreement.
  const bool settled = kCvQuadratureMaxDepth - depth >= 4;
  if (settled && std::abs(delta) <= 15.0 * tol) {
    st.error_sum += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    st.exhausted = true;
    st.error_sum += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_step(st, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(st, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Antiderivative of sqrt(1 + t^2).
double arc_primitive(double t) {
  return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t));
}

void check_domain(const Family& family, double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !family.in_mean_domain(a) ||
      !family.in_mean_domain(b)) {
    std::ostringstream os;
    os << "c_V endpoints (" << a << ", " << b << ") outside the "
       << family.name() << " mean domain [" << family.mean_lower() << ", "
       << family.mean_upper() << "]";
    throw DomainError(os.str());
  }
}

}  // namespace

namespace {

Family named(FamilyKind kind, Link link) {
  Family f;
  f.kind = kind;
  f.link = link;
  return f;
}

}  // namespace

Family Family::gaussian() { return named(FamilyKind::gaussian, Link::identity); }
Family Family::binomial() { return named(FamilyKind::binomial, Link::logit); }
Family Family::poisson() { return named(FamilyKind::poisson, Link::log); }

Family Family::quasi(Link link, std::function<double(double)> variance,
                     std::function<double(double)> variance_deriv, double lower,
                     double upper) {
  if (!variance) throw DomainError("quasi family requires a variance function");
  if (!(lower < upper)) throw DomainError("quasi family mean domain is empty");
  Family f;
  f.kind = FamilyKind::quasi;
  f.link = link;
  f.quasi_variance = std::move(variance);
  f.quasi_variance_deriv = std::move(variance_deriv);
  f.quasi_lower = lower;
  f.quasi_upper = upper;
  return f;
}

double Family::variance(double mu) const {
  switch (kind) {
    case FamilyKind::gaussian: return 1.0;
    case FamilyKind::binomial: return mu * (1.0 - mu);
    case FamilyKind::poisson: return mu;
    case FamilyKind::quasi: return quasi_variance(mu);
  }
  return 0.0;
}

double Family::variance_deriv(double mu) const {
  switch (kind) {
    case FamilyKind::gaussian: return 0.0;
    case FamilyKind::binomial: return 1.0 - 2.0 * mu;
    case FamilyKind::poisson: return 1.0;
    case FamilyKind::quasi: break;
  }
  if (quasi_variance_deriv) return quasi_variance_deriv(mu);
  // Central differences, falling back to second-order one-sided steps at domain edges.
  const double h = 1e-5 * std::max(1.0, std::abs(mu));
  const double lo = mu - h;
  const double hi = mu + h;
  const auto& v = quasi_variance;
  if (lo < quasi_lower) return (-3.0 * v(mu) + 4.0 * v(hi) - v(mu + 2.0 * h)) / (2.0 * h);
  if (hi > quasi_upper) return (3.0 * v(mu) - 4.0 * v(lo) + v(mu - 2.0 * h)) / (2.0 * h);
  return (v(hi) - v(lo)) / (2.0 * h);
}

double Family::mean_lower() const {
  switch (kind) {
    case FamilyKind::gaussian: return -std::numeric_limits<double>::infinity();
    case FamilyKind::binomial: return 0.0;
    case FamilyKind::poisson: return 0.0;
    case FamilyKind::quasi: return quasi_lower;
  }
  return 0.0;
}

double Family::mean_upper() const {
  switch (kind) {
    case FamilyKind::binomial: return 1.0;
    case FamilyKind::quasi: return quasi_upper;
    default: return std::numeric_limits<double>::infinity();
  }
}

bool Family::in_mean_domain(double mu) const {
  return mu >= mean_lower() && mu <= mean_upper();
}

std::string_view Family::name() const {
  switch (kind) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::binomial: return "binomial";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::quasi: return "quasi";
  }
  return "unknown";
}

Family family_from_name(std::string_view name) {
  if (name == "gaussian") return Family::gaussian();
  if (name == "binomial") return Family::binomial();
  if (name == "poisson") return Family::poisson();
  throw InputError("unknown family '" + std::string(name) +
                   "' (expected gaussian, binomial or poisson)");
}

std::string_view link_name(Link link) {
  switch (link) {
    case Link::identity: return "identity";
    case Link::logit: return "logit";
    case Link::log: return "log";
  }
  return "unknown";
}

double link_apply(const Family& family, double mu) {
  switch (family.link) {
    case Link::identity:
      return mu;
    case Link::logit:
      if (!(mu > 0.0 && mu < 1.0))
        throw DomainError("logit link requires a mean in (0, 1)");
      return std::log(mu) - std::log1p(-mu);
    case Link::log:
      if (!(mu > 0.0)) throw DomainError("log link requires a positive mean");
      return std::log(mu);
  }
  return mu;
}

double link_invert(const Family& family, double eta) {
  switch (family.link) {
    case Link::identity:
      return eta;
    case Link::logit:
      if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
      {
        const double e = std::exp(eta);
        return e / (1.0 + e);
      }
    case Link::log:
      return std::exp(eta);
  }
  return eta;
}

double link_mu_eta(const Family& family, double mu) {
  switch (family.link) {
    case Link::identity: return 1.0;
    case Link::logit: return mu * (1.0 - mu);
    case Link::log: return mu;
  }
  return 1.0;
}

CvResult c_v_quadrature(const Family& family, double a, double b, double abs_tol) {
  check_domain(family, a, b);
  if (a == b) return {0.0, 0.0, CvMethod::quadrature};
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const std::function<double(double)> integrand = [&family](double u) {
    const double d = family.variance_deriv(u);
    return std::sqrt(1.0 + d * d);
  };
  SimpsonState st{integrand};
  const double flo = integrand(lo);
  const double fhi = integrand(hi);
  const double fmid = integrand(0.5 * (lo + hi));
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  const double arc =
      simpson_step(st, lo, hi, flo, fmid, fhi, whole, abs_tol, kCvQuadratureMaxDepth);
  if (st.exhausted || !std::isfinite(arc)) {
    std::ostringstream os;
    os << "c_V quadrature on [" << lo << ", " << hi
       << "] did not reach tolerance " << abs_tol << " within depth "
       << kCvQuadratureMaxDepth << " (error estimate " << st.error_sum << ")";
    throw ConvergenceError(os.str());
  }
  const double bound = 2.0 * arc * st.error_sum + st.error_sum * st.error_sum;
  return {arc * arc, bound, CvMethod::quadrature};
}

double c_v_value(const Family& family, double a, double b) {
  switch (family.kind) {
    case FamilyKind::gaussian:
      return (b - a) * (b - a);
    case FamilyKind::poisson:
      return 2.0 * (b - a) * (b - a);
    case FamilyKind::binomial: {
      // u -> t = 1 - 2u maps the arc to (1/2) |F(t_a) - F(t_b)|.
      const double arc = 0.5 * std::abs(arc_primitive(1.0 - 2.0 * a) -
                                        arc_primitive(1.0 - 2.0 * b));
      return arc * arc;
    }
    case FamilyKind::quasi:
      break;
  }
  return c_v_quadrature(family, a, b).value;
}

CvResult c_v(const Family& family, double a, double b) {
  if (family.kind == FamilyKind::quasi) return c_v_quadrature(family, a, b);
  check_domain(family, a, b);
  if (a == b) return {0.0, 0.0, CvMethod::closed_form};
  return {c_v_value(family, a, b), 0.0, CvMethod::closed_form};
}

}  // namespace geor2
