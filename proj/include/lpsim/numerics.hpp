#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpsim {

// ---------------------------------------------------------------------------
// Signed log-space values
// ---------------------------------------------------------------------------

// A real number stored as sign and natural log of magnitude.
// sign == 0 means exact zero; log_magnitude is then -inf by convention.
struct SignedLogValue {
  double log_magnitude = -std::numeric_limits<double>::infinity();
  int sign = 0;

  static SignedLogValue from_value(double v);
  static SignedLogValue from_log(double log_mag, int sign_in) {
    return SignedLogValue{log_mag, sign_in};
  }
  double value() const;

  SignedLogValue operator*(const SignedLogValue& o) const {
    if (sign == 0 || o.sign == 0) return SignedLogValue{};
    return SignedLogValue{log_magnitude + o.log_magnitude, sign * o.sign};
  }
};

// Sum of signed log-space terms, returned in signed log space.
// Accumulation runs in shifted linear space with compensated summation and
// escalates to extended precision when cancellation between positive and
// negative parts exceeds an internal threshold. A result whose magnitude is
// indistinguishable from accumulated rounding noise is returned as sign 0.
SignedLogValue signed_logspace_sum(std::span<const SignedLogValue> terms);

// Thrown when a computation cannot certify the requested accuracy.
// magnitude_bound is a certified upper bound on the magnitude of the true
// result, which callers may use to prove a contribution negligible.
class PrecisionError : public std::runtime_error {
 public:
  PrecisionError(const std::string& what, double bound)
      : std::runtime_error(what), magnitude_bound(bound) {}
  double magnitude_bound;
};

// ---------------------------------------------------------------------------
// Double-double arithmetic (roughly 32 significant digits)
// ---------------------------------------------------------------------------

struct Dd {
  double hi = 0.0;
  double lo = 0.0;
};

Dd dd_from(double x);
Dd dd_add(Dd a, Dd b);
Dd dd_sub(Dd a, Dd b);
Dd dd_mul(Dd a, Dd b);
Dd dd_div(Dd a, Dd b);
Dd dd_neg(Dd a);
Dd dd_abs(Dd a);
Dd dd_exp(Dd a);
Dd dd_log(Dd a);
Dd dd_pow_int(Dd a, int n);
int dd_cmp(Dd a, Dd b);
inline double dd_to_double(Dd a) { return a.hi + a.lo; }

// ln(k!) in double-double precision, for 0 <= k <= 256.
Dd dd_ln_factorial(int k);

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

// Natural log of the gamma function for x > 0.
double log_gamma(double x);

// Regularized lower incomplete gamma P(s, x) evaluated at point x, shape s.
// Requires x >= 0 and s > 0.
double reg_inc_gamma_lower(double x, double s);

// Regularized upper incomplete gamma Q(s, x) at point x, shape s.
// Returns 1 for x <= 0; requires s > 0.
double reg_inc_gamma_upper(double x, double s);

// Regularized incomplete beta I_x(a, b) for x in [0, 1], a > 0, b > 0.
double reg_inc_beta(double x, double a, double b);

// Gaussian tail probability Q(x) = P(N(0,1) > x).
double q_function(double x);

// ---------------------------------------------------------------------------
// Root finding
// ---------------------------------------------------------------------------

// Bisection on [lo, hi]; requires a sign change. Returns the midpoint of the
// final bracket once its width is at most tol.
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double tol);

// ---------------------------------------------------------------------------
// Adaptive quadrature (Gauss-Kronrod 7-15 with interval subdivision)
// ---------------------------------------------------------------------------

struct QuadResult {
  double value = 0.0;
  double error_bound = 0.0;
  bool converged = false;
};

struct ComplexQuadResult {
  std::complex<double> value{0.0, 0.0};
  double error_bound = 0.0;
  bool converged = false;
};

// Integrates f over [lo, hi]; either endpoint may be infinite. Infinite
// ranges are mapped to finite ones with a rational substitution. Kinks and
// saturation points are handled by recursive subdivision, which concentrates
// intervals around any crossing the error estimator detects. When the
// subdivision budget is exhausted the best estimate is returned with
// converged == false and an honest error bound.
QuadResult adaptive_quadrature(const std::function<double(double)>& f,
                               double lo, double hi, double rel_tol);

ComplexQuadResult adaptive_quadrature_complex(
    const std::function<std::complex<double>(double)>& f, double lo, double hi,
    double rel_tol);

// Piecewise integration with known interior breakpoints (for integrands with
// kinks at known abscissas). Breakpoints outside (lo, hi) are ignored.
QuadResult adaptive_quadrature_split(const std::function<double(double)>& f,
                                     double lo, double hi,
                                     std::span<const double> breakpoints,
                                     double rel_tol);

}  // namespace lpsim
