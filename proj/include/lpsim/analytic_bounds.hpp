#pragma once

#include <span>
#include <vector>

#include "lpsim/codes.hpp"
#include "lpsim/ggd_channel.hpp"

namespace lpsim {

// Query for a pairwise error probability conditioned on a noise shell of
// radius r in L_p-norm units.
struct PepQuery {
  int n = 1;
  int d = 1;
  double r = 1.0;
  double p = 2.0;
};

// Pairwise error probability between antipodal modulated words at Hamming
// distance q.d, conditioned on the noise lying on the L1 sphere of radius
// q.r. Exact finite signed sum evaluated with a two-level precision ladder
// (double first, double-double on escalation). The result is clamped to
// [0, 1] only after the cancellation certificate passes. Throws
// PrecisionError when even the extended route cannot certify the leading
// digits; the exception carries an upper bound on the magnitude of the
// true value. Requires 1 <= q.d <= q.n <= 200 and q.p == 1.
//
// The sum admits an equivalent display whose outer index also covers the
// group with zero in-range coordinates; that group's reciprocal-gamma
// prefactor vanishes identically, so both indexings agree. Setting
// include_empty_in_range_group runs the alternative indexing; the default
// starts the outer sum at one and carries the all-out-of-range mass in the
// final step-function term.
double conditional_pep_l1(const PepQuery& q,
                          bool include_empty_in_range_group = false);

// Closed-form sub-density of the summed in-range coordinate contribution
// that appears inside the L1 conditional PEP, joint with the event that a
// fixed set of d0 error coordinates is in range and d2 of the remaining
// error coordinates sit past the far threshold, conditioned on radius r.
// Out-of-support x (x < 0 or x > r - 2 d2) gives 0. Evaluated entirely in
// double-double precision; tiny negative rounding residue is clamped to 0.
double x_d0_pdf(double x, int n, int d, int d0, int d2, double r);

// Pairwise error probability conditioned on the L2 sphere:
// 0 for r <= sqrt(d), else (1/2) I_{1 - d/r^2}((n-1)/2, 1/2).
// Requires 1 <= q.d <= q.n and q.p == 2.
double conditional_pep_l2(const PepQuery& q);

// Unconditional pairwise error probability over the additive white
// Laplacian noise channel (p = 1) at noise level sigma, via the closed-form
// triple sum with regularized upper incomplete gamma terms.
double pairwise_pep_laplace(int d, double sigma);

// Unconditional pairwise error probability for shape p via transform
// inversion on the contour Re s = c: Pr(Delta_d < 0) with half weight on
// Delta_d = 0. Pass c = 0 to select the abscissa automatically. m_nodes is
// the starting (even) node count of the tangent rule; it is doubled until
// the estimate stabilizes. p = 1 and p = 2 use exact per-coordinate
// transforms (p = 1 additionally peels the atom lattice, whose transform
// does not decay along the contour) unless force_numeric_inner is set,
// which routes every shape through the generic adaptive-quadrature inner
// integral. Throws std::domain_error when the inner transform integral
// cannot be evaluated at the requested abscissa.
double pep_quadrature(int d, double p, double sigma, double c = 0.0,
                      int m_nodes = 64, bool force_numeric_inner = false);

// Sum of A_d times the L1-conditional PEP over the code's weight
// distribution. The result is certified to 1e-9 relative accuracy or to a
// 1e-15 absolute floor, whichever admits more; just above a weight's onset
// radius the term loses all relative digits but stays many orders below
// the floor, so the sum remains certified there. Throws PrecisionError
// when neither criterion can be met.
double union_conditional_sum_l1(const LinearCode& code, double r);

// Union bound on maximum-likelihood word error rate over the additive
// white Laplacian noise channel: sum of A_d * pairwise_pep_laplace.
// May exceed 1; returned raw.
double union_bound_awln(const LinearCode& code, double sigma);

// Radius at which the conditional union sum crosses 1. Independent of the
// noise level. Returns +infinity when the sum never reaches 1.
double optimal_gallager_radius(const LinearCode& code);

// Sphere upper bound on maximum-likelihood word error rate over the
// additive white Laplacian noise channel: the noise-radius expectation of
// min(1, conditional union sum), computed as an integral up to the
// crossover radius plus the exact radius tail mass. Always within [0, 1].
double sphere_bound_awln(const LinearCode& code, double sigma);

enum class BoundKind { sphere_awln, union_awln, union_general };

// A bound evaluated across a sweep of operating points.
struct BoundCurve {
  std::vector<SnrPoint> snr_points;
  std::vector<double> values;
  BoundKind kind = BoundKind::sphere_awln;
};

// Evaluates the requested bound at every operating point. p names the
// channel shape and is only consulted for union_general; the sphere and
// Laplacian union bounds are defined for p = 1.
BoundCurve make_bound_curve(const LinearCode& code,
                            std::span<const SnrPoint> points, BoundKind kind,
                            double p = 1.0);

}  // namespace lpsim
