#pragma once

#include "lpsim/codes.hpp"
#include "lpsim/rng.hpp"

namespace lpsim {

// Operating point for an importance-sampling gain prediction. The code must
// carry its minimum distance and a positive multiplicity at that distance in
// the weight table; all predictions here keep only that leading term.
struct GainQuery {
  LinearCode code;
  double p = 2.0;
  double sigma = 1.0;
};

// Leading-term error ratio for the Laplacian channel: the minimum-distance
// multiplicity times the pairwise error probability conditioned on the L1
// sphere of radius r, evaluated through the indexing whose outer sum starts
// at the empty in-range group. Returns 0 for r at or below d_min (no errors
// inside the packing sphere). Requires q.p == 1, finite r >= 0. Throws
// PrecisionError, with the magnitude bound scaled by the multiplicity, when
// the conditional probability cannot be certified at radius r.
double asym_error_ratio_l1(double r, const GainQuery& q);

// Predicted variance-reduction factor of the shell-optimal importance
// sampler over plain Monte Carlo for the Laplacian channel (q.p == 1), in
// the high-SNR leading-term approximation: the ratio of the leading-term
// word error rate to the squared integral of min(sqrt(theta), 1) against
// the noise-radius density, taken from the packing radius outward with the
// exact radius tail beyond the point where theta crosses 1.
double asym_is_gain_l1(const GainQuery& q);

// Same prediction for the Gaussian channel (q.p == 2), with the q-function
// word error rate in the numerator and the regularized-incomplete-beta
// conditional error probability inside the integral.
double asym_is_gain_l2(const GainQuery& q);

// Monte Carlo gain prediction with a propagated uncertainty.
struct GainEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

// Predicted variance-reduction factor for any shape q.p >= 1. The
// conditional error probability on each radius shell is estimated by
// importance-weighted Monte Carlo against the exact conditional law of the
// d_min error coordinates given the noise radius: their absolute p-th
// powers scaled by r^p follow a Dirichlet law with d_min concentrations
// 1/p and remainder (n - d_min)/p, with independent fair signs. Draws come
// from a defensive mixture that keeps that law as the leading component
// and adds concentration-boosted, sign-tilted components so error events
// stay common on every shell; each draw carries its exact bounded density
// ratio. One set of mc_budget draws is shared across every radius node
// (the law's shape does not depend on r), the radius integral uses a fixed
// Simpson grid up to the 1e-14 upper radius quantile, and the numerator is
// the transform-inversion pairwise error probability. The standard error
// comes from a delete-one-block jackknife over 25 sample blocks and
// honestly widens when mc_budget is small. Requires mc_budget >= 50. The
// caller picks the rng stream.
GainEstimate asym_is_gain_general(const GainQuery& q, long long mc_budget,
                                  Rng& rng);

}  // namespace lpsim
