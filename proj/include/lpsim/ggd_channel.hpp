#pragma once

#include <span>

#include "lpsim/rng.hpp"

namespace lpsim {

// Parameters of an additive white generalized Gaussian noise channel whose
// per-coordinate density is
//   f(z) = p / (2 alpha Gamma(1/p)) exp(-(|z|/alpha)^p),
// with the scale alpha derived from the target per-coordinate standard
// deviation sigma. n is the block length (number of noise coordinates).
// Normalization constants are precomputed so density evaluations are cheap
// and safe to call concurrently.
struct GgdParams {
  double p = 2.0;
  double sigma = 1.0;
  int n = 1;
  double alpha = 1.0;
  double log_coord_norm = 0.0;
  double log_radius_norm = 0.0;
};

GgdParams make_ggd_params(double p, double sigma, int n);

// An Eb/N0 operating point together with the noise level it induces for a
// rate-R code with unit-energy antipodal signaling.
struct SnrPoint {
  double eb_n0_db = 0.0;
  double rate = 0.5;
  double sigma = 1.0;
};

SnrPoint make_snr_point(double eb_n0_db, double rate);

// Scale parameter giving per-coordinate variance sigma^2:
// alpha = sigma sqrt(Gamma(1/p) / Gamma(3/p)).
double alpha_from_sigma(double p, double sigma);

// Noise standard deviation at a given Eb/N0 in dB for a rate-R code:
// sigma^2 = 1 / (2 R 10^(EbN0_dB/10)).
double sigma_from_snr(double eb_n0_db, double rate);

// One-coordinate noise density.
double ggd_pdf(const GgdParams& params, double z);

// Fills out with params.n independent noise coordinates. Each coordinate is
// drawn as a random sign times Gamma(1/p, alpha^p)^(1/p).
void ggd_sample(const GgdParams& params, Rng& rng, std::span<double> out);

// Density of the noise p-norm R = ||Z||_p at radius r, and its natural log.
// R^p is Gamma(n/p, alpha^p) distributed.
double radius_pdf(const GgdParams& params, double r);
double log_radius_pdf(const GgdParams& params, double r);

// P(R <= r) and P(R > r); the two are exact complements.
double radius_cdf(const GgdParams& params, double r);
double radius_tail(const GgdParams& params, double r);

// Radius r such that P(R > r) = tail_mass, for tail_mass in (0, 1).
double radius_quantile_upper(const GgdParams& params, double tail_mass);

}  // namespace lpsim
