#include "lpsim/ggd_channel.hpp"

#include <cmath>
#include <stdexcept>

#include "lpsim/numerics.hpp"

namespace lpsim {

double alpha_from_sigma(double p, double sigma) {
  if (!(p > 0.0)) throw std::invalid_argument("alpha_from_sigma: p must be > 0");
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("alpha_from_sigma: sigma must be > 0");
  }
  return sigma * std::exp(0.5 * (log_gamma(1.0 / p) - log_gamma(3.0 / p)));
}

GgdParams make_ggd_params(double p, double sigma, int n) {
  if (!(p > 0.0)) throw std::invalid_argument("make_ggd_params: p must be > 0");
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("make_ggd_params: sigma must be > 0");
  }
  if (n < 1) throw std::invalid_argument("make_ggd_params: n must be >= 1");
  GgdParams params;
  params.p = p;
  params.sigma = sigma;
  params.n = n;
  params.alpha = alpha_from_sigma(p, sigma);
  const double log_alpha = std::log(params.alpha);
  params.log_coord_norm =
      std::log(p / 2.0) - log_alpha - log_gamma(1.0 / p);
  params.log_radius_norm =
      std::log(p) - log_gamma(static_cast<double>(n) / p) - n * log_alpha;
  return params;
}

double sigma_from_snr(double eb_n0_db, double rate) {
  if (!(rate > 0.0) || !(rate <= 1.0)) {
    throw std::invalid_argument("sigma_from_snr: rate must be in (0, 1]");
  }
  if (!std::isfinite(eb_n0_db)) {
    throw std::invalid_argument("sigma_from_snr: Eb/N0 must be finite");
  }
  return std::sqrt(1.0 / (2.0 * rate * std::pow(10.0, eb_n0_db / 10.0)));
}

SnrPoint make_snr_point(double eb_n0_db, double rate) {
  return SnrPoint{eb_n0_db, rate, sigma_from_snr(eb_n0_db, rate)};
}

double ggd_pdf(const GgdParams& params, double z) {
  return std::exp(params.log_coord_norm -
                  std::pow(std::fabs(z) / params.alpha, params.p));
}

void ggd_sample(const GgdParams& params, Rng& rng, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(params.n)) {
    throw std::invalid_argument("ggd_sample: output span has wrong length");
  }
  const double inv_p = 1.0 / params.p;
  for (auto& z : out) {
    const double x = rng.gamma(inv_p);
    z = static_cast<double>(rng.sign()) * params.alpha * std::pow(x, inv_p);
  }
}

double log_radius_pdf(const GgdParams& params, double r) {
  if (!(r > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return params.log_radius_norm + (params.n - 1) * std::log(r) -
         std::pow(r / params.alpha, params.p);
}

double radius_pdf(const GgdParams& params, double r) {
  if (r < 0.0) return 0.0;
  if (r == 0.0) {
    return params.n == 1 ? std::exp(params.log_radius_norm) : 0.0;
  }
  return std::exp(log_radius_pdf(params, r));
}

double radius_cdf(const GgdParams& params, double r) {
  if (r <= 0.0) return 0.0;
  return reg_inc_gamma_lower(std::pow(r / params.alpha, params.p),
                             static_cast<double>(params.n) / params.p);
}

double radius_tail(const GgdParams& params, double r) {
  if (r <= 0.0) return 1.0;
  return reg_inc_gamma_upper(std::pow(r / params.alpha, params.p),
                             static_cast<double>(params.n) / params.p);
}

double radius_quantile_upper(const GgdParams& params, double tail_mass) {
  if (!(tail_mass > 0.0) || !(tail_mass < 1.0)) {
    throw std::invalid_argument(
        "radius_quantile_upper: tail mass must be in (0, 1)");
  }
  // Start from a radius near the bulk of the distribution and double until
  // the tail is below target, then bisect.
  const double shape = static_cast<double>(params.n) / params.p;
  double hi = params.alpha * std::pow(shape + 1.0, 1.0 / params.p);
  double lo = 0.0;
  int guard = 0;
  while (radius_tail(params, hi) > tail_mass) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 600) {
      throw std::runtime_error("radius_quantile_upper: bracket search failed");
    }
  }
  return bisect_root(
      [&params, tail_mass](double r) {
        return radius_tail(params, r) - tail_mass;
      },
      lo, hi, 1e-12 * hi);
}

}  // namespace lpsim
