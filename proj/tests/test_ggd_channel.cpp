#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "lpsim/ggd_channel.hpp"
#include "lpsim/numerics.hpp"
#include "lpsim/rng.hpp"
#include "test_util.hpp"

using namespace lpsim;
using lpsim_test::rel_err;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

double lp_radius(std::span<const double> z, double p) {
  double s = 0.0;
  for (double zi : z) s += std::pow(std::fabs(zi), p);
  return std::pow(s, 1.0 / p);
}
}  // namespace

TEST_CASE("alpha_from_sigma matches closed forms and scales linearly") {
  CHECK(rel_err(alpha_from_sigma(2.0, 1.0), std::sqrt(2.0)) < 1e-12);
  CHECK(rel_err(alpha_from_sigma(1.0, 1.0),
                0.7071067811865475244008443621048490392848) < 1e-13);
  CHECK(rel_err(alpha_from_sigma(1.6, 0.8),
                0.9812848830913612005785294820233697632653) < 1e-13);
  CHECK(rel_err(alpha_from_sigma(1.6, 1.6), 2.0 * alpha_from_sigma(1.6, 0.8)) <
        1e-13);
  CHECK_THROWS_AS(alpha_from_sigma(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(alpha_from_sigma(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("ggd_pdf is a normalized density with variance sigma^2") {
  for (double p : {0.5, 1.0, 1.6, 2.0, 2.8}) {
    for (double sigma : {0.3, 1.0, 3.0}) {
      const GgdParams params = make_ggd_params(p, sigma, 1);
      const auto mass = adaptive_quadrature(
          [&params](double z) { return ggd_pdf(params, z); }, 0.0, kInf, 1e-10);
      CHECK(mass.converged);
      CHECK(rel_err(2.0 * mass.value, 1.0) < 1e-8);
      const auto second = adaptive_quadrature(
          [&params](double z) { return z * z * ggd_pdf(params, z); }, 0.0,
          kInf, 1e-10);
      CHECK(second.converged);
      CHECK(rel_err(2.0 * second.value, sigma * sigma) < 1e-8);
    }
  }
}

TEST_CASE("ggd_pdf matches reference value and symmetry") {
  const GgdParams params = make_ggd_params(1.6, 0.8, 1);
  CHECK(rel_err(ggd_pdf(params, 0.9),
                0.2379070054418679664194460195863821114847) < 1e-13);
  CHECK(ggd_pdf(params, -0.9) == ggd_pdf(params, 0.9));
}

TEST_CASE("radius_pdf matches reference values") {
  const GgdParams a = make_ggd_params(1.0, 0.7, 15);
  CHECK(rel_err(radius_pdf(a, 5.0),
                0.1094937465046676160028358945919817346331) < 1e-12);
  const GgdParams b = make_ggd_params(1.6, 0.9, 8);
  CHECK(rel_err(radius_pdf(b, 2.0),
                0.2908490307337246920695768043563948073223) < 1e-12);
  CHECK(radius_pdf(a, -1.0) == 0.0);
  CHECK(radius_pdf(a, 0.0) == 0.0);
}

TEST_CASE("radius_cdf matches references and integrates radius_pdf") {
  const GgdParams a = make_ggd_params(1.0, 0.7, 15);
  CHECK(rel_err(radius_cdf(a, 5.0),
                0.08885314431627133031376502147612359332637) < 1e-12);
  const GgdParams b = make_ggd_params(1.6, 0.9, 8);
  CHECK(rel_err(radius_cdf(b, 2.0),
                0.1208577445249650765746986888925048788117) < 1e-12);
  CHECK(radius_cdf(a, 0.0) == 0.0);
  CHECK(radius_cdf(a, kInf) == 1.0);
  for (double r : {1.5, 4.0, 9.0}) {
    const auto integral = adaptive_quadrature(
        [&a](double t) { return radius_pdf(a, t); }, 0.0, r, 1e-10);
    CHECK(integral.converged);
    CHECK(rel_err(integral.value, radius_cdf(a, r)) < 1e-8);
  }
  for (double r : {0.5, 3.0, 11.0, 25.0}) {
    CHECK(radius_cdf(a, r) + radius_tail(a, r) == 1.0);
  }
}

TEST_CASE("radius_pdf for a single coordinate is the folded noise density") {
  const GgdParams params = make_ggd_params(1.0, 1.0, 1);
  for (double r : {0.1, 0.7, 2.0, 5.0}) {
    CHECK(rel_err(radius_pdf(params, r), 2.0 * ggd_pdf(params, r)) < 1e-13);
    // For p = 1 and unit variance the radius law is Exp(sqrt(2)).
    const double expect = std::sqrt(2.0) * std::exp(-std::sqrt(2.0) * r);
    CHECK(rel_err(radius_pdf(params, r), expect) < 1e-12);
  }
}

TEST_CASE("sigma_from_snr matches closed forms") {
  CHECK(rel_err(sigma_from_snr(0.0, 0.5), 1.0) < 1e-14);
  CHECK(rel_err(sigma_from_snr(10.0, 1.0), std::sqrt(0.05)) < 1e-14);
  CHECK(rel_err(sigma_from_snr(3.0, 7.0 / 15.0),
                0.7327935055276527351085794177607023443923) < 1e-13);
  CHECK(sigma_from_snr(6.0, 0.5) < sigma_from_snr(3.0, 0.5));
  CHECK_THROWS_AS(sigma_from_snr(3.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sigma_from_snr(3.0, 1.5), std::invalid_argument);
  const SnrPoint pt = make_snr_point(3.0, 7.0 / 15.0);
  CHECK(pt.eb_n0_db == 3.0);
  CHECK(pt.sigma == sigma_from_snr(3.0, 7.0 / 15.0));
}

TEST_CASE("ggd_sample has the right first moments") {
  const GgdParams params = make_ggd_params(1.6, 0.8, 4);
  Rng rng(31337, 0);
  std::vector<double> z(4);
  const int n_vec = 250000;
  double sum = 0.0, sum2 = 0.0, sum_pow = 0.0;
  for (int i = 0; i < n_vec; ++i) {
    ggd_sample(params, rng, z);
    for (double zi : z) {
      sum += zi;
      sum2 += zi * zi;
      sum_pow += std::pow(std::fabs(zi), params.p);
    }
  }
  const double n_coord = 4.0 * n_vec;
  CHECK(std::fabs(sum / n_coord) < 0.005);
  CHECK(rel_err(sum2 / n_coord, 0.64) < 0.01);
  // E|Z|^p = alpha^p / p for the generalized Gaussian law.
  const double expect_pow = std::pow(params.alpha, params.p) / params.p;
  CHECK(rel_err(sum_pow / n_coord, expect_pow) < 0.01);
}

TEST_CASE("sampled noise p-norm follows the gamma radius law") {
  // Kolmogorov-Smirnov at the 0.1 percent level across the parameter grid.
  std::uint64_t stream = 0;
  for (double p : {0.5, 1.0, 1.6, 2.0, 2.8}) {
    for (double sigma : {0.3, 1.0, 3.0}) {
      const int n = 6;
      const GgdParams params = make_ggd_params(p, sigma, n);
      Rng rng(777, stream++);
      const int draws = 200000;
      std::vector<double> radii(draws);
      std::vector<double> z(n);
      for (int i = 0; i < draws; ++i) {
        ggd_sample(params, rng, z);
        radii[i] = lp_radius(z, p);
      }
      const double d = lpsim_test::ks_statistic(
          radii, [&params](double r) { return radius_cdf(params, r); });
      CHECK(d < lpsim_test::ks_critical(0.001, draws));
    }
  }
}

TEST_CASE("radius_quantile_upper inverts radius_tail") {
  const GgdParams params = make_ggd_params(1.0, 0.5, 15);
  CHECK(rel_err(radius_quantile_upper(params, 1e-12),
                21.22240196232474968816969619860362408083) < 1e-9);
  for (double q : {1e-3, 1e-8, 1e-12, 1e-14}) {
    const double r = radius_quantile_upper(params, q);
    CHECK(rel_err(radius_tail(params, r), q) < 1e-6);
  }
  CHECK_THROWS_AS(radius_quantile_upper(params, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(radius_quantile_upper(params, 1.0), std::invalid_argument);
}

TEST_CASE("parameter validation rejects bad inputs") {
  CHECK_THROWS_AS(make_ggd_params(-1.0, 1.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_ggd_params(1.0, 0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_ggd_params(1.0, 1.0, 0), std::invalid_argument);
  const GgdParams params = make_ggd_params(1.0, 1.0, 4);
  Rng rng(1, 0);
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(ggd_sample(params, rng, wrong), std::invalid_argument);
}
