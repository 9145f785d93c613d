#include "lpsim/analytic_gains.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lpsim/analytic_bounds.hpp"
#include "lpsim/ggd_channel.hpp"
#include "lpsim/numerics.hpp"

namespace lpsim {

namespace {

constexpr double kOuterTailMass = 1e-14;
constexpr double kQuadRelTol = 1e-9;
constexpr double kCapBisectTol = 1e-9;
// Simpson node count for the Monte Carlo outer integral; must be odd.
constexpr int kOuterNodes = 257;
constexpr int kJackknifeBlocks = 25;
// Ties in the decoding metric carry probability mass only for shapes with
// an atom lattice (p = 1); the window also absorbs rounding in the exact
// cancellations that produce those ties.
constexpr double kTieRelTol = 1e-12;

struct GainTerm {
  int n = 0;
  int d = 0;
  std::int64_t count = 0;
};

GainTerm checked_leading_term(const GainQuery& q) {
  const LinearCode& code = q.code;
  if (code.n < 1)
    throw std::invalid_argument("gain query needs a positive block length");
  if (code.d_min < 1 || code.d_min > code.n)
    throw std::invalid_argument("gain query needs 1 <= d_min <= n");
  const auto it = code.weight_distribution.find(code.d_min);
  if (it == code.weight_distribution.end() || it->second < 1)
    throw std::invalid_argument(
        "weight table must carry a positive count at d_min");
  if (!(q.sigma > 0.0) || !std::isfinite(q.sigma))
    throw std::invalid_argument("sigma must be positive and finite");
  return {code.n, code.d_min, it->second};
}

void require_shape(const GainQuery& q, double want) {
  if (q.p != want)
    throw std::invalid_argument(
        "query shape does not match this closed-form specialization");
}

// Integral of min(sqrt(theta), 1) times the radius density over
// [r_lo, infinity) for a nondecreasing theta with theta(r_lo) = 0. When
// theta crosses 1 the range beyond the crossing contributes the exact
// radius tail mass; otherwise the integral is truncated at the 1e-14 upper
// radius quantile.
double capped_sqrt_theta_integral(const GgdParams& params, double r_lo,
                                  const std::function<double(double)>& theta,
                                  const std::vector<double>& kinks) {
  const double quantile = radius_quantile_upper(params, kOuterTailMass);
  const double r_top = std::max(quantile, r_lo + std::max(1.0, r_lo));
  double cap = std::numeric_limits<double>::infinity();
  if (theta(r_top) > 1.0) {
    cap = bisect_root([&theta](double r) { return theta(r) - 1.0; }, r_lo,
                      r_top, kCapBisectTol);
  }
  if (std::isfinite(cap)) {
    const auto f = [&](double r) {
      return std::sqrt(std::min(theta(r), 1.0)) * radius_pdf(params, r);
    };
    const QuadResult head =
        adaptive_quadrature_split(f, r_lo, cap, kinks, kQuadRelTol);
    return head.value + radius_tail(params, cap);
  }
  const auto f = [&](double r) {
    return std::min(std::sqrt(theta(r)), 1.0) * radius_pdf(params, r);
  };
  return adaptive_quadrature_split(f, r_lo, r_top, kinks, kQuadRelTol).value;
}

}  // namespace

double asym_error_ratio_l1(double r, const GainQuery& q) {
  require_shape(q, 1.0);
  const GainTerm t = checked_leading_term(q);
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::invalid_argument("radius must be finite and nonnegative");
  if (r <= static_cast<double>(t.d)) return 0.0;
  const PepQuery pq{t.n, t.d, r, 1.0};
  try {
    return static_cast<double>(t.count) * conditional_pep_l1(pq, true);
  } catch (const PrecisionError& e) {
    throw PrecisionError(e.what(),
                         static_cast<double>(t.count) * e.magnitude_bound);
  }
}

double asym_is_gain_l1(const GainQuery& q) {
  require_shape(q, 1.0);
  const GainTerm t = checked_leading_term(q);
  const GgdParams params = make_ggd_params(1.0, q.sigma, t.n);
  const double pe =
      static_cast<double>(t.count) * pairwise_pep_laplace(t.d, q.sigma);

  LinearCode row;
  row.n = t.n;
  row.d_min = t.d;
  row.weight_distribution[t.d] = t.count;
  const auto theta = [&row](double r) {
    return union_conditional_sum_l1(row, r);
  };

  // The conditional probability is piecewise analytic between even integer
  // radii up to twice the distance, with soft joins at the seams.
  std::vector<double> kinks;
  for (int v = t.d + 1; v <= 2 * t.d; ++v)
    if (v % 2 == 0) kinks.push_back(static_cast<double>(v));

  const double den = capped_sqrt_theta_integral(
      params, static_cast<double>(t.d), theta, kinks);
  return pe / (den * den);
}

double asym_is_gain_l2(const GainQuery& q) {
  require_shape(q, 2.0);
  const GainTerm t = checked_leading_term(q);
  const GgdParams params = make_ggd_params(2.0, q.sigma, t.n);
  const double r_lo = std::sqrt(static_cast<double>(t.d));
  const double pe = static_cast<double>(t.count) * q_function(r_lo / q.sigma);
  const auto theta = [&t](double r) {
    const PepQuery pq{t.n, t.d, r, 2.0};
    return static_cast<double>(t.count) * conditional_pep_l2(pq);
  };
  const double den = capped_sqrt_theta_integral(params, r_lo, theta, {});
  return pe / (den * den);
}

GainEstimate asym_is_gain_general(const GainQuery& q, long long mc_budget,
                                  Rng& rng) {
  const GainTerm t = checked_leading_term(q);
  if (!(q.p >= 1.0) || !std::isfinite(q.p))
    throw std::invalid_argument("shape must be finite and at least 1");
  if (mc_budget < 2 * kJackknifeBlocks)
    throw std::invalid_argument(
        "mc budget must cover the jackknife blocks with at least two "
        "samples each");

  const int n = t.n;
  const int d = t.d;
  const double p = q.p;
  const double count = static_cast<double>(t.count);
  const GgdParams params = make_ggd_params(p, q.sigma, n);
  const double pe = count * pep_quadrature(d, p, q.sigma);

  // One conditional-law draw holds the share of the radius p-th power on
  // each error coordinate plus a sign. Under the target law the shares
  // follow a Dirichlet with d concentrations 1/p and remainder (n - d)/p
  // and the signs are fair, so the same draws serve every radius node.
  // Sampling that law directly starves the radii just outside the packing
  // sphere, where errors need nearly the whole radius budget on the error
  // coordinates; the plug-in square root of a near-zero count is then
  // biased low. The draws therefore come from a defensive mixture whose
  // boosted components concentrate the shares and turn the signs positive,
  // and each sample carries its exact density ratio, which the leading
  // mixture weight bounds above.
  struct Component {
    double boost;
    double pos_prob;
    double mix;
  };
  constexpr Component kProposal[] = {{1.0, 0.5, 0.55},
                                     {4.0, 0.8, 0.15},
                                     {12.0, 0.95, 0.15},
                                     {40.0, 0.995, 0.15}};
  constexpr int kComponents = 4;
  double norm_const[kComponents];
  for (int c = 0; c < kComponents; ++c)
    norm_const[c] = std::lgamma((d * kProposal[c].boost + (n - d)) / p) -
                    d * std::lgamma(kProposal[c].boost / p);

  const long long samples = mc_budget;
  std::vector<double> mag(static_cast<std::size_t>(samples) * d);
  std::vector<unsigned char> negative(mag.size());
  std::vector<double> frac_sum(static_cast<std::size_t>(samples));
  std::vector<double> is_weight(static_cast<std::size_t>(samples));
  {
    std::vector<double> gam(d);
    for (long long j = 0; j < samples; ++j) {
      const double pick = rng.uniform();
      int comp = 0;
      double cum = 0.0;
      for (int c = 0; c < kComponents; ++c) {
        cum += kProposal[c].mix;
        if (pick < cum || c + 1 == kComponents) {
          comp = c;
          break;
        }
      }
      const double shape = kProposal[comp].boost / p;
      double total = (n == d) ? 0.0 : rng.gamma((n - d) / p);
      for (int i = 0; i < d; ++i) {
        gam[i] = std::max(rng.gamma(shape), 1e-290);
        total += gam[i];
      }
      double share = 0.0;
      double sum_log_frac = 0.0;
      int neg_count = 0;
      for (int i = 0; i < d; ++i) {
        const double frac = gam[i] / total;
        share += frac;
        sum_log_frac += std::log(frac);
        const bool neg = rng.uniform() < 1.0 - kProposal[comp].pos_prob;
        neg_count += neg ? 1 : 0;
        mag[static_cast<std::size_t>(j) * d + i] = std::pow(frac, 1.0 / p);
        negative[static_cast<std::size_t>(j) * d + i] = neg;
      }
      frac_sum[static_cast<std::size_t>(j)] = share;

      // Log density of this draw under each component, up to terms shared
      // by all components, then the target-to-mixture ratio.
      double part[kComponents];
      double top = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < kComponents; ++c) {
        part[c] = std::log(kProposal[c].mix) + norm_const[c] +
                  (kProposal[c].boost / p) * sum_log_frac +
                  neg_count * std::log(1.0 - kProposal[c].pos_prob) +
                  (d - neg_count) * std::log(kProposal[c].pos_prob);
        top = std::max(top, part[c]);
      }
      double mix_density = 0.0;
      for (int c = 0; c < kComponents; ++c)
        mix_density += std::exp(part[c] - top);
      const double log_target = norm_const[0] + (1.0 / p) * sum_log_frac +
                                d * std::log(0.5);
      is_weight[static_cast<std::size_t>(j)] =
          std::exp(log_target - top - std::log(mix_density));
    }
  }

  const double r_lo = std::pow(static_cast<double>(d), 1.0 / p);
  double r_hi = radius_quantile_upper(params, kOuterTailMass);
  if (!(r_hi > r_lo)) r_hi = r_lo + std::max(1.0, r_lo);
  const int nodes = kOuterNodes;
  const double h = (r_hi - r_lo) / (nodes - 1);

  // Shell error counts per radius node and jackknife block; metric ties
  // count half.
  std::vector<double> block_count(
      static_cast<std::size_t>(nodes) * kJackknifeBlocks, 0.0);
  std::vector<double> block_size(kJackknifeBlocks, 0.0);
  for (long long j = 0; j < samples; ++j)
    block_size[static_cast<std::size_t>(j * kJackknifeBlocks / samples)] +=
        1.0;

  const bool p_is_one = (p == 1.0);
  const bool p_is_two = (p == 2.0);
  for (int k = 0; k < nodes; ++k) {
    const double r = r_lo + h * k;
    const double rp = std::pow(r, p);
    double* counts = &block_count[static_cast<std::size_t>(k) *
                                  kJackknifeBlocks];
    const double* m = mag.data();
    const unsigned char* neg = negative.data();
    for (long long j = 0; j < samples; ++j, m += d, neg += d) {
      const double base = rp * frac_sum[static_cast<std::size_t>(j)];
      double shifted = 0.0;
      for (int i = 0; i < d; ++i) {
        const double z = r * m[i];
        const double off = neg[i] ? z + 2.0 : std::fabs(z - 2.0);
        shifted +=
            p_is_one ? off : (p_is_two ? off * off : std::pow(off, p));
      }
      const double delta = shifted - base;
      const double tol = kTieRelTol * (shifted + base);
      if (delta < -tol) {
        counts[j * kJackknifeBlocks / samples] +=
            is_weight[static_cast<std::size_t>(j)];
      } else if (delta <= tol) {
        counts[j * kJackknifeBlocks / samples] +=
            0.5 * is_weight[static_cast<std::size_t>(j)];
      }
    }
  }

  std::vector<double> node_total(nodes, 0.0);
  for (int k = 0; k < nodes; ++k)
    for (int b = 0; b < kJackknifeBlocks; ++b)
      node_total[k] +=
          block_count[static_cast<std::size_t>(k) * kJackknifeBlocks + b];

  std::vector<double> weight(nodes);
  weight[0] = weight[nodes - 1] = h / 3.0;
  for (int k = 1; k + 1 < nodes; ++k)
    weight[k] = (k % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
  std::vector<double> gpdf(nodes);
  for (int k = 0; k < nodes; ++k) gpdf[k] = radius_pdf(params, r_lo + h * k);
  const double tail_mass = radius_tail(params, r_hi);

  // skip < 0 uses every sample; otherwise block `skip` is left out.
  const auto denominator = [&](int skip) {
    const double total_samples =
        static_cast<double>(samples) - (skip < 0 ? 0.0 : block_size[skip]);
    double acc = 0.0;
    double top_value = 0.0;
    for (int k = 0; k < nodes; ++k) {
      double c = node_total[k];
      if (skip >= 0)
        c -= block_count[static_cast<std::size_t>(k) * kJackknifeBlocks +
                         skip];
      const double theta = count * (c / total_samples);
      const double value = std::min(std::sqrt(theta), 1.0);
      acc += weight[k] * value * gpdf[k];
      top_value = value;
    }
    return acc + tail_mass * top_value;
  };

  const double den = denominator(-1);
  if (!(den > 0.0)) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf};
  }
  const double estimate = pe / (den * den);

  std::vector<double> loo(kJackknifeBlocks);
  double loo_mean = 0.0;
  for (int b = 0; b < kJackknifeBlocks; ++b) {
    const double den_b = denominator(b);
    loo[b] = pe / (den_b * den_b);
    loo_mean += loo[b];
  }
  loo_mean /= kJackknifeBlocks;
  double ss = 0.0;
  for (int b = 0; b < kJackknifeBlocks; ++b) {
    const double dev = loo[b] - loo_mean;
    ss += dev * dev;
  }
  double se =
      std::sqrt((kJackknifeBlocks - 1.0) / kJackknifeBlocks * ss);
  if (!std::isfinite(se)) se = std::numeric_limits<double>::infinity();
  return {estimate, se};
}

}  // namespace lpsim
