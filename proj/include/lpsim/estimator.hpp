#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lpsim/codes.hpp"
#include "lpsim/ggd_channel.hpp"
#include "lpsim/lp_geometry.hpp"
#include "lpsim/rng.hpp"

namespace lpsim {

// A decoder is invoked once per simulated frame with the received vector
// y = x0 + z (x0 the modulated all-zero codeword) and the random stream that
// owns the frame; it returns true when the frame is a block error. Decoders
// must be safe to invoke concurrently from several threads, each with its
// own stream.
using Decoder = std::function<bool(std::span<const double>, Rng&)>;

// Full-codebook minimum-distance decoding under the p-th-power metric.
// Throws std::invalid_argument when the code is too large to enumerate.
Decoder make_mld_decoder(LinearCode code, double p);

// Flooding sum-product decoding on the stored parity-check rows. Frames
// that never satisfy the checks within max_iter count as errors. Throws
// std::invalid_argument when the code has no parity_check rows.
Decoder make_sum_product_decoder(LinearCode code, GgdParams params,
                                 int max_iter = 50);

// Adaptive shell-importance state: the grid, the per-shell error-ratio
// estimates theta_hat, the sampling pmf, and cumulative tallies. The
// tallies depend only on (code, p, grid), not on sigma, so they remain
// valid across noise levels; radius_weight caches the radius density at
// each shell's upper edge under the parameters currently in force and is
// what update_pmf combines with theta_hat.
struct ShellHistogram {
  ShellGrid grid;
  double p = 2.0;
  std::string code_name;
  std::vector<double> radius_weight;
  std::vector<double> theta_hat;
  std::vector<double> pmf;
  std::vector<std::int64_t> samples_seen;
  std::vector<std::int64_t> errors_seen;
};

// One estimation result. relative_error is sqrt(variance)/wer when wer > 0
// and +infinity when no error was observed; truncation_tail is the analytic
// probability that the noise norm exceeds the sampling window (always 0 for
// plain Monte Carlo, which draws from the full space).
struct Estimate {
  double wer = 0.0;
  double variance = 0.0;
  double relative_error = 0.0;
  std::int64_t samples = 0;
  double wall_time_s = 0.0;
  double truncation_tail = 0.0;
};

// Configuration of the adaptive shell-importance estimator. Negative window
// overrides select the default rules: r_min is the packing radius
// d_min^(1/p) when use_packing_r_min is set (appropriate for maximum-
// likelihood decoding, which never errs strictly inside the packing sphere)
// and 0 otherwise; r_max is max(5 d_min^(1/p), upper radius quantile at
// tail mass 1e-12), so truncation stays negligible even at low SNR where
// the fixed multiple would not cover the radius distribution. adapt_pmf
// false freezes theta_hat and the pmf at their entry state, which reduces
// the estimator to stratified sampling of the window; tallies still
// accumulate either way.
struct IsConfig {
  int m = 500;
  double r_min_override = -1.0;
  double r_max_override = -1.0;
  bool use_packing_r_min = true;
  std::int64_t n_min = 500;
  std::int64_t n_step = 100;
  double kappa_target = 0.1;
  std::int64_t max_samples = 10000000;
  std::uint64_t seed = 1;
  int workers = 1;
  bool adapt_pmf = true;
};

// Plain Monte Carlo word-error-rate estimation. Draws frames until the
// plug-in relative error sqrt((1 - wer) / (samples * wer)) reaches
// kappa_target or max_samples frames have been decoded; with no errors
// observed the estimate is 0 with relative_error +infinity.
Estimate mc_estimate(const LinearCode& code, const Decoder& decoder,
                     const GgdParams& params, double kappa_target,
                     std::int64_t max_samples, Rng& rng);

// Fresh histogram for the configured window: theta_hat is 1 everywhere, so
// the initial pmf is proportional to the radius density at the shell upper
// edges. Throws std::invalid_argument when a window rule needs d_min and
// the code does not carry one, or when the resolved window is degenerate.
ShellHistogram init_histogram(const IsConfig& config, const LinearCode& code,
                              const GgdParams& params);

// Recomputes theta_hat from the cumulative tallies. Shells that have never
// been sampled keep the initial value 1.
void update_error_ratios(ShellHistogram& hist);

// Recomputes the pmf as sqrt(theta) * radius_weight, normalized. Shells
// whose theta_hat is exactly 0 borrow, for the pmf only, the nearest
// positive theta_hat at a larger index (falling back to 1 past the last
// positive entry), so no shell with possible errors is starved; theta_hat
// itself is not modified.
void update_pmf(ShellHistogram& hist);

struct IsRun {
  Estimate estimate;
  ShellHistogram histogram;
};

// Adaptive shell-importance estimation of the word error rate. Each sample
// draws a shell from the current pmf, a radius uniform within the shell and
// a uniform direction on the p-norm sphere, decodes y = x0 + z, and
// accumulates the weighted error indicator g(r) * delta_r / pmf[shell];
// samples keep the weight of the pmf in force when they were drawn. After a
// warmup of n_min samples the error ratios and the pmf are refreshed and
// the relative error is tested every n_step samples, stopping at
// kappa_target or max_samples. Worker w consumes the dedicated stream
// (seed, w); each round's quota is split round-robin and results merge in
// worker order, so a (seed, workers, config) triple gives a bit-identical
// Estimate apart from wall_time_s. A warm start adopts the given
// histogram's grid and tallies after checking that it belongs to the same
// (code name, p) pair; its pmf is rebuilt for the current sigma. Throws
// std::invalid_argument on invalid configuration or a mismatched warm
// start, and std::logic_error if a sample ever lands in a shell with zero
// pmf mass (an internal contract violation).
IsRun is_estimate(const LinearCode& code, const Decoder& decoder,
                  const GgdParams& params, const IsConfig& config,
                  const ShellHistogram* warm_start = nullptr);

// Measured speedup: ratio of Monte Carlo to importance-sampling sample
// counts at matching accuracy. The two-estimate form requires comparable
// achieved relative errors (within a factor 1.5, or both zero) and throws
// std::invalid_argument otherwise; the one-estimate form substitutes the
// analytic Monte Carlo requirement 1 / (relative_error^2 * wer) for the
// reference, which needs a positive wer and a finite positive
// relative_error.
double simulated_is_gain(const Estimate& is_est, const Estimate& mc_ref);
double simulated_is_gain(const Estimate& is_est);

// Histogram persistence: a JSON document {code_name, p, grid{r_min, r_max,
// m}, tallies: [[samples, errors], ...]}. The loader rebuilds theta_hat and
// the pmf for the given parameters and rejects files whose code name or
// shape p do not match, whose grid is degenerate, or whose tallies are
// inconsistent, with std::runtime_error.
void save_histogram(const ShellHistogram& hist, const std::string& path);
ShellHistogram load_histogram(const std::string& path, const LinearCode& code,
                              const GgdParams& params);

}  // namespace lpsim
