#include "lpsim/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

namespace lpsim {

namespace {

constexpr double kWindowTailMass = 1e-12;

void check_channel(const LinearCode& code, const GgdParams& params) {
  if (code.n < 1 || params.n != code.n) {
    throw std::invalid_argument(
        "estimator: channel block length must equal the code length");
  }
}

void validate_config(const IsConfig& config) {
  if (config.m < 1) {
    throw std::invalid_argument("is_estimate: m must be >= 1");
  }
  if (config.n_min < 1 || config.n_step < 1) {
    throw std::invalid_argument(
        "is_estimate: n_min and n_step must be >= 1");
  }
  if (!(config.kappa_target > 0.0) || !std::isfinite(config.kappa_target)) {
    throw std::invalid_argument(
        "is_estimate: kappa_target must be positive and finite");
  }
  if (config.max_samples < 1) {
    throw std::invalid_argument("is_estimate: max_samples must be >= 1");
  }
  if (config.workers < 1) {
    throw std::invalid_argument("is_estimate: workers must be >= 1");
  }
}

double packing_radius(const LinearCode& code, double p) {
  if (code.d_min < 1) {
    throw std::invalid_argument(
        "estimator: the window rule needs the code's minimum distance");
  }
  return std::pow(static_cast<double>(code.d_min), 1.0 / p);
}

double shell_upper_edge(const ShellGrid& grid, int l) {
  return shell_lower(grid, l + 1);
}

void fill_radius_weights(ShellHistogram& hist, const GgdParams& params) {
  hist.radius_weight.resize(static_cast<std::size_t>(hist.grid.m));
  for (int l = 0; l < hist.grid.m; ++l) {
    hist.radius_weight[static_cast<std::size_t>(l)] =
        radius_pdf(params, shell_upper_edge(hist.grid, l));
  }
}

struct WorkerState {
  WorkerState(std::uint64_t seed, std::uint64_t stream, int n, int m)
      : rng(seed, stream),
        z(static_cast<std::size_t>(n)),
        y(static_cast<std::size_t>(n)),
        shell_samples(static_cast<std::size_t>(m), 0),
        shell_errors(static_cast<std::size_t>(m), 0) {}

  Rng rng;
  std::vector<double> z;
  std::vector<double> y;
  std::vector<std::int64_t> shell_samples;
  std::vector<std::int64_t> shell_errors;
  double sum_w = 0.0;
  double sum_w2 = 0.0;
};

void run_round(WorkerState& ws, std::int64_t quota, const ShellGrid& grid,
               const std::vector<double>& pmf, const GgdParams& params,
               const Decoder& decoder) {
  const std::size_t n = ws.z.size();
  for (std::int64_t i = 0; i < quota; ++i) {
    const ShellSample s =
        sample_noise_in_shell(grid, pmf, params.p, ws.rng, ws.z);
    const std::size_t l = static_cast<std::size_t>(s.shell);
    const double mass = pmf[l];
    const double weight = radius_pdf(params, s.radius) * grid.delta_r / mass;
    if (!(mass > 0.0) || !std::isfinite(weight)) {
      throw std::logic_error(
          "is_estimate: sample landed in a shell with no pmf mass");
    }
    for (std::size_t j = 0; j < n; ++j) ws.y[j] = ws.z[j] - 1.0;
    ++ws.shell_samples[l];
    if (decoder(ws.y, ws.rng)) {
      ++ws.shell_errors[l];
      ws.sum_w += weight;
      ws.sum_w2 += weight * weight;
    }
  }
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

Decoder make_mld_decoder(LinearCode code, double p) {
  if (code.k < 1 || code.k > 26) {
    throw std::invalid_argument(
        "make_mld_decoder: code dimension outside the enumeration budget");
  }
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw std::invalid_argument("make_mld_decoder: p must be positive");
  }
  return [code = std::move(code), p](std::span<const double> received,
                                     Rng& rng) {
    return mld_decode(received, code, p, rng).is_block_error;
  };
}

Decoder make_sum_product_decoder(LinearCode code, GgdParams params,
                                 int max_iter) {
  if (code.parity_check.empty()) {
    throw std::invalid_argument(
        "make_sum_product_decoder: code has no parity-check rows");
  }
  if (max_iter < 1) {
    throw std::invalid_argument(
        "make_sum_product_decoder: max_iter must be >= 1");
  }
  return [code = std::move(code), params,
          max_iter](std::span<const double> received, Rng&) {
    return sum_product_decode(received, code, params, max_iter)
        .is_block_error;
  };
}

ShellHistogram init_histogram(const IsConfig& config, const LinearCode& code,
                              const GgdParams& params) {
  validate_config(config);
  check_channel(code, params);
  double r_min = config.r_min_override;
  if (r_min < 0.0) {
    r_min = config.use_packing_r_min ? packing_radius(code, params.p) : 0.0;
  }
  double r_max = config.r_max_override;
  if (r_max < 0.0) {
    r_max = std::max(5.0 * packing_radius(code, params.p),
                     radius_quantile_upper(params, kWindowTailMass));
  }
  ShellHistogram hist;
  hist.grid = make_shell_grid(r_min, r_max, config.m);
  hist.p = params.p;
  hist.code_name = code.name;
  fill_radius_weights(hist, params);
  const std::size_t m = static_cast<std::size_t>(config.m);
  hist.theta_hat.assign(m, 1.0);
  hist.samples_seen.assign(m, 0);
  hist.errors_seen.assign(m, 0);
  update_pmf(hist);
  return hist;
}

void update_error_ratios(ShellHistogram& hist) {
  const std::size_t m = static_cast<std::size_t>(hist.grid.m);
  if (hist.theta_hat.size() != m || hist.samples_seen.size() != m ||
      hist.errors_seen.size() != m) {
    throw std::invalid_argument("update_error_ratios: inconsistent sizes");
  }
  for (std::size_t l = 0; l < m; ++l) {
    if (hist.samples_seen[l] > 0) {
      hist.theta_hat[l] = static_cast<double>(hist.errors_seen[l]) /
                          static_cast<double>(hist.samples_seen[l]);
    }
  }
}

void update_pmf(ShellHistogram& hist) {
  const std::size_t m = static_cast<std::size_t>(hist.grid.m);
  if (hist.theta_hat.size() != m || hist.radius_weight.size() != m) {
    throw std::invalid_argument("update_pmf: inconsistent sizes");
  }
  hist.pmf.resize(m);
  double carry = 1.0;
  for (std::size_t l = m; l-- > 0;) {
    if (hist.theta_hat[l] > 0.0) carry = hist.theta_hat[l];
    hist.pmf[l] = carry;
  }
  double total = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    hist.pmf[l] = std::sqrt(hist.pmf[l]) * hist.radius_weight[l];
    total += hist.pmf[l];
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw std::logic_error("update_pmf: the shell weights carry no mass");
  }
  for (std::size_t l = 0; l < m; ++l) hist.pmf[l] /= total;
}

Estimate mc_estimate(const LinearCode& code, const Decoder& decoder,
                     const GgdParams& params, double kappa_target,
                     std::int64_t max_samples, Rng& rng) {
  check_channel(code, params);
  if (!decoder) {
    throw std::invalid_argument("mc_estimate: decoder required");
  }
  if (!(kappa_target > 0.0) || !std::isfinite(kappa_target)) {
    throw std::invalid_argument(
        "mc_estimate: kappa_target must be positive and finite");
  }
  if (max_samples < 1) {
    throw std::invalid_argument("mc_estimate: max_samples must be >= 1");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = static_cast<std::size_t>(code.n);
  std::vector<double> z(n);
  std::vector<double> y(n);
  std::int64_t samples = 0;
  std::int64_t errors = 0;
  while (samples < max_samples) {
    ggd_sample(params, rng, z);
    for (std::size_t j = 0; j < n; ++j) y[j] = z[j] - 1.0;
    ++samples;
    if (decoder(y, rng)) ++errors;
    if (errors > 0) {
      const double wer =
          static_cast<double>(errors) / static_cast<double>(samples);
      const double kappa =
          std::sqrt((1.0 - wer) / (static_cast<double>(samples) * wer));
      if (kappa <= kappa_target) break;
    }
  }
  Estimate est;
  est.samples = samples;
  est.wer = static_cast<double>(errors) / static_cast<double>(samples);
  est.variance = est.wer * (1.0 - est.wer) / static_cast<double>(samples);
  est.relative_error = errors > 0
                           ? std::sqrt(est.variance) / est.wer
                           : std::numeric_limits<double>::infinity();
  est.truncation_tail = 0.0;
  est.wall_time_s = elapsed_seconds(t0);
  return est;
}

IsRun is_estimate(const LinearCode& code, const Decoder& decoder,
                  const GgdParams& params, const IsConfig& config,
                  const ShellHistogram* warm_start) {
  validate_config(config);
  check_channel(code, params);
  if (!decoder) {
    throw std::invalid_argument("is_estimate: decoder required");
  }

  ShellHistogram hist;
  if (warm_start != nullptr) {
    hist = *warm_start;
    if (hist.code_name != code.name || hist.p != params.p) {
      throw std::invalid_argument(
          "is_estimate: warm-start histogram belongs to a different "
          "(code, p) pair");
    }
    const std::size_t m = static_cast<std::size_t>(hist.grid.m);
    if (hist.theta_hat.size() != m || hist.samples_seen.size() != m ||
        hist.errors_seen.size() != m) {
      throw std::invalid_argument(
          "is_estimate: warm-start histogram has inconsistent sizes");
    }
    fill_radius_weights(hist, params);
    update_error_ratios(hist);
    update_pmf(hist);
  } else {
    hist = init_histogram(config, code, params);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int workers = config.workers;
  std::vector<WorkerState> states;
  states.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    states.emplace_back(config.seed, static_cast<std::uint64_t>(w), code.n,
                        hist.grid.m);
  }

  std::int64_t n_tot = 0;
  double sum_w = 0.0;
  double sum_w2 = 0.0;
  while (true) {
    const std::int64_t want = n_tot == 0 ? config.n_min : config.n_step;
    const std::int64_t round =
        std::min<std::int64_t>(want, config.max_samples - n_tot);
    for (auto& ws : states) {
      ws.sum_w = 0.0;
      ws.sum_w2 = 0.0;
      std::fill(ws.shell_samples.begin(), ws.shell_samples.end(), 0);
      std::fill(ws.shell_errors.begin(), ws.shell_errors.end(), 0);
    }
    if (workers == 1) {
      run_round(states[0], round, hist.grid, hist.pmf, params, decoder);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> failures(
          static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        const std::int64_t quota =
            round / workers + (w < round % workers ? 1 : 0);
        if (quota == 0) continue;
        pool.emplace_back([&, w, quota]() {
          try {
            run_round(states[static_cast<std::size_t>(w)], quota, hist.grid,
                      hist.pmf, params, decoder);
          } catch (...) {
            failures[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
      }
    }
    for (int w = 0; w < workers; ++w) {
      const WorkerState& ws = states[static_cast<std::size_t>(w)];
      sum_w += ws.sum_w;
      sum_w2 += ws.sum_w2;
      for (int l = 0; l < hist.grid.m; ++l) {
        hist.samples_seen[static_cast<std::size_t>(l)] +=
            ws.shell_samples[static_cast<std::size_t>(l)];
        hist.errors_seen[static_cast<std::size_t>(l)] +=
            ws.shell_errors[static_cast<std::size_t>(l)];
      }
    }
    n_tot += round;
    if (config.adapt_pmf) {
      update_error_ratios(hist);
      update_pmf(hist);
    }
    if (n_tot >= config.n_min) {
      const double wer = sum_w / static_cast<double>(n_tot);
      if (wer > 0.0) {
        const double second = sum_w2 / static_cast<double>(n_tot);
        const double var =
            std::max(0.0, second - wer * wer) / static_cast<double>(n_tot);
        if (std::sqrt(var) / wer <= config.kappa_target) break;
      }
    }
    if (n_tot >= config.max_samples) break;
  }

  IsRun run;
  run.estimate.samples = n_tot;
  run.estimate.wer = sum_w / static_cast<double>(n_tot);
  const double second = sum_w2 / static_cast<double>(n_tot);
  run.estimate.variance =
      std::max(0.0, second - run.estimate.wer * run.estimate.wer) /
      static_cast<double>(n_tot);
  run.estimate.relative_error =
      run.estimate.wer > 0.0
          ? std::sqrt(run.estimate.variance) / run.estimate.wer
          : std::numeric_limits<double>::infinity();
  run.estimate.truncation_tail = radius_tail(params, hist.grid.r_max);
  run.estimate.wall_time_s = elapsed_seconds(t0);
  run.histogram = std::move(hist);
  return run;
}

double simulated_is_gain(const Estimate& is_est, const Estimate& mc_ref) {
  if (is_est.samples < 1 || mc_ref.samples < 1) {
    throw std::invalid_argument(
        "simulated_is_gain: both estimates must carry sample counts");
  }
  const double a = is_est.relative_error;
  const double b = mc_ref.relative_error;
  if (!(a == 0.0 && b == 0.0)) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a > 0.0) || !(b > 0.0) ||
        std::max(a, b) > 1.5 * std::min(a, b)) {
      throw std::invalid_argument(
          "simulated_is_gain: estimates are at different accuracies");
    }
  }
  return static_cast<double>(mc_ref.samples) /
         static_cast<double>(is_est.samples);
}

double simulated_is_gain(const Estimate& is_est) {
  if (is_est.samples < 1 || !(is_est.wer > 0.0) ||
      !std::isfinite(is_est.relative_error) ||
      !(is_est.relative_error > 0.0)) {
    throw std::invalid_argument(
        "simulated_is_gain: estimate carries no finite accuracy");
  }
  const double n_mc = 1.0 / (is_est.relative_error * is_est.relative_error *
                             is_est.wer);
  return n_mc / static_cast<double>(is_est.samples);
}

void save_histogram(const ShellHistogram& hist, const std::string& path) {
  const std::size_t m = static_cast<std::size_t>(hist.grid.m);
  if (hist.samples_seen.size() != m || hist.errors_seen.size() != m) {
    throw std::invalid_argument("save_histogram: inconsistent sizes");
  }
  nlohmann::json doc;
  doc["code_name"] = hist.code_name;
  doc["p"] = hist.p;
  doc["grid"] = {{"r_min", hist.grid.r_min},
                 {"r_max", hist.grid.r_max},
                 {"m", hist.grid.m}};
  nlohmann::json tallies = nlohmann::json::array();
  for (std::size_t l = 0; l < m; ++l) {
    tallies.push_back({hist.samples_seen[l], hist.errors_seen[l]});
  }
  doc["tallies"] = std::move(tallies);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_histogram: cannot open " + path);
  }
  out << doc.dump(1) << "\n";
  out.flush();
  if (!out.good()) {
    throw std::runtime_error("save_histogram: write failed for " + path);
  }
}

ShellHistogram load_histogram(const std::string& path, const LinearCode& code,
                              const GgdParams& params) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_histogram: cannot open " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_histogram: parse failure: ") +
                             e.what());
  }
  ShellHistogram hist;
  try {
    hist.code_name = doc.at("code_name").get<std::string>();
    hist.p = doc.at("p").get<double>();
    const auto& grid = doc.at("grid");
    const double r_min = grid.at("r_min").get<double>();
    const double r_max = grid.at("r_max").get<double>();
    const int m = grid.at("m").get<int>();
    if (!(r_min >= 0.0) || !(r_max > r_min) || m < 1) {
      throw std::runtime_error("load_histogram: degenerate grid");
    }
    hist.grid = make_shell_grid(r_min, r_max, m);
    const auto& tallies = doc.at("tallies");
    if (!tallies.is_array() ||
        tallies.size() != static_cast<std::size_t>(m)) {
      throw std::runtime_error(
          "load_histogram: tallies must list one entry per shell");
    }
    hist.samples_seen.reserve(static_cast<std::size_t>(m));
    hist.errors_seen.reserve(static_cast<std::size_t>(m));
    for (const auto& entry : tallies) {
      if (!entry.is_array() || entry.size() != 2) {
        throw std::runtime_error(
            "load_histogram: each tally must be [samples, errors]");
      }
      const std::int64_t samples = entry.at(0).get<std::int64_t>();
      const std::int64_t errors = entry.at(1).get<std::int64_t>();
      if (samples < 0 || errors < 0 || errors > samples) {
        throw std::runtime_error("load_histogram: inconsistent tallies");
      }
      hist.samples_seen.push_back(samples);
      hist.errors_seen.push_back(errors);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_histogram: bad document: ") +
                             e.what());
  }
  if (hist.code_name != code.name) {
    throw std::runtime_error("load_histogram: histogram belongs to code '" +
                             hist.code_name + "', expected '" + code.name +
                             "'");
  }
  if (hist.p != params.p) {
    throw std::runtime_error(
        "load_histogram: histogram was built for a different shape p");
  }
  fill_radius_weights(hist, params);
  hist.theta_hat.assign(static_cast<std::size_t>(hist.grid.m), 1.0);
  update_error_ratios(hist);
  update_pmf(hist);
  return hist;
}

}  // namespace lpsim
