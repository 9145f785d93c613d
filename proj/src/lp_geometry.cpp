#include "lpsim/lp_geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lpsim/numerics.hpp"

namespace lpsim {

ShellGrid make_shell_grid(double r_min, double r_max, int m) {
  if (!(r_min >= 0.0) || !(r_max > r_min)) {
    throw std::invalid_argument("make_shell_grid: requires 0 <= r_min < r_max");
  }
  if (m < 1) throw std::invalid_argument("make_shell_grid: m must be >= 1");
  ShellGrid grid;
  grid.r_min = r_min;
  grid.r_max = r_max;
  grid.m = m;
  grid.delta_r = (r_max - r_min) / m;
  return grid;
}

double shell_lower(const ShellGrid& grid, int l) {
  return grid.r_min + l * grid.delta_r;
}

double shell_mid(const ShellGrid& grid, int l) {
  return grid.r_min + (l + 0.5) * grid.delta_r;
}

int shell_index(const ShellGrid& grid, double r) {
  const int l = static_cast<int>((r - grid.r_min) / grid.delta_r);
  return std::max(0, std::min(grid.m - 1, l));
}

double lp_norm(std::span<const double> z, double p) {
  double s = 0.0;
  for (double zi : z) s += std::pow(std::fabs(zi), p);
  return std::pow(s, 1.0 / p);
}

void sample_lp_direction(int n, double p, Rng& rng, std::span<double> u_out) {
  if (u_out.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("sample_lp_direction: wrong output length");
  }
  if (!(p > 0.0)) {
    throw std::invalid_argument("sample_lp_direction: p must be > 0");
  }
  const double shape = 1.0 / p;
  for (int attempt = 0; attempt < 100; ++attempt) {
    double total = 0.0;
    for (auto& u : u_out) {
      u = rng.gamma(shape);
      total += u;
    }
    if (total > 0.0 && std::isfinite(total)) {
      for (auto& u : u_out) u /= total;
      return;
    }
  }
  throw std::runtime_error("sample_lp_direction: degenerate gamma draws");
}

void point_on_sphere(std::span<const double> u, std::span<const double> signs,
                     double p, double r, std::span<double> z_out) {
  const std::size_t n = u.size();
  if (signs.size() != n || z_out.size() != n) {
    throw std::invalid_argument("point_on_sphere: length mismatch");
  }
  const double inv_p = 1.0 / p;
  for (std::size_t i = 0; i < n; ++i) {
    z_out[i] = signs[i] * r * std::pow(u[i], inv_p);
  }
}

double sample_radius_in_shell(const ShellGrid& grid, int l, Rng& rng) {
  if (l < 0 || l >= grid.m) {
    throw std::invalid_argument("sample_radius_in_shell: shell out of range");
  }
  return shell_lower(grid, l) + rng.uniform() * grid.delta_r;
}

ShellSample sample_noise_in_shell(const ShellGrid& grid,
                                  std::span<const double> pmf, double p,
                                  Rng& rng, std::span<double> z_out) {
  if (pmf.size() != static_cast<std::size_t>(grid.m)) {
    throw std::invalid_argument("sample_noise_in_shell: pmf length mismatch");
  }
  double total = 0.0;
  for (double q : pmf) {
    if (!(q >= 0.0) || !std::isfinite(q)) {
      throw std::invalid_argument(
          "sample_noise_in_shell: pmf entries must be finite and nonnegative");
    }
    total += q;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("sample_noise_in_shell: pmf has no mass");
  }
  const double target = rng.uniform() * total;
  double acc = 0.0;
  int l = grid.m - 1;
  for (int i = 0; i < grid.m; ++i) {
    acc += pmf[i];
    if (target < acc) {
      l = i;
      break;
    }
  }
  ShellSample sample;
  sample.shell = l;
  sample.radius = sample_radius_in_shell(grid, l, rng);

  const std::size_t n = z_out.size();
  std::vector<double> u(n);
  std::vector<double> signs(n);
  sample_lp_direction(static_cast<int>(n), p, rng, u);
  for (auto& s : signs) s = static_cast<double>(rng.sign());
  point_on_sphere(u, signs, p, sample.radius, z_out);
  return sample;
}

double simplex_conditional_density(std::span<const double> u, double p) {
  const int n = static_cast<int>(u.size());
  if (n < 1) throw std::invalid_argument("simplex_conditional_density: empty");
  if (!(p > 0.0)) {
    throw std::invalid_argument("simplex_conditional_density: p must be > 0");
  }
  double total = 0.0;
  for (double ui : u) {
    if (!(ui >= 0.0)) {
      throw std::invalid_argument(
          "simplex_conditional_density: coordinates must be nonnegative");
    }
    total += ui;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "simplex_conditional_density: coordinates must sum to one");
  }
  const double expo = 1.0 / p - 1.0;
  bool boundary = false;
  double log_prod = 0.0;
  for (double ui : u) {
    if (ui == 0.0) {
      boundary = true;
    } else {
      log_prod += expo * std::log(ui);
    }
  }
  if (boundary) {
    if (p > 1.0) return std::numeric_limits<double>::infinity();
    if (p < 1.0) return 0.0;
    // p == 1: the exponent vanishes and the density is constant.
  }
  const double log_norm = log_gamma(n / p) - n * std::log(2.0) -
                          n * log_gamma(1.0 / p);
  return std::exp(log_norm + log_prod);
}

double general_levelset_density(std::span<const double> u, double r,
                                const std::function<double(double)>& rho,
                                const std::function<double(double)>& rho_prime,
                                const std::function<double(double)>& base_pdf,
                                double g_r) {
  const int n = static_cast<int>(u.size());
  if (n < 1) throw std::invalid_argument("general_levelset_density: empty");
  if (!(g_r > 0.0) || !std::isfinite(g_r)) {
    throw std::invalid_argument(
        "general_levelset_density: g_r must be positive and finite");
  }
  double log_val = (n - 1) * std::log(r) - std::log(g_r);
  for (double ui : u) {
    const double t = r * ui;
    const double y = rho(t);
    const double dy = rho_prime(t);
    if (!std::isfinite(y) || !std::isfinite(dy)) {
      throw std::domain_error(
          "general_levelset_density: point leaves the branch domain");
    }
    const double f = base_pdf(y);
    if (!std::isfinite(f) || f < 0.0) {
      throw std::domain_error(
          "general_levelset_density: base density invalid on branch");
    }
    if (f == 0.0 || dy == 0.0) return 0.0;
    log_val += std::log(std::fabs(dy)) + std::log(f);
  }
  return std::exp(log_val);
}

}  // namespace lpsim
