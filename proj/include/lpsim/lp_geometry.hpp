#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lpsim/ggd_channel.hpp"
#include "lpsim/rng.hpp"

namespace lpsim {

// Uniform partition of [r_min, r_max] into m shells of width delta_r.
struct ShellGrid {
  double r_min = 0.0;
  double r_max = 1.0;
  int m = 1;
  double delta_r = 1.0;
};

ShellGrid make_shell_grid(double r_min, double r_max, int m);
double shell_lower(const ShellGrid& grid, int l);
double shell_mid(const ShellGrid& grid, int l);
// Index of the shell containing radius r, clamped to [0, m-1].
int shell_index(const ShellGrid& grid, double r);

// A direction on the unit p-norm sphere expressed through the simplex
// variables u_i = |z_i|^p / ||z||_p^p, which satisfy u_i >= 0, sum u_i = 1.
struct SimplexPoint {
  std::vector<double> u;
};

double lp_norm(std::span<const double> z, double p);

// Draws u from the direction law of white generalized Gaussian noise on the
// p-norm sphere: u_i = G_i / sum_j G_j with G_j iid Gamma(1/p, 1).
void sample_lp_direction(int n, double p, Rng& rng, std::span<double> u_out);

// Maps simplex coordinates, signs and a radius to the noise point
// z_i = signs_i * r * u_i^(1/p). signs entries must be +1 or -1.
void point_on_sphere(std::span<const double> u, std::span<const double> signs,
                     double p, double r, std::span<double> z_out);

// Draws one noise vector from the shell-importance law: a shell l with
// probability pmf[l], a radius uniform within that shell, and an independent
// uniform direction on the p-norm sphere with random signs. Throws
// std::invalid_argument if the pmf is degenerate (no positive finite mass).
struct ShellSample {
  int shell = 0;
  double radius = 0.0;
};

ShellSample sample_noise_in_shell(const ShellGrid& grid,
                                  std::span<const double> pmf, double p,
                                  Rng& rng, std::span<double> z_out);

// Radius and direction for a given shell index (used by samplers that have
// already chosen the shell).
double sample_radius_in_shell(const ShellGrid& grid, int l, Rng& rng);

// Density of the first n-1 simplex coordinates of the direction law:
//   Gamma(n/p) / (2^n Gamma(1/p)^n) * prod_i u_i^(1/p - 1),
// evaluated at a full simplex point u (all n coordinates, summing to one).
// At a boundary point (some u_i == 0) the density is +infinity for p > 1 and
// 0 for p < 1.
double simplex_conditional_density(std::span<const double> u, double p);

// Conditional density of simplex coordinates u for a general separable
// level-set statistic nu(y) = sum_i nu(y_i) at level r, on one monotone
// branch y = rho(t) of the per-coordinate inverse:
//   r^(n-1) / g_r * prod_i |rho'(r u_i)| f(rho(r u_i)),
// where f is the base per-coordinate density and g_r the caller-supplied
// density of the level statistic at r. Jacobian factors enter by magnitude.
// Throws std::domain_error when rho, rho' or f is non-finite at any needed
// point (the point leaves the branch domain).
double general_levelset_density(std::span<const double> u, double r,
                                const std::function<double(double)>& rho,
                                const std::function<double(double)>& rho_prime,
                                const std::function<double(double)>& base_pdf,
                                double g_r);

}  // namespace lpsim
