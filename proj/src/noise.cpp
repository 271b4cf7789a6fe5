#include "phi4/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace phi4 {

Rng member_rng(std::uint64_t root_seed, std::uint64_t member) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(member), static_cast<std::uint32_t>(member >> 32)};
  return Rng(seq);
}

Field sample_noise_increment(const GridPtr& grid, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("noise increment needs dt > 0");
  std::normal_distribution<double> normal(0.0, std::sqrt(dt / grid->cell_volume()));
  Field out(grid);
  for (auto& x : out.values()) x = normal(rng);
  return out;
}

double ou_mode_variance(const TorusGrid& grid, double zeta_squared) {
  return 1.0 / (2.0 * (zeta_squared + 1.0) * grid.volume());
}

namespace {

// a_k <- decay_k a_k + gain_k g_k, g the spectrum of a unit-time increment (E|g_k|^2 = 2^{-d}).
Field ou_apply(const Field* x1, double dt, const Field* unit_noise, const GridPtr& grid) {
  auto z2 = grid->zeta_squared();
  Spectrum out(grid);
  if (x1) out = to_spectral(*x1);
  Spectrum g = unit_noise ? to_spectral(*unit_noise) : Spectrum(grid);
  for (std::size_t s = 0; s < out.size(); ++s) {
    const double lambda = z2[s] + 1.0;
    const double decay = std::isinf(dt) ? 0.0 : std::exp(-dt * lambda);
    const double gain = std::isinf(dt) ? std::sqrt(0.5 / lambda) : std::sqrt(-std::expm1(-2.0 * dt * lambda) / (2.0 * lambda));
    out[s] = decay * out[s] + (unit_noise ? gain * g[s] : Complex{});
  }
  return to_physical(out);
}

}  // namespace

Field ou_update(const Field& x1, double dt, const Field& unit_noise) {
  if (!(dt > 0.0)) throw std::invalid_argument("OU update needs dt > 0");
  require_same_grid(x1, unit_noise);
  return ou_apply(&x1, dt, &unit_noise, x1.grid());
}

Field ou_update(const Field& x1, double dt, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("OU update needs dt > 0");
  return ou_update(x1, dt, sample_noise_increment(x1.grid(), 1.0, rng));
}

Field ou_decay(const Field& x1, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("OU update needs dt > 0");
  return ou_apply(&x1, dt, nullptr, x1.grid());
}

Field ou_stationary_sample(const GridPtr& grid, Rng& rng) {
  const Field unit = sample_noise_increment(grid, 1.0, rng);
  return ou_apply(nullptr, std::numeric_limits<double>::infinity(), &unit, grid);
}

double wick_c1(const TorusGrid& grid) {
  auto z2 = grid.zeta_squared();
  auto mult = grid.multiplicity();
  double acc = 0.0;
  for (std::size_t s = 0; s < z2.size(); ++s) acc += mult[s] * ou_mode_variance(grid, z2[s]);
  return acc;
}

double wick_c1(int d, int n) {
  if (d < 1 || d > 3 || n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("wick_c1 needs d in {1,2,3} and n a power of two >= 8");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  // Per-axis lists of k^2 over {-n/2, ..., n/2 - 1}; the full lattice is a d-fold product.
  std::vector<double> k2;
  for (int k = -n / 2; k < n / 2; ++k) k2.push_back(static_cast<double>(k) * k);
  const double volume = std::pow(2.0, d);
  double acc = 0.0;
  auto term = [&](double q) { return 1.0 / (2.0 * (pi2 * q + 1.0) * volume); };
  if (d == 1) {
    for (double a : k2) acc += term(a);
  } else if (d == 2) {
    for (double a : k2)
      for (double b : k2) acc += term(a + b);
  } else {
    for (double a : k2)
      for (double b : k2)
        for (double c : k2) acc += term(a + b + c);
  }
  return acc;
}

}  // namespace phi4
