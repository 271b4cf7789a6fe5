#pragma once

#include <cstdint>
#include <random>

#include "phi4/grid.hpp"

namespace phi4 {

using Rng = std::mt19937_64;

/// Independent stream for ensemble member `member` under `root_seed`:
/// the engine is seeded from seed_seq{lo(root), hi(root), lo(member), hi(member)}.
Rng member_rng(std::uint64_t root_seed, std::uint64_t member);

/// Space-time white-noise increment over a time step dt: iid N(0, dt / cell_volume)
/// grid values, so that Var <increment, phi> = dt ||phi||^2_{L^2}. Rejects dt <= 0.
Field sample_noise_increment(const GridPtr& grid, double dt, Rng& rng);

/// Exact transition of (d/dt - Delta + 1) X = xi over dt, per Fourier mode with
/// lambda = |zeta|^2 + 1. `unit_noise` is an increment drawn with dt = 1.
Field ou_update(const Field& x1, double dt, const Field& unit_noise);
Field ou_update(const Field& x1, double dt, Rng& rng);
/// The same transition with the noise switched off: pure decay by exp(-dt lambda).
Field ou_decay(const Field& x1, double dt);
/// Draw from the stationary law (the dt -> infinity limit of ou_update).
Field ou_stationary_sample(const GridPtr& grid, Rng& rng);

/// Stationary per-mode variance E|a_k|^2 = 1 / (2 lambda_k 2^d) of the OU field.
double ou_mode_variance(const TorusGrid& grid, double zeta_squared);

/// C1 = E[X(x)^2] for the stationary OU field on the lattice, as an exact mode sum.
double wick_c1(const TorusGrid& grid);
/// Same sum without allocating a grid; usable for large n.
double wick_c1(int d, int n);

}  // namespace phi4
