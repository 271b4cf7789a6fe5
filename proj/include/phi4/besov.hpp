#pragma once

#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "phi4/grid.hpp"

namespace phi4 {

/// Sentinel for p = infinity or q = infinity.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct BesovIndex {
  double alpha = 0.0;
  double p = kInfinity;
  double q = kInfinity;
};

/// Smooth radial cutoff: 1 on [0, 3/4], 0 on [4/3, inf), C-infinity ramp in between.
double smooth_cutoff(double r);

/// Littlewood-Paley multipliers on the frequency lattice of a grid.
///
/// Level -1 is chi~(|zeta|/s0); level k >= 0 is chi~(|zeta|/(2^{k+1} s0)) - chi~(|zeta|/(2^k s0)).
/// The top level k_max is the smallest one whose outer plateau 2^{k_max+1} * 3/4 * s0
/// reaches the largest represented |zeta|, so the multipliers telescope to 1 on the lattice.
class DyadicDecomposition {
 public:
  explicit DyadicDecomposition(GridPtr grid, double base_scale = std::numbers::pi);

  const GridPtr& grid() const { return grid_; }
  double base_scale() const { return base_scale_; }
  int k_max() const { return k_max_; }
  int level_count() const { return k_max_ + 2; }
  /// Multiplier of level k in [-1, k_max] on the half lattice.
  std::span<const double> multiplier(int k) const;

 private:
  GridPtr grid_;
  double base_scale_;
  int k_max_;
  std::vector<std::vector<double>> multipliers_;
};

/// All Littlewood-Paley blocks of one field, in physical space.
class Blocks {
 public:
  Blocks() = default;
  explicit Blocks(std::vector<Field> blocks) : blocks_(std::move(blocks)) {}

  int k_max() const { return static_cast<int>(blocks_.size()) - 2; }
  const Field& level(int k) const { return blocks_.at(static_cast<std::size_t>(k + 1)); }
  const GridPtr& grid() const { return blocks_.front().grid(); }
  /// Sum of all blocks, i.e. the field itself up to rounding.
  Field total() const;

 private:
  std::vector<Field> blocks_;
};

Blocks decompose(const Field& f, const DyadicDecomposition& dec);

/// delta_k f. Rejects k outside [-1, k_max].
Field lp_block(const Field& f, int k, const DyadicDecomposition& dec);

/// Finite-level Besov norm ||(2^{alpha k} ||delta_k f||_{L^p})_k||_{l^q}.
double besov_norm(const Field& f, const BesovIndex& idx, const DyadicDecomposition& dec);
double besov_norm(const Blocks& blocks, const BesovIndex& idx);

struct BonySplit {
  Field lt;   ///< f < g: low frequencies of f times high frequencies of g
  Field res;  ///< resonant part
  Field gt;   ///< f > g = g < f
};

BonySplit bony_split(const Field& f, const Field& g, const DyadicDecomposition& dec);
BonySplit bony_split(const Blocks& f, const Blocks& g);

Field para_lt(const Blocks& f, const Blocks& g);
Field resonant(const Blocks& f, const Blocks& g);
/// f < g + f > g, the non-resonant part of the product.
Field non_resonant(const Blocks& f, const Blocks& g);

Field para_lt(const Field& f, const Field& g, const DyadicDecomposition& dec);
Field resonant(const Field& f, const Field& g, const DyadicDecomposition& dec);

/// (f < g) o h - f (g o h).
Field commutator_lt_res(const Field& f, const Field& g, const Field& h, const DyadicDecomposition& dec);
Field commutator_lt_res(const Field& f, const Blocks& g, const Blocks& h, const DyadicDecomposition& dec);

/// e^{t Delta}(f < g) - f < (e^{t Delta} g). Rejects t < 0.
Field commutator_heat_lt(double t, const Field& f, const Field& g, const DyadicDecomposition& dec);

}  // namespace phi4
