#include "phi4/besov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace phi4 {

namespace {

constexpr double kInner = 3.0 / 4.0;
constexpr double kOuter = 4.0 / 3.0;

double ramp(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double a = std::exp(-1.0 / s);
  double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

double lq_combine(std::span<const double> terms, double q) {
  if (std::isinf(q)) {
    double m = 0.0;
    for (double t : terms) m = std::max(m, t);
    return m;
  }
  double scale = 0.0;
  for (double t : terms) scale = std::max(scale, t);
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double t : terms) acc += std::pow(t / scale, q);
  return scale * std::pow(acc, 1.0 / q);
}

void check_grids(const Blocks& f, const Blocks& g) {
  require_same_grid(f.level(-1), g.level(-1));
  if (f.k_max() != g.k_max()) throw std::invalid_argument("block decompositions have different depth");
}

}  // namespace

double smooth_cutoff(double r) { return 1.0 - ramp((r - kInner) / (kOuter - kInner)); }

DyadicDecomposition::DyadicDecomposition(GridPtr grid, double base_scale)
    : grid_(std::move(grid)), base_scale_(base_scale) {
  if (base_scale_ <= 0.0) throw std::invalid_argument("dyadic base scale must be positive");
  const double top = grid_->max_frequency();
  k_max_ = 0;
  while (std::ldexp(kInner * base_scale_, k_max_ + 1) < top) ++k_max_;

  auto z2 = grid_->zeta_squared();
  multipliers_.assign(static_cast<std::size_t>(level_count()), std::vector<double>(z2.size(), 0.0));
  for (std::size_t i = 0; i < z2.size(); ++i) {
    const double r = std::sqrt(z2[i]) / base_scale_;
    double previous = smooth_cutoff(r);
    multipliers_[0][i] = previous;
    for (int k = 0; k <= k_max_; ++k) {
      double next = smooth_cutoff(std::ldexp(r, -(k + 1)));
      multipliers_[static_cast<std::size_t>(k + 1)][i] = next - previous;
      previous = next;
    }
  }
}

std::span<const double> DyadicDecomposition::multiplier(int k) const {
  if (k < -1 || k > k_max_)
    throw std::out_of_range("dyadic level " + std::to_string(k) + " outside [-1, " + std::to_string(k_max_) + "]");
  return multipliers_[static_cast<std::size_t>(k + 1)];
}

Field Blocks::total() const {
  Field out = blocks_.front();
  for (std::size_t i = 1; i < blocks_.size(); ++i) out += blocks_[i];
  return out;
}

Blocks decompose(const Field& f, const DyadicDecomposition& dec) {
  require_same_grid(f, Field(dec.grid()));
  const Spectrum s = to_spectral(f);
  std::vector<Field> blocks;
  blocks.reserve(static_cast<std::size_t>(dec.level_count()));
  for (int k = -1; k <= dec.k_max(); ++k) {
    Spectrum sk = s;
    sk.apply(dec.multiplier(k));
    blocks.push_back(to_physical(sk));
  }
  return Blocks(std::move(blocks));
}

Field lp_block(const Field& f, int k, const DyadicDecomposition& dec) {
  auto m = dec.multiplier(k);
  return apply_multiplier(f, m);
}

double besov_norm(const Blocks& blocks, const BesovIndex& idx) {
  if (!(idx.p >= 1.0) || !(idx.q >= 1.0)) throw std::invalid_argument("Besov indices need p, q >= 1");
  std::vector<double> terms;
  for (int k = -1; k <= blocks.k_max(); ++k)
    terms.push_back(std::exp2(idx.alpha * k) * blocks.level(k).lp_norm(idx.p));
  return lq_combine(terms, idx.q);
}

double besov_norm(const Field& f, const BesovIndex& idx, const DyadicDecomposition& dec) {
  return besov_norm(decompose(f, dec), idx);
}

Field para_lt(const Blocks& f, const Blocks& g) {
  check_grids(f, g);
  const std::size_t n = f.level(-1).size();
  Field out(f.grid());
  // low accumulates S_{k-1} f = sum_{j <= k-2} delta_j f.
  std::vector<double> low(n, 0.0);
  for (int k = 1; k <= g.k_max(); ++k) {
    auto fj = f.level(k - 2).values();
    auto gk = g.level(k).values();
    auto o = out.values();
    for (std::size_t i = 0; i < n; ++i) {
      low[i] += fj[i];
      o[i] += low[i] * gk[i];
    }
  }
  return out;
}

Field resonant(const Blocks& f, const Blocks& g) {
  check_grids(f, g);
  const std::size_t n = f.level(-1).size();
  const int top = f.k_max();
  Field out(f.grid());
  auto o = out.values();
  for (int k = -1; k <= top; ++k) {
    auto gk = g.level(k).values();
    for (int j = std::max(-1, k - 1); j <= std::min(top, k + 1); ++j) {
      auto fj = f.level(j).values();
      for (std::size_t i = 0; i < n; ++i) o[i] += fj[i] * gk[i];
    }
  }
  return out;
}

Field non_resonant(const Blocks& f, const Blocks& g) { return para_lt(f, g) + para_lt(g, f); }

BonySplit bony_split(const Blocks& f, const Blocks& g) {
  return BonySplit{para_lt(f, g), resonant(f, g), para_lt(g, f)};
}

BonySplit bony_split(const Field& f, const Field& g, const DyadicDecomposition& dec) {
  require_same_grid(f, g);
  return bony_split(decompose(f, dec), decompose(g, dec));
}

Field para_lt(const Field& f, const Field& g, const DyadicDecomposition& dec) {
  require_same_grid(f, g);
  return para_lt(decompose(f, dec), decompose(g, dec));
}

Field resonant(const Field& f, const Field& g, const DyadicDecomposition& dec) {
  require_same_grid(f, g);
  return resonant(decompose(f, dec), decompose(g, dec));
}

Field commutator_lt_res(const Field& f, const Blocks& g, const Blocks& h, const DyadicDecomposition& dec) {
  const Field lt = para_lt(decompose(f, dec), g);
  return resonant(decompose(lt, dec), h) - f * resonant(g, h);
}

Field commutator_lt_res(const Field& f, const Field& g, const Field& h, const DyadicDecomposition& dec) {
  require_same_grid(f, g);
  require_same_grid(g, h);
  return commutator_lt_res(f, decompose(g, dec), decompose(h, dec), dec);
}

Field commutator_heat_lt(double t, const Field& f, const Field& g, const DyadicDecomposition& dec) {
  if (t < 0.0) throw std::invalid_argument("heat commutator needs t >= 0");
  require_same_grid(f, g);
  const Blocks fb = decompose(f, dec);
  const Field smoothed_product = apply_heat_semigroup(para_lt(fb, decompose(g, dec)), t);
  return smoothed_product - para_lt(fb, decompose(apply_heat_semigroup(g, t), dec));
}

}  // namespace phi4
