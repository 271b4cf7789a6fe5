#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phi4/besov.hpp"
#include "phi4/noise.hpp"

namespace phi4 {

/// The renormalized stochastic objects at one time slice.
///
/// Only `one`, `twenty`, `thirty` carry dynamics; every other field and the block
/// caches are functions of those three and of (c1, c2), rebuilt by complete_diagrams:
///   two = one^2 - c1,  three = one^3 - 3 c1 one,
///   thirty_one = thirty o one,  thirty_two = thirty o two - 3 c2 one,  twenty_two = twenty o two - c2.
struct DiagramSet {
  double t = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  Field one, two, three, twenty, thirty, thirty_one, thirty_two, twenty_two;
  Blocks one_blocks, two_blocks, twenty_blocks, thirty_blocks;
};

void complete_diagrams(DiagramSet& ds, const DyadicDecomposition& dec);

DiagramSet make_diagrams(Field one, Field twenty, Field thirty, double c1, double c2, double t,
                         const DyadicDecomposition& dec);
DiagramSet zero_diagrams(const DyadicDecomposition& dec);
/// <1> drawn from its stationary law, <20> = <30> = 0, t = 0.
DiagramSet initial_diagrams(double c1, double c2, Rng& rng, const DyadicDecomposition& dec);

/// One step: <1> by the exact OU transition driven by `unit_noise` (a dt = 1 increment),
/// <20> and <30> by exponential Euler on the massless heat equation with sources <2>, <3>
/// taken at the start of the step.
DiagramSet evolve_diagrams(const DiagramSet& ds, double dt, const Field& unit_noise, const DyadicDecomposition& dec);
DiagramSet evolve_diagrams(const DiagramSet& ds, double dt, Rng& rng, const DyadicDecomposition& dec);

/// Advances a diagram set in place with cached heat multipliers; one instance per (grid, dt).
class DiagramEvolver {
 public:
  DiagramEvolver(const DyadicDecomposition& dec, double dt);
  void step(DiagramSet& ds, const Field& unit_noise) const;
  void step(DiagramSet& ds, Rng& rng) const;
  /// Same update with <1> at the end of the step supplied by the caller, so that runs at
  /// several step sizes can share one finely sampled OU path.
  void step_to(DiagramSet& ds, Field next_one) const;
  double dt() const { return heat_.dt(); }

 private:
  const DyadicDecomposition& dec_;
  ExponentialEuler heat_;
};

struct C2Estimate {
  double value = 0.0;          ///< ensemble average, authoritative
  double stderr_ = 0.0;
  double time_average = 0.0;   ///< single-member time average after burn-in
  double time_stderr = 0.0;    ///< batch-means standard error of the time average
  std::size_t members = 0;
};

/// Mean of <20> o <2> over space and over `ensemble` independent members, each evolved from
/// stationary <1> and <20> = 0 for `burn_in` time units with step dt. Member 0 then keeps
/// running for `time_window` to produce the time-average estimator. Rejects ensemble < 16.
C2Estimate estimate_c2(const GridPtr& grid, std::size_t ensemble, double burn_in, double dt, std::uint64_t root_seed,
                       double time_window = 1.0);

/// Regularity exponents of <1>, <2>, <30>, <31'>, <32'>, <22'>.
std::array<double, 6> table_exponents(double epsilon);
inline constexpr std::array<const char*, 6> kDiagramTags{"1", "2", "30", "31'", "32'", "22'"};

struct RegularityRow {
  std::string tag;
  double alpha = 0.0;
  double measured_norm = 0.0;
};

/// Running sup of ||tau||_{B^{alpha_tau}_{inf,inf}} over a trajectory, plus the
/// time-Hoelder statistic ||<30>(t) - <30>(s)||_inf / |t - s|^{1/8} over consecutive slices.
class RegularityMonitor {
 public:
  RegularityMonitor(double epsilon, const DyadicDecomposition& dec);
  void observe(const DiagramSet& ds);
  std::vector<RegularityRow> rows() const;
  /// K = max over diagrams of the reported norms.
  double bound() const;
  double thirty_holder() const { return holder_; }
  std::size_t observations() const { return count_; }

 private:
  const DyadicDecomposition& dec_;
  std::array<double, 6> alpha_;
  std::array<double, 6> sup_{};
  double holder_ = 0.0;
  std::size_t count_ = 0;
  std::optional<Field> last_thirty_;
  double last_t_ = 0.0;
};

/// Rejects epsilon outside (0, 0.25) and an empty trajectory.
std::vector<RegularityRow> regularity_report(std::span<const DiagramSet> trajectory, double epsilon,
                                             const DyadicDecomposition& dec);

/// One line of the cached-constants file: "n d c1 c2 stderr_c2 root_seed".
struct CachedConstants {
  int n = 0;
  int d = 0;
  double c1 = 0.0;
  double c2 = 0.0;
  double stderr_c2 = 0.0;
  std::uint64_t root_seed = 0;
};

std::vector<CachedConstants> read_constants(const std::string& path);
/// Replaces any entry with the same (n, d, root_seed) and rewrites the file.
void store_constants(const std::string& path, const CachedConstants& entry);
std::optional<CachedConstants> lookup_constants(const std::string& path, int n, int d, std::uint64_t root_seed);

}  // namespace phi4
