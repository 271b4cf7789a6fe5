#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phi4/diagrams.hpp"
#include "phi4/io.hpp"
#include "phi4/solver.hpp"

namespace phi4 {

/// Flow of x' = -x^3 + m x from x0. Infinite x0 gives the limit from infinity.
double ode_reference(double x0, double m, double t);

/// Initial-data shapes of the experiments: cosine = mean of cos(pi x_i), constant = 1, zero = 0.
Field initial_profile(const GridPtr& grid, const std::string& kind);

/// span / dt as a step count; ConfigError unless it is a whole number.
std::size_t steps_for(double span, double dt);

struct Verdict {
  bool pass = false;
  std::string reason;
};

/// The statistics table is the only input of the verdict; rows are numeric.
struct ExperimentReport {
  std::string tag;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, double>> tolerances;
  Verdict verdict;
  double runtime_seconds = 0.0;
  std::uint64_t config_hash = 0;
  std::uint64_t root_seed = 0;
};

/// Pure verdict of a statistics table under its tolerances; dispatches on the tag.
Verdict judge(const std::string& tag, const std::vector<std::string>& columns,
              const std::vector<std::vector<double>>& rows, const std::vector<std::pair<std::string, double>>& tolerances);

/// Deterministic text of report.csv: the versioned CSV of the statistics table.
std::string report_csv(const ExperimentReport& report);
/// Text of verdict.txt: PASS/FAIL, reason, tolerances, runtime, config hash, root seed.
std::string verdict_text(const ExperimentReport& report);
/// Writes both files under <output_dir>/<config hash hex>/ and returns that directory.
std::string write_report(const ExperimentReport& report, const std::string& output_dir);

/// cfg.c2 when set, 0 without noise, otherwise the cached or freshly estimated ensemble value.
double resolve_c2(const RunConfig& cfg);

/// Stationary <1> with <20> = <30> = 0, evolved for cfg.burn_in at the fixed burn-in step;
/// zero diagrams when cfg.noise is false.
DiagramSet burned_in_diagrams(const RunConfig& cfg, const DyadicDecomposition& dec, double c2, Rng& rng);
inline constexpr double kBurnInStep = 1e-3;

ExperimentReport run_coming_down(const RunConfig& cfg);
ExperimentReport run_consistency(const RunConfig& cfg);
ExperimentReport run_c_invariance(const RunConfig& cfg);
ExperimentReport run_blowup_control(const RunConfig& cfg);
ExperimentReport run_invariant_measure(const RunConfig& cfg);
/// Dispatches on cfg.experiment.
ExperimentReport run_experiment(const RunConfig& cfg);

/// Deterministic cube flow from a smooth profile: worst per-step energy-balance residual.
struct EnergyBalanceResult {
  double dt = 0.0;
  double max_residual = 0.0;
};
EnergyBalanceResult energy_balance_study(int d, int n, int p, double dt, double horizon, double amplitude);

enum class AprioriBound { apriori_v, apriori_dw };

struct InequalityReport {
  AprioriBound which = AprioriBound::apriori_v;
  std::vector<double> times;
  std::vector<double> running_max;  ///< running max of LHS / RHS, 0 where both sides vanish
  double max_ratio = 0.0;
};

/// Evaluates one a priori estimate along a trajectory sampled at uniform times, with its
/// unknown implicit constant set to 1. K is the diagram bound (RegularityMonitor::bound).
/// apriori_v uses beta = 1/2 + 2 eps with all integrability indices infinite; apriori_dw uses
/// L^p norms with p = params.p over every stored pair s < t.
InequalityReport inequality_monitor(std::span<const TrajectorySample> trajectory, AprioriBound which, double K,
                                    const ModelParams& params, const DyadicDecomposition& dec);

}  // namespace phi4
