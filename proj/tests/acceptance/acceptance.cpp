// One PASS/FAIL line per acceptance criterion. Usage: phi4_acceptance [output_dir] [name...]
// Experiment settings come from the configs/ directory of the source tree.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "phi4/besov.hpp"
#include "phi4/gronwall.hpp"
#include "phi4/harness.hpp"
#include "phi4/inequality.hpp"
#include "phi4/io.hpp"
#include "phi4/noise.hpp"
#include "phi4/stats.hpp"

using namespace phi4;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string g_output_dir = "acceptance_out";

constexpr std::pair<int, int> kGrids[] = {{1, 64}, {2, 32}, {3, 16}};

Field gaussian_field(const GridPtr& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Field f(g);
  for (auto& x : f.values()) x = normal(rng);
  return f;
}

Outcome bony_exactness() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int pairs = 0;
  for (auto [d, n] : kGrids) {
    const auto g = make_grid(d, n);
    const DyadicDecomposition dec(g);
    for (int i = 0; i < 100; ++i, ++pairs) {
      const Field f = gaussian_field(g, rng), h = gaussian_field(g, rng);
      const BonySplit s = bony_split(f, h, dec);
      const Field prod = f * h;
      worst = std::max(worst, (s.lt + s.res + s.gt - prod).sup_norm() / std::max(1.0, prod.sup_norm()));
    }
  }
  return {worst <= 1e-10, fmt::format("{} pairs, worst relative defect {:.3g} (limit 1e-10)", pairs, worst)};
}

Outcome partition_of_unity() {
  double worst = 0.0;
  for (auto [d, n] : kGrids) {
    const auto g = make_grid(d, n);
    const DyadicDecomposition dec(g);
    for (std::size_t s = 0; s < g->spectral_size(); ++s) {
      double sum = 0.0;
      for (int k = -1; k <= dec.k_max(); ++k) sum += dec.multiplier(k)[s];
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return {worst <= 1e-12, fmt::format("max |sum - 1| = {:.3g} (limit 1e-12)", worst)};
}

Outcome heat_smoothing() {
  bool pass = true;
  std::string detail;
  for (double gap : {0.5, 1.0, 1.5}) {
    InequalitySpec s;
    s.alpha = gap;
    s.beta = 0.0;
    const InequalityFit fit = fit_inequality_exponent(s, 24, 11);
    const double rel = std::abs(fit.exponent / fit.expected_exponent - 1.0);
    pass = pass && rel <= 0.1;
    detail += fmt::format("{}gap {}: {:.4f} vs {:.4f}", detail.empty() ? "" : "; ", gap, fit.exponent,
                          fit.expected_exponent);
  }
  return {pass, detail + " (within 10%)"};
}

Outcome interpolation() {
  InequalitySpec s;
  s.kind = InequalityKind::interpolation;
  s.alpha = -0.5;
  s.beta = 1.5;
  s.nu = 0.5;
  s.p = 2.0;
  s.n = 64;
  const InequalityFit fit = fit_inequality_exponent(s, 100, 7);
  return {fit.worst_constant <= 1.0 + 1e-12,
          fmt::format("100 fields, worst constant {:.15g} (limit 1 + 1e-12)", fit.worst_constant)};
}

Outcome wick_constant() {
  bool pass = true;
  std::string detail;
  for (auto [d, n] : kGrids) {
    const auto g = make_grid(d, n);
    Rng rng = member_rng(77, static_cast<std::uint64_t>(d));
    std::vector<double> sq;
    sq.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
      const Field x = ou_stationary_sample(g, rng);
      sq.push_back((x * x).mean());
    }
    const MeanEstimate e = mean_estimate(sq);
    const double z = std::abs(e.mean - wick_c1(*g)) / e.stderr_;
    pass = pass && z <= 3.0;
    detail += fmt::format("{}({},{}): c1 {:.5g}, MC {:.5g}, {:.2f} se", detail.empty() ? "" : "; ", d, n, wick_c1(*g),
                          e.mean, z);
  }
  return {pass, detail};
}

std::string column_summary(const ExperimentReport& rep, const std::string& col) {
  const auto it = std::find(rep.columns.begin(), rep.columns.end(), col);
  if (it == rep.columns.end()) return "";
  const auto j = static_cast<std::size_t>(it - rep.columns.begin());
  std::string s;
  for (const auto& row : rep.rows) s += (s.empty() ? "" : ",") + fmt::format("{:.4g}", row[j]);
  return s;
}

std::function<Outcome()> experiment(const std::string& file, std::string extra_col = "") {
  return [file, extra_col] {
    RunConfig cfg = load_config((std::filesystem::path(PHI4_CONFIG_DIR) / file).string());
    cfg.output_dir = g_output_dir;
    const ExperimentReport rep = run_experiment(cfg);
    write_report(rep, cfg.output_dir);
    std::string detail = rep.verdict.reason;
    if (!extra_col.empty()) detail += fmt::format(" [{}: {}]", extra_col, column_summary(rep, extra_col));
    return Outcome{rep.verdict.pass, detail};
  };
}

Outcome ode_reference_check() {
  const auto g = make_grid(1, 8);
  const DyadicDecomposition dec(g);
  const DiagramSet zero = zero_diagrams(dec);
  auto run = [&](double dt) {
    Field x(g, 1.0);
    for (std::size_t i = 0, n = steps_for(0.5, dt); i < n; ++i) x = step_direct(x, dt, zero, zero, ModelParams{});
    return x[0];
  };
  const double exact = 1.0 / std::sqrt(2.0);
  const double coarse = std::abs(run(2e-4) - exact), fine = std::abs(run(1e-4) - exact);
  const double order = std::log2(coarse / fine);
  return {fine <= 1e-3 && std::abs(order - 1.0) <= 0.2,
          fmt::format("|x - 1/sqrt 2| = {:.3g} at dt 1e-4 (limit 1e-3), observed order {:.3f}", fine, order)};
}

Outcome gronwall_rate() {
  const double rate = growth_rate(50.0, 0.5);
  const double rel = std::abs(rate / std::numbers::pi - 1.0);
  return {rel <= 0.05, fmt::format("rate {:.6f} vs pi, relative error {:.4f} (limit 0.05)", rate, rel)};
}

Outcome energy_balance() {
  const auto a = energy_balance_study(1, 32, 24, 2e-4, 0.02, 0.75);
  const auto b = energy_balance_study(1, 32, 24, 1e-4, 0.02, 0.75);
  const auto c = energy_balance_study(1, 32, 24, 5e-5, 0.02, 0.75);
  const double r1 = a.max_residual / b.max_residual, r2 = b.max_residual / c.max_residual;
  const bool pass = b.max_residual < 1e-4 && std::abs(r1 / 2.0 - 1.0) <= 0.2 && std::abs(r2 / 2.0 - 1.0) <= 0.2;
  return {pass, fmt::format("max residual {:.3g} at dt 1e-4 (limit 1e-4), halving ratios {:.3f}, {:.3f}",
                            b.max_residual, r1, r2)};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only;
  if (argc > 1) g_output_dir = argv[1];
  for (int i = 2; i < argc; ++i) only.emplace_back(argv[i]);

  const std::vector<Criterion> criteria{
      {"bony_exactness", 30, bony_exactness},
      {"partition_of_unity", 5, partition_of_unity},
      {"heat_smoothing", 60, heat_smoothing},
      {"interpolation", 10, interpolation},
      {"wick_constant", 120, wick_constant},
      {"consistency", 600, experiment("consistency.cfg", "rel_distance")},
      {"c_invariance", 600, experiment("c_invariance.cfg")},
      {"coming_down", 1200, experiment("coming_down.cfg")},
      {"negative_control", 60, experiment("blowup_control.cfg", "blowup_time")},
      {"ode_reference", 10, ode_reference_check},
      {"gronwall_rate", 1, gronwall_rate},
      {"energy_balance", 60, energy_balance},
      {"invariant_measure", 900, experiment("invariant_measure.cfg")},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failures;
    fmt::print("{} {}: {} | {:.2f} s (budget {} s{})\n", pass ? "PASS" : "FAIL", c.name, o.detail, secs,
               c.budget_seconds, in_budget ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
