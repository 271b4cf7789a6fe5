#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include "phi4/harness.hpp"

using namespace phi4;

namespace {

RunConfig small_config(const std::string& experiment) {
  RunConfig c;
  c.d = 1;
  c.n = 16;
  c.experiment = experiment;
  c.output_dir = (std::filesystem::temp_directory_path() / "phi4_test_harness").string();
  c.burn_in = 0.05;
  c.c2 = 0.0;
  return c;
}

// Fourth-order Runge-Kutta reference for x' = -x^3 + m x.
double rk4(double x, double m, double t, int steps) {
  const double h = t / steps;
  auto f = [m](double y) { return -y * y * y + m * y; };
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

}  // namespace

TEST_CASE("ode_reference") {
  CHECK(ode_reference(1.0, 0.0, 0.5) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(ode_reference(std::numeric_limits<double>::infinity(), 0.0, 0.5) == 1.0);
  CHECK(ode_reference(0.0, 0.7, 3.0) == 0.0);
  CHECK(ode_reference(-2.0, 0.0, 0.1) == -ode_reference(2.0, 0.0, 0.1));
  for (double m : {-1.5, 0.8, 3.0})
    for (double x0 : {0.2, 1.0, 5.0}) CHECK(ode_reference(x0, m, 0.7) == doctest::Approx(rk4(x0, m, 0.7, 20000)).epsilon(1e-10));
  CHECK(ode_reference(1e6, 2.0, 10.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  // From infinity with m = 0 the flow is exactly the bound (2t)^{-1/2}.
  for (double t : {0.1, 1.0, 4.0})
    CHECK(ode_reference(std::numeric_limits<double>::infinity(), 0.0, t) == doctest::Approx(1.0 / std::sqrt(2 * t)));
  CHECK_THROWS(ode_reference(1.0, 0.0, -0.1));
}

TEST_CASE("initial profiles") {
  auto g = make_grid(2, 8);
  CHECK(initial_profile(g, "cosine").sup_norm() == doctest::Approx(1.0));
  CHECK(std::abs(initial_profile(g, "cosine").mean()) <= 1e-15);
  CHECK(initial_profile(g, "constant").mean() == 1.0);
  CHECK(initial_profile(g, "zero").sup_norm() == 0.0);
  CHECK_THROWS(initial_profile(g, "gauss"));
}

TEST_CASE("coming-down verdict is a median ratio invariant under relabeling") {
  const std::vector<std::string> cols{"lambda", "t", "member", "statistic", "blown_up"};
  std::vector<std::vector<double>> rows{{1, 0.5, 0, 1.0, 0}, {1, 0.5, 1, 2.0, 0}, {1, 0.5, 2, 3.0, 0},
                                        {100, 0.5, 0, 2.8, 0}, {100, 0.5, 1, 2.9, 0}, {100, 0.5, 2, 2.0, 0}};
  const std::vector<std::pair<std::string, double>> tol{{"ratio", 1.5}};
  CHECK(judge("coming_down", cols, rows, tol).pass);  // medians 2 and 2.8
  auto shuffled = rows;
  std::swap(shuffled[0][3], shuffled[2][3]);
  std::swap(shuffled[3][3], shuffled[5][3]);
  CHECK(judge("coming_down", cols, shuffled, tol).pass);
  CHECK_FALSE(judge("coming_down", cols, rows, {{"ratio", 1.3}}).pass);
  rows[4][4] = 1.0;
  CHECK_FALSE(judge("coming_down", cols, rows, {{"ratio", 100.0}}).pass);
  CHECK_THROWS(judge("coming_down", {"lambda"}, rows, tol));
  CHECK_THROWS(judge("nonsense", cols, rows, tol));
}

TEST_CASE("verdicts are monotone in their tolerances") {
  const std::vector<std::string> cc{"dt", "rel_distance", "blown_up"};
  const std::vector<std::vector<double>> crow{{4e-4, 4e-3, 0}, {2e-4, 2.2e-3, 0}, {1e-4, 1.3e-3, 0}};
  bool passed = false;
  for (double order : {1.2, 1.0, 0.9, 0.8, 0.5}) {
    const bool now = judge("consistency", cc, crow, {{"order", order}}).pass;
    CHECK((now || !passed));
    passed = now;
  }
  CHECK(passed);

  const std::vector<std::string> ic{"dt", "variant", "difference", "blown_up"};
  const std::vector<std::vector<double>> irow{{2e-4, 0, 4.4e-3, 0}, {1e-4, 0, 2e-3, 0}, {5e-5, 0, 1e-3, 0}};
  CHECK_FALSE(judge("c_invariance", ic, irow, {{"shrink", 0.05}}).pass);
  CHECK(judge("c_invariance", ic, irow, {{"shrink", 0.2}}).pass);
  const std::vector<std::vector<double>> same{{2e-4, 0, 0, 0}, {1e-4, 0, 0, 0}};
  CHECK(judge("c_invariance", ic, same, {{"shrink", 0.0}}).pass);

  const std::vector<std::string> bc{"sign", "member", "blown_up", "blowup_time"};
  std::vector<std::vector<double>> brow{{1, 0, 0, 1}, {-1, 0, 1, 0.1}, {-1, 1, 1, 0.1}, {-1, 2, 0, 1}};
  CHECK_FALSE(judge("blowup_control", bc, brow, {{"blowup_fraction", 0.9}}).pass);
  CHECK(judge("blowup_control", bc, brow, {{"blowup_fraction", 0.6}}).pass);
  brow[0][2] = 1;
  CHECK_FALSE(judge("blowup_control", bc, brow, {{"blowup_fraction", 0.0}}).pass);

  const std::vector<std::string> mc{"observable", "run", "mean", "stderr", "blown_up"};
  const std::vector<std::vector<double>> mrow{{2, 0, 1.0, 0.1, 0}, {2, 1, 1.5, 0.1, 0}};
  CHECK_FALSE(judge("invariant_measure", mc, mrow, {{"sigmas", 3.0}}).pass);
  CHECK(judge("invariant_measure", mc, mrow, {{"sigmas", 4.0}}).pass);
}

TEST_CASE("report files live under the config hash") {
  RunConfig cfg = small_config("blowup_control");
  ExperimentReport rep;
  rep.tag = "blowup_control";
  rep.columns = {"sign", "member", "blown_up", "blowup_time"};
  rep.rows = {{-1, 0, 1, 0.125}};
  rep.tolerances = {{"blowup_fraction", 0.9}};
  rep.verdict = judge(rep.tag, rep.columns, rep.rows, rep.tolerances);
  rep.config_hash = config_hash(cfg);
  rep.root_seed = 7;
  const std::string dir = write_report(rep, cfg.output_dir);
  CHECK(std::filesystem::path(dir).filename() == config_hash_hex(cfg));
  std::ifstream csv(dir + "/report.csv"), verdict(dir + "/verdict.txt");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "# phi4 csv v1 sign,member,blown_up,blowup_time");
  std::getline(verdict, line);
  CHECK(line == "PASS");
  CHECK(report_csv(rep) == "# phi4 csv v1 sign,member,blown_up,blowup_time\nsign,member,blown_up,blowup_time\n-1,0,1,0.125\n");
}

TEST_CASE("coming down: identical amplitudes give ratio 1 and large amplitudes saturate") {
  RunConfig cfg = small_config("coming_down");
  cfg.n = 8;
  cfg.ensemble = 2;
  cfg.lambdas = {1.0, 1.0};
  cfg.record_times = {0.05, 0.1};
  cfg.dt = 1e-3;
  cfg.horizon = 0.1;
  const auto rep = run_coming_down(cfg);
  CHECK(rep.rows.size() == 8);
  for (std::size_t i = 0; i < rep.rows.size(); i += 2) CHECK(rep.rows[i][3] == rep.rows[i + 1][3]);
  CHECK(rep.verdict.pass);
  CHECK(rep.verdict.reason.find("ratio 1 ") != std::string::npos);

  // Deterministic cube from a constant: the flow forgets the amplitude once it is large.
  RunConfig det = small_config("coming_down");
  det.n = 8;
  det.noise = false;
  det.profile = "constant";
  det.lambdas = {30.0, 300.0};
  det.record_times = {0.5};
  det.horizon = 0.5;
  det.dt = 1e-5;
  const auto sat = run_coming_down(det);
  REQUIRE(sat.rows.size() == 2);
  const double ratio = sat.rows[1][3] / sat.rows[0][3];
  // The explicit step forgets a large datum even faster than the exact flow, whose ratio is 1.00055.
  CHECK(ratio == doctest::Approx(ode_reference(300, 0, 0.5) / ode_reference(30, 0, 0.5)).epsilon(1e-3));
  CHECK(std::abs(ratio - 1.0) <= 1e-3);
}

TEST_CASE("consistency: identical deterministic flows and a first-order stochastic gap") {
  RunConfig cfg = small_config("consistency");
  cfg.noise = false;
  cfg.horizon = 0.02;
  const auto det = run_consistency(cfg);
  for (const auto& r : det.rows) CHECK(r[1] <= 1e-10);
  CHECK(det.verdict.pass);

  cfg.noise = true;
  cfg.n = 8;
  cfg.dt_values = {4e-4, 2e-4, 1e-4};
  const auto sto = run_consistency(cfg);
  CHECK(sto.verdict.pass);
  CHECK(sto.rows[0][1] > 0.0);
  const auto again = run_consistency(cfg);
  CHECK(report_csv(again) == report_csv(sto));
  cfg.dt_values = {3e-4, 2e-4, 1e-4};  // 3e-4 is not a multiple of the finest step along the path
  CHECK_THROWS_AS(run_consistency(cfg), ConfigError);
}

TEST_CASE("c-invariance: equal c gives zero difference") {
  RunConfig cfg = small_config("c_invariance");
  cfg.horizon = 0.01;
  cfg.c_values = {1.0, 1.0};
  cfg.reallocate = false;
  const auto rep = run_c_invariance(cfg);
  for (const auto& r : rep.rows) CHECK(r[2] == 0.0);
  CHECK(rep.verdict.pass);
  cfg.c_values = {1.0};
  CHECK_THROWS_AS(run_c_invariance(cfg), ConfigError);
}

TEST_CASE("blow-up control examples") {
  RunConfig cfg = small_config("blowup_control");
  cfg.model.formulation = Formulation::direct;
  cfg.noise = false;
  cfg.profile = "constant";
  cfg.amplitude = 2.0;
  cfg.dt = 1e-4;
  cfg.horizon = 0.2;
  const auto rep = run_blowup_control(cfg);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0][2] == 0.0);
  CHECK(rep.rows[1][2] == 1.0);
  CHECK(rep.rows[1][3] > 0.125);
  CHECK(rep.rows[1][3] < 0.2);
  CHECK(rep.verdict.pass);

  cfg.profile = "zero";
  const auto still = run_blowup_control(cfg);
  for (const auto& r : still.rows) CHECK(r[2] == 0.0);
  CHECK_FALSE(still.verdict.pass);  // flags are the data: nothing blows up from a fixed point
}

TEST_CASE("invariant measure examples") {
  RunConfig cfg = small_config("invariant_measure");
  cfg.d = 2;
  cfg.n = 8;
  cfg.model.formulation = Formulation::dpd2;
  cfg.dt = 1e-2;
  cfg.horizon = 20.0;
  cfg.burn_in = 1.0;
  cfg.profile = "zero";
  const auto a = run_invariant_measure(cfg);
  // Both runs start at X = 0 but draw independent noise; the same config repeats exactly.
  CHECK(report_csv(run_invariant_measure(cfg)) == report_csv(a));
  CHECK(a.rows.size() == 4);

  cfg.noise = false;
  cfg.profile = "cosine";
  const auto det = run_invariant_measure(cfg);
  for (const auto& r : det.rows) CHECK(std::abs(r[2]) <= 1e-12);

  cfg.model.formulation = Formulation::paracontrolled;
  CHECK_THROWS_AS(run_invariant_measure(cfg), ConfigError);
}

TEST_CASE("energy balance residual halves with the step") {
  const auto a = energy_balance_study(1, 32, 24, 2e-4, 0.02, 0.75);
  const auto b = energy_balance_study(1, 32, 24, 1e-4, 0.02, 0.75);
  CHECK(b.max_residual < 1e-4);
  CHECK(b.max_residual > 0.0);
  const double halving = a.max_residual / b.max_residual;
  CHECK(halving == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("inequality monitor") {
  auto g = make_grid(1, 16);
  DyadicDecomposition dec(g);
  std::vector<TrajectorySample> zero;
  for (int i = 0; i < 5; ++i) zero.push_back({0.1 * i, Field(g), Field(g), {}});
  for (auto which : {AprioriBound::apriori_v, AprioriBound::apriori_dw}) {
    const auto rep = inequality_monitor(zero, which, 0.0, ModelParams{}, dec);
    CHECK(rep.max_ratio == 0.0);
  }

  // Decaying heat flow in v with w = 0.
  const Field v0 = initial_profile(g, "cosine");
  std::vector<TrajectorySample> decay;
  for (int i = 0; i <= 20; ++i) {
    const double t = 0.01 * i;
    decay.push_back({t, std::exp(-(std::numbers::pi * std::numbers::pi + 1.0) * t) * v0, Field(g), {}});
  }
  for (auto which : {AprioriBound::apriori_v, AprioriBound::apriori_dw}) {
    const auto rep = inequality_monitor(decay, which, 1.0, ModelParams{}, dec);
    CHECK(std::isfinite(rep.max_ratio));
    CHECK(rep.running_max.size() == 20);
    for (std::size_t i = 1; i < rep.running_max.size(); ++i) CHECK(rep.running_max[i] >= rep.running_max[i - 1]);
  }
  CHECK(inequality_monitor(decay, AprioriBound::apriori_v, 1.0, ModelParams{}, dec).max_ratio > 0.0);

  decay[3].t += 1e-3;
  CHECK_THROWS(inequality_monitor(decay, AprioriBound::apriori_v, 1.0, ModelParams{}, dec));
}
