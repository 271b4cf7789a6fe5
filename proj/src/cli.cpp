#include "phi4/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "phi4/gronwall.hpp"
#include "phi4/harness.hpp"
#include "phi4/inequality.hpp"
#include "phi4/io.hpp"
#include "phi4/noise.hpp"

namespace phi4 {

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_header(const std::string& header) {
  std::vector<std::string> cols;
  std::stringstream ss(header);
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  return cols;
}

std::string fmt_row(std::initializer_list<double> xs) {
  std::string s;
  for (double x : xs) {
    if (!s.empty()) s += ',';
    s += format_double(x);
  }
  return s;
}

std::string run_dir(const RunConfig& cfg) {
  const std::string dir = (std::filesystem::path(cfg.output_dir) / config_hash_hex(cfg)).string();
  std::filesystem::create_directories(dir);
  write_text_file((std::filesystem::path(dir) / "config.txt").string(), serialize_config(cfg));
  return dir;
}

std::string snapshot_path(const std::string& dir, const std::string& stem, std::size_t step) {
  return (std::filesystem::path(dir) / fmt::format("{}_{:08d}.bin", stem, step)).string();
}

// Emits `text` to the named file, or to `out` when the name is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    write_text_file(path, text);
}

RunConfig load_with_overrides(const std::string& path, const std::string& output_dir) {
  RunConfig cfg = load_config(path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  return cfg;
}

std::size_t snapshot_stride(const RunConfig& cfg) {
  return cfg.snapshot_every > 0.0 ? steps_for(cfg.snapshot_every, cfg.dt) : 0;
}

// ------------------------------------------------------------------ simulate

// Trajectory columns. The direct and dpd2 formulations carry one remainder Y = X - <1>,
// reported in the w columns with v = 0.
const std::vector<std::string> kTrajectoryColumns{"t",       "v_sup",   "w_sup",   "x_sup",
                                                  "v_besov", "w_besov", "x_besov", "blowup"};

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto grid = make_grid(cfg.d, cfg.n);
  const DyadicDecomposition dec(grid);
  const BesovIndex v_idx{-0.6, kInfinity, kInfinity};
  const BesovIndex w_idx{1.0 + 2.0 * cfg.model.epsilon, kInfinity, kInfinity};
  const BesovIndex x_idx{-0.5 - cfg.model.epsilon, kInfinity, kInfinity};
  const std::size_t total = steps_for(cfg.horizon, cfg.dt);
  const std::size_t stride = snapshot_stride(cfg);
  const std::string dir = run_dir(cfg);
  const Field x0 = cfg.amplitude * initial_profile(grid, cfg.profile);
  const bool dpd2 = cfg.model.formulation == Formulation::dpd2;
  const double c2 = dpd2 ? 0.0 : resolve_c2(cfg);
  Rng rng = member_rng(cfg.root_seed, 0);

  std::vector<std::vector<std::string>> rows;
  auto record = [&](std::size_t step, double t, const Field& v, const Field& w, const Field& x, bool blown) {
    rows.push_back({format_double(t), format_double(v.sup_norm()), format_double(w.sup_norm()),
                    format_double(x.sup_norm()), format_double(besov_norm(v, v_idx, dec)),
                    format_double(besov_norm(w, w_idx, dec)), format_double(besov_norm(x, x_idx, dec)),
                    blown ? "1" : "0"});
    if (stride != 0 && step % stride == 0) write_field_snapshot(x, snapshot_path(dir, "x", step));
  };

  if (cfg.model.formulation == Formulation::paracontrolled) {
    const ParacontrolledStepper stepper(dec, cfg.model, cfg.dt);
    const DiagramEvolver evolve(dec, cfg.dt);
    auto cur = std::make_shared<const DiagramSet>(burned_in_diagrams(cfg, dec, c2, rng));
    const double t0 = cur->t;
    SolverState s = make_state(Field(grid), x0 - cur->one + cur->thirty, cur, cfg.model);
    record(0, 0.0, s.v, s.w, reconstruct_x(s), false);
    for (std::size_t step = 1; step <= total && !s.blown_up; ++step) {
      const Coefficients coeffs = build_coefficients(*cur, cfg.model.m, dec);
      auto next = std::make_shared<DiagramSet>(*cur);
      if (cfg.noise)
        evolve.step(*next, rng);
      else
        next->t += cfg.dt;
      stepper.advance(s, coeffs, next);
      cur = next;
      record(step, s.t - t0, s.v, s.w, reconstruct_x(s), s.blown_up);
    }
  } else {
    const double c1 = cfg.noise ? wick_c1(*grid) : 0.0;
    std::optional<DirectStepper> direct;
    std::optional<Dpd2Stepper> dp;
    if (dpd2)
      dp.emplace(grid, cfg.model, cfg.dt);
    else
      direct.emplace(grid, cfg.model, cfg.dt);
    Field one = cfg.noise ? ou_stationary_sample(grid, rng) : Field(grid);
    RemainderState r{0.0, x0 - one, false};
    const Field zero(grid);
    record(0, 0.0, zero, r.y, r.y + one, false);
    for (std::size_t step = 1; step <= total && !r.blown_up; ++step) {
      if (dp)
        dp->advance(r, one, c1);
      else
        direct->advance(r, one, c1, c2);
      if (cfg.noise) one = ou_update(one, cfg.dt, rng);
      record(step, r.t, zero, r.y, r.y + one, r.blown_up);
    }
  }
  const std::string path = (std::filesystem::path(dir) / "trajectory.csv").string();
  write_text_file(path, format_csv(kTrajectoryColumns, rows));
  out << path << '\n';
  return 0;
}

// ------------------------------------------------------------------ diagrams

int cmd_diagrams(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.noise) throw ConfigError("diagrams needs experiment.noise = true");
  const auto grid = make_grid(cfg.d, cfg.n);
  const DyadicDecomposition dec(grid);
  const double c2 = resolve_c2(cfg);
  const std::size_t total = steps_for(cfg.horizon, cfg.dt);
  const std::size_t stride = snapshot_stride(cfg);
  const std::string dir = run_dir(cfg);
  Rng rng = member_rng(cfg.root_seed, 0);
  DiagramSet ds = burned_in_diagrams(cfg, dec, c2, rng);
  const DiagramEvolver evolve(dec, cfg.dt);
  RegularityMonitor monitor(cfg.model.epsilon, dec);
  for (std::size_t step = 0;; ++step) {
    monitor.observe(ds);
    if (stride != 0 && step % stride == 0) {
      write_field_snapshot(ds.one, snapshot_path(dir, "one", step));
      write_field_snapshot(ds.twenty, snapshot_path(dir, "twenty", step));
      write_field_snapshot(ds.thirty, snapshot_path(dir, "thirty", step));
    }
    if (step == total) break;
    evolve.step(ds, rng);
  }
  std::vector<std::vector<std::string>> rows;
  for (const RegularityRow& r : monitor.rows())
    rows.push_back({r.tag, format_double(r.alpha), format_double(r.measured_norm)});
  rows.push_back({"30_holder", format_double(0.125), format_double(monitor.thirty_holder())});
  const std::string path = (std::filesystem::path(dir) / "regularity.csv").string();
  write_text_file(path, format_csv({"tag", "alpha", "measured_norm"}, rows));
  out << path << '\n' << fmt::format("K = {}\n", format_double(monitor.bound()));
  return 0;
}

// ------------------------------------------------------------------ besov-test

std::vector<InequalitySpec> default_suite() {
  std::vector<InequalitySpec> suite;
  for (double gap : {0.5, 1.0, 1.5}) {
    InequalitySpec s;
    s.alpha = gap;
    s.beta = 0.0;
    suite.push_back(s);
  }
  InequalitySpec s;
  s.n = 64;
  s.kind = InequalityKind::interpolation;
  s.alpha = -0.5;
  s.beta = 1.5;
  s.nu = 0.5;
  s.p = 2.0;
  suite.push_back(s);
  s = InequalitySpec{};
  s.n = 64;
  s.kind = InequalityKind::resonant;
  s.alpha = -0.5;
  s.beta = 1.0;
  suite.push_back(s);
  s.d = 2;
  s.kind = InequalityKind::para_lt;
  suite.push_back(s);
  s.kind = InequalityKind::embedding;
  s.alpha = 0.5;
  s.p = 2.0;
  suite.push_back(s);
  s.kind = InequalityKind::sobolev;
  suite.push_back(s);
  return suite;
}

int cmd_besov_test(const std::string& kind, std::size_t samples, std::uint64_t seed, const std::string& output,
                   std::ostream& out) {
  std::optional<InequalityKind> only;
  if (!kind.empty()) only = parse_inequality_kind(kind);
  std::vector<std::string> rows;
  for (const InequalitySpec& s : default_suite())
    if (!only || s.kind == *only) rows.push_back(csv_row(fit_inequality_exponent(s, samples, seed)));
  const std::string header = csv_header_inequality();
  std::string text = csv_version_line(split_header(header)) + '\n' + header + '\n';
  for (const auto& r : rows) text += r + '\n';
  emit(output, text, out);
  return 0;
}

// ------------------------------------------------------------------ gronwall

int cmd_gronwall(const std::vector<double>& sigmas, const std::vector<double>& ss, const std::string& output,
                 std::ostream& out) {
  const std::vector<std::string> cols{"sigma", "s", "log_series", "rate", "target", "rel_err"};
  std::string text = csv_version_line(cols) + '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) text += (i ? "," : "") + cols[i];
  text += '\n';
  for (double sigma : sigmas) {
    if (!(sigma >= 0.0 && sigma < 1.0)) throw ConfigError(fmt::format("--sigma {} is outside [0, 1)", sigma));
    const double target = growth_rate_limit(sigma);
    for (double s : ss) {
      if (!(s > 0.0)) throw ConfigError(fmt::format("--s {} must be positive", s));
      const double rate = growth_rate(s, sigma);
      text += fmt_row({sigma, s, log_kbar2_series(s, sigma, 1.0), rate, target, std::abs(rate / target - 1.0)}) + '\n';
    }
  }
  emit(output, text, out);
  return 0;
}

// ------------------------------------------------------------------ harness

int cmd_harness(RunConfig cfg, const std::string& experiment, std::ostream& out) {
  if (!experiment.empty()) {
    cfg.experiment = experiment;
    validate(cfg);
  }
  if (cfg.experiment == "none") throw ConfigError("harness needs an experiment (experiment.name or --experiment)");
  const ExperimentReport rep = run_experiment(cfg);
  const std::string dir = write_report(rep, cfg.output_dir);
  out << fmt::format("{} {} {}\n", rep.verdict.pass ? "PASS" : "FAIL", rep.tag, rep.verdict.reason) << dir << '\n';
  return rep.verdict.pass ? 0 : kExitFail;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral simulation of the renormalized dynamic Phi^4 model on the torus [-1,1]^d", "phi4"};
  app.require_subcommand(1);

  std::string config, output, experiment, kind;
  std::size_t samples = 24;
  std::uint64_t seed = 1;
  std::vector<double> sigmas{0.5, 0.75, 0.875};
  std::vector<double> svals{1.0, 5.0, 10.0, 50.0, 100.0};

  auto* simulate = app.add_subcommand("simulate", "run one trajectory and write trajectory.csv");
  auto* diagrams = app.add_subcommand("diagrams", "evolve the stochastic diagrams and write regularity.csv");
  auto* harness = app.add_subcommand("harness", "run an experiment and write report.csv and verdict.txt");
  for (auto* sub : {simulate, diagrams, harness}) {
    sub->add_option("--config", config, "configuration file")->required();
    sub->add_option("--output", output, "override output.dir");
  }
  harness->add_option("--experiment", experiment, "override experiment.name");

  auto* besov = app.add_subcommand("besov-test", "fit scaling exponents of the Besov inequalities");
  besov->add_option("--kind", kind, "run only this inequality kind");
  besov->add_option("--samples", samples, "random fields per fit")->check(CLI::PositiveNumber);
  besov->add_option("--seed", seed, "sampling seed");
  besov->add_option("--output", output, "CSV path (default stdout)");

  auto* gronwall = app.add_subcommand("gronwall", "resolvent series and growth-rate asymptotics");
  gronwall->add_option("--sigma", sigmas, "kernel exponents in [0, 1)")->delimiter(',');
  gronwall->add_option("--s", svals, "evaluation points s > 0")->delimiter(',');
  gronwall->add_option("--output", output, "CSV path (default stdout)");

  auto* version = app.add_subcommand("version", "print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (version->parsed()) {
      out << kVersion << '\n';
      return 0;
    }
    if (besov->parsed()) return cmd_besov_test(kind, samples, seed, output, out);
    if (gronwall->parsed()) return cmd_gronwall(sigmas, svals, output, out);
    const RunConfig cfg = load_with_overrides(config, output);
    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (diagrams->parsed()) return cmd_diagrams(cfg, out);
    return cmd_harness(cfg, experiment, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFail;
  }
}

}  // namespace phi4
