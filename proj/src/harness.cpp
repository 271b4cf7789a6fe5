#include "phi4/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>

#include "phi4/gronwall.hpp"
#include "phi4/stats.hpp"

namespace phi4 {

double ode_reference(double x0, double m, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument(fmt::format("ode_reference needs t >= 0, got {}", t));
  if (x0 == 0.0) return 0.0;
  const double sign = x0 > 0.0 ? 1.0 : -1.0;
  const double inv_sq = std::isinf(x0) ? 0.0 : 1.0 / (x0 * x0);
  // y = x^{-2} solves y' = 2 - 2 m y.
  double y;
  if (m == 0.0)
    y = inv_sq + 2.0 * t;
  else
    y = inv_sq * std::exp(-2.0 * m * t) - std::expm1(-2.0 * m * t) / m;
  if (y == 0.0) return sign * std::numeric_limits<double>::infinity();
  return sign / std::sqrt(y);
}

Field initial_profile(const GridPtr& grid, const std::string& kind) {
  if (kind == "zero") return Field(grid);
  if (kind == "constant") return Field(grid, 1.0);
  if (kind == "cosine") {
    const int d = grid->dim();
    return sample_field(grid, [d](std::array<double, 3> x) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += std::cos(std::numbers::pi * x[static_cast<std::size_t>(i)]);
      return s / d;
    });
  }
  throw std::invalid_argument(fmt::format("unknown profile '{}'", kind));
}

// ------------------------------------------------------------------ verdicts

namespace {

std::size_t column(const std::vector<std::string>& columns, const std::string& name) {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument(fmt::format("statistics table lacks column '{}'", name));
  return static_cast<std::size_t>(it - columns.begin());
}

double tolerance(const std::vector<std::pair<std::string, double>>& tol, const std::string& name) {
  for (const auto& [k, v] : tol)
    if (k == name) return v;
  throw std::invalid_argument(fmt::format("missing tolerance '{}'", name));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of nothing");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

using Rows = std::vector<std::vector<double>>;
using Tolerances = std::vector<std::pair<std::string, double>>;

Verdict judge_coming_down(const std::vector<std::string>& cols, const Rows& rows, const Tolerances& tol) {
  const auto cl = column(cols, "lambda"), ct = column(cols, "t"), cs = column(cols, "statistic"),
             cb = column(cols, "blown_up");
  const double limit = tolerance(tol, "ratio");
  std::map<double, std::map<double, std::vector<double>>> by_time;
  for (const auto& r : rows) {
    if (r[cb] != 0.0) return {false, fmt::format("blow-up at lambda = {}", r[cl])};
    by_time[r[ct]][r[cl]].push_back(r[cs]);
  }
  if (by_time.empty()) return {false, "empty statistics table"};
  double worst = 0.0, worst_t = 0.0;
  for (const auto& [t, by_lambda] : by_time) {
    const double lo = median(by_lambda.begin()->second), hi = median(by_lambda.rbegin()->second);
    const double ratio = hi / lo;
    if (!(ratio <= limit)) return {false, fmt::format("median ratio {:.6g} > {} at t = {}", ratio, limit, t)};
    if (ratio > worst) worst = ratio, worst_t = t;
  }
  return {true, fmt::format("worst median ratio {:.6g} <= {} at t = {}", worst, limit, worst_t)};
}

Verdict judge_consistency(const std::vector<std::string>& cols, const Rows& rows, const Tolerances& tol) {
  const auto cd = column(cols, "dt"), cx = column(cols, "rel_distance"), cb = column(cols, "blown_up");
  const double order = tolerance(tol, "order");
  if (rows.size() < 3) return {false, "need at least three step sizes"};
  std::vector<double> ld, lx;
  bool all_tiny = true;
  for (const auto& r : rows) {
    if (r[cb] != 0.0) return {false, fmt::format("blow-up at dt = {}", r[cd])};
    all_tiny = all_tiny && r[cx] <= 1e-10;
    ld.push_back(std::log(r[cd]));
    lx.push_back(std::log(r[cx]));
  }
  if (all_tiny) return {true, "formulations agree to 1e-10 at every step size"};
  for (double x : lx)
    if (!std::isfinite(x)) return {false, "a distance is zero or not finite"};
  const double slope = least_squares(ld, lx).slope;
  if (!(slope >= order)) return {false, fmt::format("fitted order {:.4f} < {}", slope, order)};
  return {true, fmt::format("fitted order {:.4f} >= {}", slope, order)};
}

Verdict judge_c_invariance(const std::vector<std::string>& cols, const Rows& rows, const Tolerances& tol) {
  const auto cd = column(cols, "dt"), cv = column(cols, "variant"), cx = column(cols, "difference"),
             cb = column(cols, "blown_up");
  const double shrink = tolerance(tol, "shrink");
  std::map<double, std::vector<std::pair<double, double>>> by_variant;
  for (const auto& r : rows) {
    if (r[cb] != 0.0) return {false, fmt::format("blow-up at dt = {}", r[cd])};
    by_variant[r[cv]].emplace_back(r[cd], r[cx]);
  }
  if (by_variant.empty()) return {false, "empty statistics table"};
  std::string summary;
  for (auto& [variant, pts] : by_variant) {
    if (pts.size() < 2) return {false, "need at least two step sizes per variant"};
    std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first > b.first; });
    bool all_zero = true;
    for (const auto& p : pts) all_zero = all_zero && p.second == 0.0;
    if (all_zero) {
      summary += fmt::format(" variant {}: identical sums;", variant);
      continue;
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double expect = pts[i].first / pts[i + 1].first;
      const double got = pts[i].second / pts[i + 1].second;
      if (!(got >= expect * (1.0 - shrink) && got <= expect * (1.0 + shrink)))
        return {false, fmt::format("variant {}: shrink {:.4f} outside {} +- {:.0f}% from dt = {}", variant, got, expect,
                                   100.0 * shrink, pts[i].first)};
      summary += fmt::format(" variant {} dt {}: shrink {:.4f};", variant, pts[i].first, got);
    }
  }
  return {true, "shrink factors within tolerance:" + summary};
}

Verdict judge_blowup_control(const std::vector<std::string>& cols, const Rows& rows, const Tolerances& tol) {
  const auto cs = column(cols, "sign"), cb = column(cols, "blown_up");
  const double need = tolerance(tol, "blowup_fraction");
  std::size_t wrong = 0, wrong_flagged = 0, right = 0, right_flagged = 0;
  for (const auto& r : rows) {
    const bool flag = r[cb] != 0.0;
    if (r[cs] < 0.0) {
      ++wrong;
      wrong_flagged += flag;
    } else {
      ++right;
      right_flagged += flag;
    }
  }
  if (wrong + right == 0) return {false, "empty statistics table"};
  if (right_flagged > 0) return {false, fmt::format("{} of {} correct-sign runs blew up", right_flagged, right)};
  const double frac = wrong ? static_cast<double>(wrong_flagged) / static_cast<double>(wrong) : 1.0;
  if (!(frac >= need)) return {false, fmt::format("wrong-sign blow-up fraction {:.3f} < {}", frac, need)};
  return {true, fmt::format("wrong-sign blow-up fraction {:.3f} >= {}; no correct-sign blow-up", frac, need)};
}

Verdict judge_invariant_measure(const std::vector<std::string>& cols, const Rows& rows, const Tolerances& tol) {
  const auto co = column(cols, "observable"), cr = column(cols, "run"), cm = column(cols, "mean"),
             cs = column(cols, "stderr"), cb = column(cols, "blown_up");
  const double sigmas = tolerance(tol, "sigmas");
  std::map<double, std::map<double, std::pair<double, double>>> by_obs;
  for (const auto& r : rows) {
    if (r[cb] != 0.0) return {false, fmt::format("run {} blew up", r[cr])};
    by_obs[r[co]][r[cr]] = {r[cm], r[cs]};
  }
  if (by_obs.empty()) return {false, "empty statistics table"};
  std::string summary;
  for (const auto& [obs, runs] : by_obs) {
    if (runs.size() != 2) return {false, "each observable needs exactly two runs"};
    const auto [m0, s0] = runs.begin()->second;
    const auto [m1, s1] = runs.rbegin()->second;
    const double gap = std::abs(m0 - m1), band = sigmas * std::hypot(s0, s1);
    if (!(gap <= band))
      return {false, fmt::format("observable {}: |{:.6g} - {:.6g}| = {:.3g} > {:.3g}", obs, m0, m1, gap, band)};
    summary += fmt::format(" observable {}: {:.2f} sigma;", obs, band > 0.0 ? sigmas * gap / band : 0.0);
  }
  return {true, "averages agree:" + summary};
}

}  // namespace

Verdict judge(const std::string& tag, const std::vector<std::string>& columns, const Rows& rows, const Tolerances& tol) {
  if (tag == "coming_down") return judge_coming_down(columns, rows, tol);
  if (tag == "consistency") return judge_consistency(columns, rows, tol);
  if (tag == "c_invariance") return judge_c_invariance(columns, rows, tol);
  if (tag == "blowup_control") return judge_blowup_control(columns, rows, tol);
  if (tag == "invariant_measure") return judge_invariant_measure(columns, rows, tol);
  throw std::invalid_argument(fmt::format("no verdict rule for experiment '{}'", tag));
}

std::string report_csv(const ExperimentReport& report) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(report.rows.size());
  for (const auto& r : report.rows) {
    std::vector<std::string> row;
    for (double x : r) row.push_back(format_double(x));
    cells.push_back(std::move(row));
  }
  return format_csv(report.columns, cells);
}

std::string verdict_text(const ExperimentReport& report) {
  std::string out = report.verdict.pass ? "PASS\n" : "FAIL\n";
  out += fmt::format("experiment = {}\nreason = {}\n", report.tag, report.verdict.reason);
  for (const auto& [k, v] : report.tolerances) out += fmt::format("tolerance.{} = {}\n", k, format_double(v));
  out += fmt::format("runtime_seconds = {:.3f}\nconfig_hash = {:016x}\nroot_seed = {}\n", report.runtime_seconds,
                     report.config_hash, report.root_seed);
  return out;
}

std::string write_report(const ExperimentReport& report, const std::string& output_dir) {
  const auto dir = std::filesystem::path(output_dir) / fmt::format("{:016x}", report.config_hash);
  write_text_file((dir / "report.csv").string(), report_csv(report));
  write_text_file((dir / "verdict.txt").string(), verdict_text(report));
  return dir.string();
}

// ------------------------------------------------------------------ shared set-up

namespace {

// Keeps the C2 estimator's streams apart from the experiment members keyed by the same root.
constexpr std::uint64_t kC2SeedOffset = 0x9e3779b97f4a7c15ULL;
constexpr double kC2BurnIn = 0.5;
constexpr double kC2Window = 1.0;
constexpr std::size_t kC2Ensemble = 16;

double c1_of(const RunConfig& cfg, const TorusGrid& g) { return cfg.noise ? wick_c1(g) : 0.0; }

using Clock = std::chrono::steady_clock;

ExperimentReport start_report(const RunConfig& cfg, std::string tag, std::vector<std::string> columns,
                              Tolerances tolerances) {
  ExperimentReport r;
  r.tag = std::move(tag);
  r.columns = std::move(columns);
  r.tolerances = std::move(tolerances);
  r.config_hash = config_hash(cfg);
  r.root_seed = cfg.root_seed;
  return r;
}

void finish_report(ExperimentReport& r, Clock::time_point start) {
  r.verdict = judge(r.tag, r.columns, r.rows, r.tolerances);
  r.runtime_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

std::size_t steps_for(double span, double dt) {
  const double k = span / dt;
  const auto n = static_cast<std::size_t>(std::llround(k));
  if (std::abs(k - static_cast<double>(n)) > 1e-6 * std::max(1.0, k))
    throw ConfigError(fmt::format("time span {} is not a whole number of steps {}", span, dt));
  return n;
}

double resolve_c2(const RunConfig& cfg) {
  if (cfg.c2) return *cfg.c2;
  if (!cfg.noise) return 0.0;
  const std::string cache = (std::filesystem::path(cfg.output_dir) / "constants.txt").string();
  if (auto hit = lookup_constants(cache, cfg.n, cfg.d, cfg.root_seed)) return hit->c2;
  const auto grid = make_grid(cfg.d, cfg.n);
  const C2Estimate est = estimate_c2(grid, kC2Ensemble, kC2BurnIn, kBurnInStep, cfg.root_seed + kC2SeedOffset, kC2Window);
  std::filesystem::create_directories(cfg.output_dir);
  store_constants(cache, CachedConstants{cfg.n, cfg.d, wick_c1(*grid), est.value, est.stderr_, cfg.root_seed});
  return est.value;
}

DiagramSet burned_in_diagrams(const RunConfig& cfg, const DyadicDecomposition& dec, double c2, Rng& rng) {
  if (!cfg.noise) return zero_diagrams(dec);
  DiagramSet ds = initial_diagrams(wick_c1(*dec.grid()), c2, rng, dec);
  const DiagramEvolver evolve(dec, kBurnInStep);
  for (std::size_t i = 0, n = steps_for(cfg.burn_in, kBurnInStep); i < n; ++i) evolve.step(ds, rng);
  return ds;
}

// ------------------------------------------------------------------ coming down

ExperimentReport run_coming_down(const RunConfig& cfg) {
  validate(cfg);
  const auto start = Clock::now();
  ExperimentReport rep =
      start_report(cfg, "coming_down", {"lambda", "t", "member", "statistic", "blown_up"}, {{"ratio", cfg.tol_ratio}});
  if (cfg.model.formulation != Formulation::paracontrolled)
    throw ConfigError("coming_down runs the paracontrolled formulation");
  for (double t : cfg.record_times)
    if (t > cfg.horizon) throw ConfigError(fmt::format("record time {} exceeds the horizon {}", t, cfg.horizon));

  const auto grid = make_grid(cfg.d, cfg.n);
  const DyadicDecomposition dec(grid);
  const double c2 = resolve_c2(cfg);
  const Field profile = initial_profile(grid, cfg.profile);
  const ParacontrolledStepper stepper(dec, cfg.model, cfg.dt);
  const DiagramEvolver evolve(dec, cfg.dt);
  const BesovIndex norm{-0.5 - cfg.model.epsilon, kInfinity, kInfinity};
  const std::size_t total = steps_for(cfg.horizon, cfg.dt);
  std::map<std::size_t, double> record;
  for (double t : cfg.record_times) record[steps_for(t, cfg.dt)] = t;

  for (int member = 0; member < cfg.ensemble; ++member) {
    Rng rng = member_rng(cfg.root_seed, static_cast<std::uint64_t>(member));
    auto cur = std::make_shared<const DiagramSet>(burned_in_diagrams(cfg, dec, c2, rng));
    // Every amplitude sees the same noise, so the ratio compares like with like.
    std::vector<SolverState> states;
    for (double lambda : cfg.lambdas) states.push_back(make_state(Field(grid), lambda * profile, cur, cfg.model));
    for (std::size_t step = 1; step <= total; ++step) {
      const Coefficients coeffs = build_coefficients(*cur, cfg.model.m, dec);
      auto next = std::make_shared<DiagramSet>(*cur);
      if (cfg.noise)
        evolve.step(*next, rng);
      else
        next->t += cfg.dt;
      for (auto& s : states) stepper.advance(s, coeffs, next);
      cur = next;
      if (const auto it = record.find(step); it != record.end()) {
        for (std::size_t i = 0; i < states.size(); ++i) {
          const bool flag = states[i].blown_up;
          const double stat = flag ? std::numeric_limits<double>::infinity()
                                   : std::sqrt(it->second) * besov_norm(reconstruct_x(states[i]), norm, dec);
          rep.rows.push_back({cfg.lambdas[i], it->second, static_cast<double>(member), stat, flag ? 1.0 : 0.0});
        }
      }
    }
  }
  finish_report(rep, start);
  return rep;
}

// ------------------------------------------------------------------ refinement studies

namespace {

struct ParaRun {
  ModelParams params;
  Field v0, w0;
};

struct RefinementResult {
  Field x_direct;
  std::vector<Field> x_para;
  bool blown_up = false;
};

// One pass at step dt over [t0, t0 + horizon]. <1> follows a single OU path sampled at dt_fine,
// so every dt sees the same noise; <20>, <30> are then integrated at dt itself.
RefinementResult refinement_pass(const RunConfig& cfg, const DyadicDecomposition& dec, const DiagramSet& start,
                                 double dt, double dt_fine, const Field& x0, const std::vector<ParaRun>& runs,
                                 bool with_direct) {
  const auto& grid = dec.grid();
  const std::size_t k = steps_for(dt, dt_fine);
  const std::size_t total = steps_for(cfg.horizon, dt);
  Rng fine = member_rng(cfg.root_seed, 1);
  const DiagramEvolver evolve(dec, dt);
  std::vector<ParacontrolledStepper> steppers;
  std::vector<SolverState> states;
  auto cur = std::make_shared<const DiagramSet>(start);
  for (const auto& r : runs) {
    steppers.emplace_back(dec, r.params, dt);
    states.push_back(make_state(r.v0, r.w0, cur, r.params));
  }
  const DirectStepper direct(grid, cfg.model, dt);
  RemainderState rem{start.t, x0 - start.one, false};

  for (std::size_t step = 0; step < total; ++step) {
    Field one = cur->one;
    if (cfg.noise)
      for (std::size_t j = 0; j < k; ++j) one = ou_update(one, dt_fine, fine);
    if (with_direct) direct.advance(rem, cur->one, cur->c1, cur->c2);
    const Coefficients coeffs = build_coefficients(*cur, cfg.model.m, dec);
    auto next = std::make_shared<DiagramSet>(*cur);
    evolve.step_to(*next, std::move(one));
    for (std::size_t i = 0; i < states.size(); ++i) steppers[i].advance(states[i], coeffs, next);
    cur = next;
  }
  RefinementResult out;
  out.x_direct = cur->one + rem.y;
  out.blown_up = rem.blown_up;
  for (const auto& s : states) {
    out.x_para.push_back(reconstruct_x(s));
    out.blown_up = out.blown_up || s.blown_up;
  }
  return out;
}

struct RefinementSetup {
  GridPtr grid;
  std::unique_ptr<DyadicDecomposition> dec;
  DiagramSet start;
  Field x0;
  double dt_fine = 0.0;
};

RefinementSetup refinement_setup(const RunConfig& cfg) {
  if (cfg.dt_values.size() < 2) throw ConfigError("a refinement study needs at least two step sizes");
  RefinementSetup s;
  s.grid = make_grid(cfg.d, cfg.n);
  s.dec = std::make_unique<DyadicDecomposition>(s.grid);
  const double c2 = resolve_c2(cfg);
  Rng rng = member_rng(cfg.root_seed, 0);
  s.start = burned_in_diagrams(cfg, *s.dec, c2, rng);
  s.x0 = cfg.amplitude * initial_profile(s.grid, cfg.profile);
  s.dt_fine = *std::min_element(cfg.dt_values.begin(), cfg.dt_values.end());
  return s;
}

}  // namespace

ExperimentReport run_consistency(const RunConfig& cfg) {
  validate(cfg);
  const auto start = Clock::now();
  ExperimentReport rep = start_report(cfg, "consistency", {"dt", "rel_distance", "blown_up"}, {{"order", cfg.tol_order}});
  const RefinementSetup setup = refinement_setup(cfg);
  // X = <1> - <30> + v + w with v = 0 reproduces the direct initial datum exactly.
  const std::vector<ParaRun> runs{{cfg.model, Field(setup.grid), setup.x0 - setup.start.one + setup.start.thirty}};
  for (double dt : cfg.dt_values) {
    const auto res = refinement_pass(cfg, *setup.dec, setup.start, dt, setup.dt_fine, setup.x0, runs, true);
    const double dist = (res.x_para[0] - res.x_direct).sup_norm() / std::max(1.0, res.x_direct.sup_norm());
    rep.rows.push_back({dt, dist, res.blown_up ? 1.0 : 0.0});
  }
  finish_report(rep, start);
  return rep;
}

ExperimentReport run_c_invariance(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.c_values.size() != 2) throw ConfigError("c_invariance compares exactly two values of c");
  const auto start = Clock::now();
  ExperimentReport rep =
      start_report(cfg, "c_invariance", {"dt", "variant", "difference", "blown_up"}, {{"shrink", cfg.tol_shrink}});
  const RefinementSetup setup = refinement_setup(cfg);
  ModelParams pa = cfg.model, pb = cfg.model;
  pa.c = cfg.c_values[0];
  pb.c = cfg.c_values[1];
  const Field w0 = setup.x0 - setup.start.one + setup.start.thirty;
  // Variant 1 moves part of the datum from w to v for the second value of c.
  const Field h = 0.5 * cfg.amplitude *
                  sample_field(setup.grid, [](std::array<double, 3> x) { return std::sin(std::numbers::pi * x[0]); });
  std::vector<ParaRun> runs{{pa, Field(setup.grid), w0}, {pb, Field(setup.grid), w0}};
  if (cfg.reallocate) runs.push_back({pb, h, w0 - h});
  for (double dt : cfg.dt_values) {
    const auto res = refinement_pass(cfg, *setup.dec, setup.start, dt, setup.dt_fine, setup.x0, runs, false);
    const double flag = res.blown_up ? 1.0 : 0.0;
    rep.rows.push_back({dt, 0.0, (res.x_para[1] - res.x_para[0]).sup_norm(), flag});
    if (cfg.reallocate) rep.rows.push_back({dt, 1.0, (res.x_para[2] - res.x_para[0]).sup_norm(), flag});
  }
  finish_report(rep, start);
  return rep;
}

// ------------------------------------------------------------------ blow-up control

ExperimentReport run_blowup_control(const RunConfig& cfg) {
  validate(cfg);
  const auto start = Clock::now();
  ExperimentReport rep = start_report(cfg, "blowup_control", {"sign", "member", "blown_up", "blowup_time"},
                                      {{"blowup_fraction", cfg.tol_blowup_fraction}});
  const auto grid = make_grid(cfg.d, cfg.n);
  const double c1 = c1_of(cfg, *grid);
  const double c2 = resolve_c2(cfg);
  const Field x0 = cfg.amplitude * initial_profile(grid, cfg.profile);
  const std::size_t total = steps_for(cfg.horizon, cfg.dt);
  for (int sign : {1, -1}) {
    ModelParams params = cfg.model;
    params.sign = sign;
    const DirectStepper step(grid, params, cfg.dt);
    for (int member = 0; member < cfg.ensemble; ++member) {
      Rng rng = member_rng(cfg.root_seed, static_cast<std::uint64_t>(member));
      Field one = cfg.noise ? ou_stationary_sample(grid, rng) : Field(grid);
      RemainderState r{0.0, x0 - one, false};
      for (std::size_t i = 0; i < total && !r.blown_up; ++i) {
        step.advance(r, one, c1, c2);
        if (cfg.noise) one = ou_update(one, cfg.dt, rng);
      }
      rep.rows.push_back({static_cast<double>(sign), static_cast<double>(member), r.blown_up ? 1.0 : 0.0,
                          r.blown_up ? r.t : std::numeric_limits<double>::infinity()});
    }
  }
  finish_report(rep, start);
  return rep;
}

// ------------------------------------------------------------------ invariant measure

ExperimentReport run_invariant_measure(const RunConfig& cfg) {
  validate(cfg);
  const auto start = Clock::now();
  ExperimentReport rep = start_report(cfg, "invariant_measure", {"observable", "run", "mean", "stderr", "blown_up"},
                                      {{"sigmas", cfg.tol_sigmas}});
  if (cfg.model.formulation == Formulation::paracontrolled)
    throw ConfigError("invariant_measure runs the direct or dpd2 formulation");
  const auto grid = make_grid(cfg.d, cfg.n);
  const double c1 = c1_of(cfg, *grid);
  const bool dpd2 = cfg.model.formulation == Formulation::dpd2;
  const double c2 = dpd2 ? 0.0 : resolve_c2(cfg);
  const std::size_t total = steps_for(cfg.horizon, cfg.dt);
  const std::size_t burn = steps_for(cfg.burn_in, cfg.dt);
  if (burn >= total) throw ConfigError("time.burn_in must be shorter than time.horizon");

  for (int run = 0; run < 2; ++run) {
    Rng rng = member_rng(cfg.root_seed, static_cast<std::uint64_t>(run));
    Field one = cfg.noise ? ou_stationary_sample(grid, rng) : Field(grid);
    const Field x0 = run == 0 ? Field(grid) : cfg.amplitude * initial_profile(grid, cfg.profile);
    RemainderState r{0.0, x0 - one, false};
    std::vector<double> x2, x4;
    x2.reserve(total - burn);
    x4.reserve(total - burn);
    const Dpd2Stepper* dp = nullptr;
    std::optional<Dpd2Stepper> dpd2_step;
    std::optional<DirectStepper> direct_step;
    if (dpd2)
      dp = &dpd2_step.emplace(grid, cfg.model, cfg.dt);
    else
      direct_step.emplace(grid, cfg.model, cfg.dt);
    for (std::size_t i = 0; i < total && !r.blown_up; ++i) {
      if (dp)
        dp->advance(r, one, c1);
      else
        direct_step->advance(r, one, c1, c2);
      if (cfg.noise) one = ou_update(one, cfg.dt, rng);
      if (i + 1 <= burn) continue;
      double s2 = 0.0, s4 = 0.0;
      const auto y = r.y.values();
      const auto o = one.values();
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double x = y[j] + o[j], q = x * x;
        s2 += q;
        s4 += q * q;
      }
      s2 /= static_cast<double>(y.size());
      s4 /= static_cast<double>(y.size());
      x2.push_back(s2 - c1);
      x4.push_back(s4 - 6.0 * c1 * s2 + 3.0 * c1 * c1);
    }
    const double flag = r.blown_up ? 1.0 : 0.0;
    const auto b = static_cast<std::size_t>(cfg.batches);
    const MeanEstimate e2 = r.blown_up ? MeanEstimate{} : batch_means(x2, b);
    const MeanEstimate e4 = r.blown_up ? MeanEstimate{} : batch_means(x4, b);
    rep.rows.push_back({2.0, static_cast<double>(run), e2.mean, e2.stderr_, flag});
    rep.rows.push_back({4.0, static_cast<double>(run), e4.mean, e4.stderr_, flag});
  }
  finish_report(rep, start);
  return rep;
}

ExperimentReport run_experiment(const RunConfig& cfg) {
  if (cfg.experiment == "coming_down") return run_coming_down(cfg);
  if (cfg.experiment == "consistency") return run_consistency(cfg);
  if (cfg.experiment == "c_invariance") return run_c_invariance(cfg);
  if (cfg.experiment == "blowup_control") return run_blowup_control(cfg);
  if (cfg.experiment == "invariant_measure") return run_invariant_measure(cfg);
  throw ConfigError(fmt::format("experiment.name '{}' names no experiment", cfg.experiment));
}

// ------------------------------------------------------------------ energy balance

EnergyBalanceResult energy_balance_study(int d, int n, int p, double dt, double horizon, double amplitude) {
  const auto grid = make_grid(d, n);
  const DyadicDecomposition dec(grid);
  const ModelParams params;
  auto zero = std::make_shared<const DiagramSet>(zero_diagrams(dec));
  const Coefficients coeffs = build_coefficients(*zero, params.m, dec);
  const ParacontrolledStepper stepper(dec, params, dt);
  SolverState s = make_state(Field(grid), amplitude * initial_profile(grid, "cosine"), zero, params);
  auto sample = [&](const SolverState& st) {
    const ForcingPair fg = paracontrolled_forcing(st, coeffs, dec);
    return TrajectorySample{st.t, st.v, st.w, fg.G + st.w * st.w * st.w};
  };
  std::vector<TrajectorySample> traj{sample(s)};
  for (std::size_t i = 0, total = steps_for(horizon, dt); i < total; ++i) {
    auto next = std::make_shared<DiagramSet>(*s.diagrams);
    next->t += dt;
    stepper.advance(s, coeffs, next);
    traj.push_back(sample(s));
  }
  EnergyBalanceResult out{dt, 0.0};
  for (double r : energy_balance_residual(traj, p, params.c)) out.max_residual = std::max(out.max_residual, std::abs(r));
  return out;
}

// ------------------------------------------------------------------ a priori estimates

InequalityReport inequality_monitor(std::span<const TrajectorySample> traj, AprioriBound which, double K,
                                    const ModelParams& params, const DyadicDecomposition& dec) {
  if (traj.size() < 2) throw std::invalid_argument("inequality_monitor needs at least two samples");
  if (!(K >= 0.0)) throw std::invalid_argument("K must be nonnegative");
  const std::size_t n = traj.size();
  const double t0 = traj[0].t, h = (traj[n - 1].t - t0) / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw std::invalid_argument("trajectory times must increase");
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(traj[i].t - (t0 + static_cast<double>(i) * h)) > 1e-9 * h)
      throw std::invalid_argument("inequality_monitor needs uniformly spaced samples");

  const double eps = params.epsilon, c = params.c;
  InequalityReport out;
  out.which = which;
  auto ratio_of = [](double lhs, double rhs) {
    if (lhs == 0.0) return 0.0;
    return rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
  };

  if (which == AprioriBound::apriori_v) {
    const double beta = 0.5 + 2.0 * eps;
    const double sigma = (beta + 1.0 + eps) / 2.0;
    const double onset = (beta + 3.0 * eps) / 2.0;
    const double unc = c - 1.0 - std::pow(K * std::tgamma(1.0 - sigma), 1.0 / (1.0 - sigma));
    const double v0 = besov_norm(traj[0].v, {-3.0 * eps, kInfinity, kInfinity}, dec);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = traj[i].w.sup_norm() + K;
    const auto conv = singular_convolution(f, h, PowerSeriesKernel{{1.0}, {-sigma}, unc});
    double run = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      const double tau = static_cast<double>(i) * h;
      const double lhs = besov_norm(traj[i].v, {beta, kInfinity, kInfinity}, dec);
      const double rhs = std::exp(-unc * tau) / std::pow(tau, onset) * v0 + K * conv[i];
      run = std::max(run, ratio_of(lhs, rhs));
      out.times.push_back(traj[i].t);
      out.running_max.push_back(run);
    }
  } else {
    const double p = params.p;
    const BesovIndex high{1.0 + 4.0 * eps, p, kInfinity};
    const double v0 = besov_norm(traj[0].v, {-3.0 * eps, p, kInfinity}, dec);
    std::vector<double> w_high(n), int_high(n, 0.0), int_cube(n, 0.0), cube(n);
    for (std::size_t i = 0; i < n; ++i) {
      w_high[i] = besov_norm(traj[i].w, high, dec);
      cube[i] = std::pow(traj[i].w.lp_norm(3.0 * p), 3.0 * p);
    }
    for (std::size_t i = 1; i < n; ++i) {
      int_high[i] = int_high[i - 1] + 0.5 * h * (std::pow(w_high[i - 1], p) + std::pow(w_high[i], p));
      int_cube[i] = int_cube[i - 1] + 0.5 * h * (cube[i - 1] + cube[i]);
    }
    const double pref = c * std::pow(K, 7.0);
    double run = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      const double tail = std::pow(int_high[j], 1.0 / p) + std::pow(int_cube[j], 1.0 / p);
      for (std::size_t i = 0; i < j; ++i) {
        const double lhs = (traj[j].w - traj[i].w).lp_norm(p);
        const double gap = static_cast<double>(j - i) * h;
        const double rhs = pref * std::pow(gap, 0.125) * (1.0 + v0 * v0 * v0 + w_high[i] + tail);
        run = std::max(run, ratio_of(lhs, rhs));
      }
      out.times.push_back(traj[j].t);
      out.running_max.push_back(run);
    }
  }
  out.max_ratio = out.running_max.empty() ? 0.0 : out.running_max.back();
  return out;
}

}  // namespace phi4
