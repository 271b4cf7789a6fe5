#include "phi4/diagrams.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "phi4/stats.hpp"

namespace phi4 {

void complete_diagrams(DiagramSet& ds, const DyadicDecomposition& dec) {
  const GridPtr& g = dec.grid();
  ds.two = Field(g);
  ds.three = Field(g);
  auto one = ds.one.values();
  auto two = ds.two.values();
  auto three = ds.three.values();
  for (std::size_t i = 0; i < one.size(); ++i) {
    const double x = one[i];
    two[i] = x * x - ds.c1;
    three[i] = x * x * x - 3.0 * ds.c1 * x;
  }
  ds.one_blocks = decompose(ds.one, dec);
  ds.two_blocks = decompose(ds.two, dec);
  ds.twenty_blocks = decompose(ds.twenty, dec);
  ds.thirty_blocks = decompose(ds.thirty, dec);
  ds.thirty_one = resonant(ds.thirty_blocks, ds.one_blocks);
  ds.thirty_two = resonant(ds.thirty_blocks, ds.two_blocks) - (3.0 * ds.c2) * ds.one;
  ds.twenty_two = resonant(ds.twenty_blocks, ds.two_blocks);
  for (auto& x : ds.twenty_two.values()) x -= ds.c2;
}

DiagramSet make_diagrams(Field one, Field twenty, Field thirty, double c1, double c2, double t,
                         const DyadicDecomposition& dec) {
  require_same_grid(one, twenty);
  require_same_grid(one, thirty);
  DiagramSet ds;
  ds.t = t;
  ds.c1 = c1;
  ds.c2 = c2;
  ds.one = std::move(one);
  ds.twenty = std::move(twenty);
  ds.thirty = std::move(thirty);
  complete_diagrams(ds, dec);
  return ds;
}

DiagramSet zero_diagrams(const DyadicDecomposition& dec) {
  const GridPtr& g = dec.grid();
  return make_diagrams(Field(g), Field(g), Field(g), 0.0, 0.0, 0.0, dec);
}

DiagramSet initial_diagrams(double c1, double c2, Rng& rng, const DyadicDecomposition& dec) {
  const GridPtr& g = dec.grid();
  return make_diagrams(ou_stationary_sample(g, rng), Field(g), Field(g), c1, c2, 0.0, dec);
}

DiagramEvolver::DiagramEvolver(const DyadicDecomposition& dec, double dt) : dec_(dec), heat_(*dec.grid(), dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("diagram evolution needs dt > 0");
}

void DiagramEvolver::step(DiagramSet& ds, const Field& unit_noise) const {
  step_to(ds, ou_update(ds.one, heat_.dt(), unit_noise));
}

void DiagramEvolver::step_to(DiagramSet& ds, Field next_one) const {
  ds.twenty = heat_(ds.twenty, ds.two);
  ds.thirty = heat_(ds.thirty, ds.three);
  ds.one = std::move(next_one);
  ds.t += heat_.dt();
  complete_diagrams(ds, dec_);
}

void DiagramEvolver::step(DiagramSet& ds, Rng& rng) const {
  step(ds, sample_noise_increment(dec_.grid(), 1.0, rng));
}

DiagramSet evolve_diagrams(const DiagramSet& ds, double dt, const Field& unit_noise, const DyadicDecomposition& dec) {
  DiagramSet next = ds;
  DiagramEvolver(dec, dt).step(next, unit_noise);
  return next;
}

DiagramSet evolve_diagrams(const DiagramSet& ds, double dt, Rng& rng, const DyadicDecomposition& dec) {
  DiagramSet next = ds;
  DiagramEvolver(dec, dt).step(next, rng);
  return next;
}

namespace {

// Evolves only <1> and <20>, which is all the C2 estimator needs.
struct TwentyChain {
  Field one, twenty;
  double c1;

  Field two() const {
    Field out = one * one;
    for (auto& x : out.values()) x -= c1;
    return out;
  }

  void step(const ExponentialEuler& heat, Rng& rng) {
    twenty = heat(twenty, two());
    one = ou_update(one, heat.dt(), rng);
  }

  double resonant_mean(const DyadicDecomposition& dec) const {
    return resonant(decompose(twenty, dec), decompose(two(), dec)).mean();
  }
};

}  // namespace

C2Estimate estimate_c2(const GridPtr& grid, std::size_t ensemble, double burn_in, double dt, std::uint64_t root_seed,
                       double time_window) {
  if (ensemble < 16) throw std::invalid_argument("estimate_c2 needs an ensemble of at least 16 members");
  if (!(dt > 0.0) || burn_in < 0.0 || time_window < 0.0) throw std::invalid_argument("estimate_c2 needs dt > 0 and nonnegative times");
  DyadicDecomposition dec(grid);
  const ExponentialEuler heat(*grid, dt);
  const double c1 = wick_c1(*grid);
  const auto burn_steps = static_cast<std::size_t>(std::llround(burn_in / dt));
  const auto window_steps = static_cast<std::size_t>(std::llround(time_window / dt));

  std::vector<double> ends;
  std::vector<double> series;
  for (std::size_t m = 0; m < ensemble; ++m) {
    Rng rng = member_rng(root_seed, m);
    TwentyChain chain{ou_stationary_sample(grid, rng), Field(grid), c1};
    for (std::size_t s = 0; s < burn_steps; ++s) chain.step(heat, rng);
    ends.push_back(chain.resonant_mean(dec));
    if (m == 0) {
      for (std::size_t s = 0; s < window_steps; ++s) {
        chain.step(heat, rng);
        series.push_back(chain.resonant_mean(dec));
      }
    }
  }
  C2Estimate out;
  const MeanEstimate e = mean_estimate(ends);
  out.value = e.mean;
  out.stderr_ = e.stderr_;
  out.members = ensemble;
  if (series.size() >= 16) {
    const MeanEstimate b = batch_means(series, 16);
    out.time_average = b.mean;
    out.time_stderr = b.stderr_;
  } else if (!series.empty()) {
    out.time_average = mean_estimate(series).mean;
  }
  return out;
}

std::array<double, 6> table_exponents(double epsilon) {
  return {-0.5 - epsilon, -1.0 - epsilon, 0.5 - epsilon, -epsilon, -0.5 - epsilon, -epsilon};
}

RegularityMonitor::RegularityMonitor(double epsilon, const DyadicDecomposition& dec)
    : dec_(dec), alpha_(table_exponents(epsilon)) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) throw std::invalid_argument("regularity margin epsilon must lie in (0, 0.25)");
}

void RegularityMonitor::observe(const DiagramSet& ds) {
  const std::array<const Blocks*, 6> blocks{&ds.one_blocks, &ds.two_blocks, &ds.thirty_blocks, nullptr, nullptr, nullptr};
  const std::array<const Field*, 6> fields{&ds.one, &ds.two, &ds.thirty, &ds.thirty_one, &ds.thirty_two, &ds.twenty_two};
  for (std::size_t i = 0; i < 6; ++i) {
    const BesovIndex idx{alpha_[i], kInfinity, kInfinity};
    const double norm = blocks[i] ? besov_norm(*blocks[i], idx) : besov_norm(*fields[i], idx, dec_);
    sup_[i] = std::max(sup_[i], norm);
  }
  if (last_thirty_ && ds.t > last_t_) {
    holder_ = std::max(holder_, (ds.thirty - *last_thirty_).sup_norm() / std::pow(ds.t - last_t_, 0.125));
  }
  last_thirty_ = ds.thirty;
  last_t_ = ds.t;
  ++count_;
}

std::vector<RegularityRow> RegularityMonitor::rows() const {
  std::vector<RegularityRow> out;
  for (std::size_t i = 0; i < 6; ++i) out.push_back({kDiagramTags[i], alpha_[i], sup_[i]});
  return out;
}

double RegularityMonitor::bound() const { return *std::max_element(sup_.begin(), sup_.end()); }

std::vector<RegularityRow> regularity_report(std::span<const DiagramSet> trajectory, double epsilon,
                                             const DyadicDecomposition& dec) {
  if (trajectory.empty()) throw std::invalid_argument("regularity report needs a nonempty trajectory");
  RegularityMonitor monitor(epsilon, dec);
  for (const DiagramSet& ds : trajectory) monitor.observe(ds);
  return monitor.rows();
}

std::vector<CachedConstants> read_constants(const std::string& path) {
  std::ifstream in(path);
  std::vector<CachedConstants> out;
  if (!in) return out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    CachedConstants c;
    if (!(ss >> c.n >> c.d >> c.c1 >> c.c2 >> c.stderr_c2 >> c.root_seed))
      throw std::runtime_error(fmt::format("{}:{}: malformed constants line", path, lineno));
    out.push_back(c);
  }
  return out;
}

void store_constants(const std::string& path, const CachedConstants& entry) {
  auto all = read_constants(path);
  std::erase_if(all, [&](const CachedConstants& c) { return c.n == entry.n && c.d == entry.d && c.root_seed == entry.root_seed; });
  all.push_back(entry);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write constants file " + path);
  for (const auto& c : all) out << fmt::format("{} {} {:.17g} {:.17g} {:.17g} {}\n", c.n, c.d, c.c1, c.c2, c.stderr_c2, c.root_seed);
}

std::optional<CachedConstants> lookup_constants(const std::string& path, int n, int d, std::uint64_t root_seed) {
  for (const auto& c : read_constants(path))
    if (c.n == n && c.d == d && c.root_seed == root_seed) return c;
  return std::nullopt;
}

}  // namespace phi4
