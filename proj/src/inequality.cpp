#include "phi4/inequality.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "phi4/stats.hpp"

namespace phi4 {

namespace {

constexpr std::array<std::pair<InequalityKind, std::string_view>, 6> kTags{{
    {InequalityKind::heat_smoothing, "heat_smoothing"},
    {InequalityKind::para_lt, "para_lt"},
    {InequalityKind::resonant, "resonant"},
    {InequalityKind::interpolation, "interpolation"},
    {InequalityKind::embedding, "embedding"},
    {InequalityKind::sobolev, "sobolev"},
}};

std::string fmt_index(double p) { return std::isinf(p) ? std::string("inf") : fmt::format("{:g}", p); }

std::string describe(const InequalitySpec& s) {
  switch (s.kind) {
    case InequalityKind::heat_smoothing:
      return fmt::format("alpha={:g};beta={:g};p={};d={}", s.alpha, s.beta, fmt_index(s.p), s.d);
    case InequalityKind::para_lt:
    case InequalityKind::resonant:
      return fmt::format("alpha={:g};beta={:g};p={};d={}", s.alpha, s.beta, fmt_index(s.p), s.d);
    case InequalityKind::interpolation:
      return fmt::format("alpha={:g};beta={:g};nu={:g};p={};d={}", s.alpha, s.beta, s.nu, fmt_index(s.p), s.d);
    case InequalityKind::embedding:
      return fmt::format("alpha={:g};p={};p2={};d={}", s.alpha, fmt_index(s.p), fmt_index(s.p2), s.d);
    case InequalityKind::sobolev:
      return fmt::format("alpha={:g};p={};d={}", s.alpha, fmt_index(s.p), s.d);
  }
  return {};
}

void validate(const InequalitySpec& s) {
  auto bad = [](const char* what) { throw std::invalid_argument(what); };
  if (!(s.p >= 1.0) || !(s.p2 >= 1.0)) bad("integrability exponents must be >= 1");
  switch (s.kind) {
    case InequalityKind::heat_smoothing:
      if (s.alpha < s.beta) bad("heat_smoothing needs alpha >= beta");
      if (s.log2_t_min >= s.log2_t_max) bad("heat_smoothing needs a nonempty t range");
      break;
    case InequalityKind::para_lt:
      if (s.alpha >= 0.0) bad("para_lt needs alpha < 0");
      break;
    case InequalityKind::resonant:
      if (s.alpha + s.beta <= 0.0) bad("resonant needs alpha + beta > 0");
      break;
    case InequalityKind::interpolation:
      if (!(s.nu > 0.0 && s.nu < 1.0)) bad("interpolation needs nu in (0,1)");
      break;
    case InequalityKind::embedding:
      if (s.p > s.p2) bad("embedding needs p <= p2");
      break;
    case InequalityKind::sobolev:
      if (!(s.alpha > 0.0 && s.alpha < 1.0)) bad("sobolev needs alpha in (0,1)");
      break;
  }
}

/// Random real field with spectrum confined to dyadic levels <= top. The variant
/// cycles through white noise, a single block, colored noise, and a single lattice mode.
class FieldSampler {
 public:
  FieldSampler(const DyadicDecomposition& dec, std::uint64_t seed) : dec_(dec), rng_(seed) {}

  Field draw(int top, int variant, bool mean_zero) {
    const GridPtr& g = dec_.grid();
    const std::size_t ns = g->spectral_size();
    std::vector<double> filter(ns, 0.0);
    if (variant % 4 == 3) return single_mode(top, mean_zero);
    for (int k = (variant % 4 == 1 ? top : -1); k <= top; ++k) {
      auto m = dec_.multiplier(k);
      for (std::size_t s = 0; s < ns; ++s) filter[s] += m[s];
    }
    if (variant % 4 == 2) {
      const double slope = std::uniform_real_distribution<double>(-1.0, 2.0)(rng_);
      auto z2 = g->zeta_squared();
      for (std::size_t s = 0; s < ns; ++s) filter[s] *= std::pow(1.0 + z2[s], -0.5 * slope);
    }
    if (mean_zero) filter[0] = 0.0;
    Field white(g);
    for (auto& x : white.values()) x = normal_(rng_);
    return apply_multiplier(white, filter);
  }

 private:
  Field single_mode(int level, bool mean_zero) {
    const GridPtr& g = dec_.grid();
    auto m = dec_.multiplier(level);
    std::vector<std::size_t> candidates;
    for (std::size_t s = 0; s < g->spectral_size(); ++s)
      if (m[s] > 0.5 && !(mean_zero && s == 0)) candidates.push_back(s);
    if (candidates.empty()) return Field(g);
    const auto pick = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng_)];
    const auto k = g->wavevector(pick);
    const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng_);
    return sample_field(g, [&](const std::array<double, 3>& x) {
      double arg = phase;
      for (int a = 0; a < g->dim(); ++a) arg += std::numbers::pi * k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
      return std::cos(arg);
    });
  }

  const DyadicDecomposition& dec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

double gradient_lp(const Field& f, double p) {
  const GridPtr& g = f.grid();
  Field mag(g);
  for (int a = 0; a < g->dim(); ++a) {
    Field da = partial_derivative(f, a);
    mag += da * da;
  }
  for (auto& x : mag.values()) x = std::sqrt(x);
  return mag.lp_norm(p);
}

/// Left and right side of a level-indexed inequality for one sample pair.
std::pair<double, double> sides(const InequalitySpec& s, const Field& f, const Field& h, const DyadicDecomposition& dec) {
  const BesovIndex inf_inf{s.alpha, kInfinity, kInfinity};
  switch (s.kind) {
    case InequalityKind::para_lt: {
      Blocks fb = decompose(f, dec), hb = decompose(h, dec);
      const double lhs = besov_norm(decompose(para_lt(fb, hb), dec), {s.alpha + s.beta, s.p, kInfinity});
      return {lhs, besov_norm(fb, inf_inf) * besov_norm(hb, {s.beta, s.p, kInfinity})};
    }
    case InequalityKind::resonant: {
      Blocks fb = decompose(f, dec), hb = decompose(h, dec);
      const double lhs = besov_norm(decompose(resonant(fb, hb), dec), {s.alpha + s.beta, s.p, kInfinity});
      return {lhs, besov_norm(fb, inf_inf) * besov_norm(hb, {s.beta, s.p, kInfinity})};
    }
    case InequalityKind::interpolation: {
      Blocks fb = decompose(f, dec);
      const double a = (1.0 - s.nu) * s.alpha + s.nu * s.beta;
      const double lhs = besov_norm(fb, {a, s.p, kInfinity});
      const double r0 = besov_norm(fb, {s.alpha, s.p, kInfinity});
      const double r1 = besov_norm(fb, {s.beta, s.p, kInfinity});
      return {lhs, std::pow(r0, 1.0 - s.nu) * std::pow(r1, s.nu)};
    }
    case InequalityKind::embedding: {
      Blocks fb = decompose(f, dec);
      const double inv = [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }(s.p) -
                         [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }(s.p2);
      const double lhs = besov_norm(fb, {s.alpha - s.d * inv, s.p2, kInfinity});
      return {lhs, besov_norm(fb, {s.alpha, s.p, kInfinity})};
    }
    case InequalityKind::sobolev: {
      const double lhs = besov_norm(f, {s.alpha, s.p, kInfinity}, dec);
      return {lhs, std::pow(f.lp_norm(s.p), 1.0 - s.alpha) * std::pow(gradient_lp(f, s.p), s.alpha)};
    }
    case InequalityKind::heat_smoothing:
      break;
  }
  throw std::logic_error("heat_smoothing is not level-indexed");
}

InequalityFit fit_heat(const InequalitySpec& s, std::size_t samples, std::uint64_t seed, InequalityFit fit) {
  DyadicDecomposition dec(make_grid(s.d, s.n));
  FieldSampler sampler(dec, seed);
  const int levels = dec.k_max() + 1;
  std::vector<Field> fields;
  std::vector<double> denom;
  for (std::size_t i = 0; i < samples; ++i) {
    const int level = static_cast<int>(i % static_cast<std::size_t>(levels));
    const int variant = static_cast<int>(i / static_cast<std::size_t>(levels));
    Field f = sampler.draw(level, variant == 0 ? 3 : variant, true);
    const double r = besov_norm(f, {s.beta, s.p, kInfinity}, dec);
    if (r > 0.0) {
      fields.push_back(std::move(f));
      denom.push_back(r);
    }
  }
  if (fields.empty()) throw std::invalid_argument("degenerate sample set: every field vanishes");
  // Axis modes cos(pi j x_1) trace the envelope of the worst ratio without sampling ripple.
  for (int j = 1; j < s.n / 2; ++j) {
    Field f = sample_field(dec.grid(), [j](const std::array<double, 3>& x) { return std::cos(std::numbers::pi * j * x[0]); });
    denom.push_back(besov_norm(f, {s.beta, s.p, kInfinity}, dec));
    fields.push_back(std::move(f));
  }

  std::vector<double> log_t, log_worst;
  const double predicted = 0.5 * (s.beta - s.alpha);
  fit.worst_constant = 0.0;
  // The extremal frequency satisfies |zeta|^2 ~ (alpha-beta)/(2t); scaling t by alpha-beta
  // keeps that band at the same dyadic levels for every exponent gap.
  const double gap = s.alpha > s.beta ? s.alpha - s.beta : 1.0;
  for (int e = s.log2_t_min; e <= s.log2_t_max; ++e) {
    const double t = gap * std::ldexp(1.0, e);
    double worst = 0.0;
    for (std::size_t i = 0; i < fields.size(); ++i)
      worst = std::max(worst, besov_norm(apply_heat_semigroup(fields[i], t), {s.alpha, s.p, kInfinity}, dec) / denom[i]);
    log_t.push_back(std::log(t));
    log_worst.push_back(std::log(worst));
    fit.worst_constant = std::max(fit.worst_constant, worst / std::pow(t, predicted));
  }
  fit.exponent = least_squares(log_t, log_worst).slope;
  fit.expected_exponent = predicted;
  return fit;
}

InequalityFit fit_levels(const InequalitySpec& s, std::size_t samples, std::uint64_t seed, InequalityFit fit) {
  DyadicDecomposition dec(make_grid(s.d, s.n));
  FieldSampler sampler(dec, seed);
  const int levels = dec.k_max() + 1;
  const std::size_t per_level = std::max<std::size_t>(1, samples / static_cast<std::size_t>(levels));
  const bool mean_zero = s.kind == InequalityKind::sobolev;
  std::vector<double> level_axis, log_worst;
  bool any = false;
  fit.worst_constant = 0.0;
  for (int top = 0; top <= dec.k_max(); ++top) {
    double worst = 0.0;
    for (std::size_t i = 0; i < per_level; ++i) {
      const int variant = static_cast<int>(i);
      Field f = sampler.draw(top, variant, mean_zero);
      Field h = sampler.draw(top, variant + 1, mean_zero);
      auto [lhs, rhs] = sides(s, f, h, dec);
      if (rhs > 0.0) {
        worst = std::max(worst, lhs / rhs);
        any = true;
      }
    }
    if (worst > 0.0) {
      level_axis.push_back(top);
      log_worst.push_back(std::log2(worst));
    }
    fit.worst_constant = std::max(fit.worst_constant, worst);
  }
  if (!any) throw std::invalid_argument("degenerate sample set: every right-hand side vanishes");
  fit.exponent = level_axis.size() >= 2 ? least_squares(level_axis, log_worst).slope : 0.0;
  fit.expected_exponent = 0.0;
  return fit;
}

}  // namespace

std::string_view to_string(InequalityKind kind) {
  for (auto& [k, name] : kTags)
    if (k == kind) return name;
  return "unknown";
}

InequalityKind parse_inequality_kind(std::string_view tag) {
  for (auto& [k, name] : kTags)
    if (name == tag) return k;
  throw std::invalid_argument("unknown inequality tag '" + std::string(tag) + "'");
}

InequalityFit fit_inequality_exponent(const InequalitySpec& spec, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("degenerate sample set: zero samples requested");
  validate(spec);
  InequalityFit fit;
  fit.tag = std::string(to_string(spec.kind));
  fit.param = describe(spec);
  fit.n = spec.n;
  fit.seed = seed;
  fit.samples = samples;
  if (spec.kind == InequalityKind::heat_smoothing) return fit_heat(spec, samples, seed, std::move(fit));
  return fit_levels(spec, samples, seed, std::move(fit));
}

std::string csv_header_inequality() { return "tag,param,fitted_exponent,worst_constant,n,seed"; }

std::string csv_row(const InequalityFit& fit) {
  return fmt::format("{},{},{:.10g},{:.10g},{},{}", fit.tag, fit.param, fit.exponent, fit.worst_constant, fit.n, fit.seed);
}

}  // namespace phi4
