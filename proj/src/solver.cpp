#include "phi4/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phi4 {

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::direct: return "direct";
    case Formulation::dpd2: return "dpd2";
    case Formulation::paracontrolled: return "paracontrolled";
  }
  return "?";
}

Formulation parse_formulation(std::string_view name) {
  if (name == "direct") return Formulation::direct;
  if (name == "dpd2") return Formulation::dpd2;
  if (name == "paracontrolled") return Formulation::paracontrolled;
  throw std::invalid_argument(fmt::format("unknown formulation '{}'", name));
}

std::string to_string(Com1Kernel k) { return k == Com1Kernel::massive ? "massive" : "massless"; }

Com1Kernel parse_com1_kernel(std::string_view name) {
  if (name == "massive") return Com1Kernel::massive;
  if (name == "massless") return Com1Kernel::massless;
  throw std::invalid_argument(fmt::format("unknown com1 kernel '{}'", name));
}

void ModelParams::validate() const {
  if (p < 24 || p % 2 != 0) throw std::invalid_argument(fmt::format("p must be an even integer >= 24, got {}", p));
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw std::invalid_argument(fmt::format("epsilon must lie in (0, 1e-3], got {}", epsilon));
  if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument(fmt::format("c must be finite and >= 0, got {}", c));
  if (!std::isfinite(m)) throw std::invalid_argument("m must be finite");
  if (sign != 1 && sign != -1) throw std::invalid_argument(fmt::format("sign must be +1 or -1, got {}", sign));
}

bool blown_up(const Field& f) { return !f.bounded_by(kBlowupThreshold); }

double renormalized_mass(double m, double c1, double c2) { return m + 3.0 * c1 - 9.0 * c2; }

Coefficients build_coefficients(const DiagramSet& ds, double m, const DyadicDecomposition& dec) {
  const Field& one = ds.one;
  const Field& th = ds.thirty;
  const Field th2 = th * th;
  const Blocks th2_blocks = decompose(th2, dec);

  // <1> o (<30> < <30>) expanded as <30> <31'> + [<, o](<30>, <30>, <1>).
  const Field bracket = non_resonant(ds.one_blocks, th2_blocks) +
                        resonant(ds.one_blocks, decompose(resonant(ds.thirty_blocks, ds.thirty_blocks), dec)) +
                        2.0 * (th * ds.thirty_one) + 2.0 * commutator_lt_res(th, ds.thirty_blocks, ds.one_blocks, dec);

  Coefficients out;
  out.a0 = m * (one - th) + th2 * th - 3.0 * bracket - 9.0 * (th * ds.twenty_two) + 3.0 * ds.thirty_two + one;
  out.a1 = 6.0 * (non_resonant(ds.thirty_blocks, ds.one_blocks) + ds.thirty_one) - 3.0 * th2 + 9.0 * ds.twenty_two;
  for (auto& x : out.a1.values()) x += m;
  out.a2 = 3.0 * (th - one);
  return out;
}

SolverState make_state(Field v0, Field w0, std::shared_ptr<const DiagramSet> ds, const ModelParams& params) {
  params.validate();
  if (!ds) throw std::invalid_argument("solver state needs a diagram set");
  require_same_grid(v0, w0);
  require_same_grid(v0, ds->one);
  SolverState s;
  s.t = ds->t;
  s.z = v0;
  s.v = std::move(v0);
  s.w = std::move(w0);
  s.diagrams = std::move(ds);
  s.params = params;
  s.from_zero = s.t == 0.0 || params.com1 == Com1Kernel::massive;
  return s;
}

namespace {

Field remainder_z(const Field& v, const Field& w, const DiagramSet& ds) { return v + w - ds.thirty; }

Field polynomial(const Coefficients& k, const Field& u) { return k.a0 + k.a1 * u + k.a2 * (u * u); }

Field cube(const Field& u) { return u * u * u; }

}  // namespace

Field rhs_F(const Field& v, const Field& w, const DiagramSet& ds, const DyadicDecomposition& dec) {
  return -3.0 * para_lt(decompose(remainder_z(v, w, ds), dec), ds.two_blocks);
}

Field com1(const SolverState& s, const DyadicDecomposition& dec) {
  if (!s.from_zero) throw std::logic_error("com1 needs the auxiliary field carried from t = 0");
  const DiagramSet& ds = *s.diagrams;
  return s.z + 3.0 * para_lt(decompose(remainder_z(s.v, s.w, ds), dec), ds.twenty_blocks);
}

Field com2(const SolverState& s, const DyadicDecomposition& dec) {
  const DiagramSet& ds = *s.diagrams;
  return commutator_lt_res(-3.0 * remainder_z(s.v, s.w, ds), ds.twenty_blocks, ds.two_blocks, dec);
}

Field rhs_G(const SolverState& s, const Coefficients& coeffs, const DyadicDecomposition& dec) {
  const DiagramSet& ds = *s.diagrams;
  const Field u = s.v + s.w;
  const Field com = resonant(decompose(com1(s, dec), dec), ds.two_blocks) + com2(s, dec);
  const Field w_res = resonant(decompose(s.w, dec), ds.two_blocks);
  const Field gt = para_lt(ds.two_blocks, decompose(remainder_z(s.v, s.w, ds), dec));
  return -cube(u) - 3.0 * com - 3.0 * w_res - 3.0 * gt + polynomial(coeffs, u);
}

ForcingPair paracontrolled_forcing(const SolverState& s, const Coefficients& coeffs, const DyadicDecomposition& dec) {
  if (!s.from_zero) throw std::logic_error("com1 needs the auxiliary field carried from t = 0");
  const DiagramSet& ds = *s.diagrams;
  const Field z = remainder_z(s.v, s.w, ds);
  const Blocks zb = decompose(z, dec);
  const Field lt = para_lt(zb, ds.two_blocks);
  const Field gt = para_lt(ds.two_blocks, zb);
  const Field res = resonant(decompose(s.z + s.w, dec), ds.two_blocks);

  ForcingPair out{-3.0 * lt, Field(dec.grid())};
  auto G = out.G.values();
  auto v = s.v.values(), w = s.w.values(), zv = z.values(), r = res.values(), g = gt.values();
  auto a0 = coeffs.a0.values(), a1 = coeffs.a1.values(), a2 = coeffs.a2.values(), r22 = ds.twenty_two.values();
  for (std::size_t i = 0; i < G.size(); ++i) {
    const double u = v[i] + w[i];
    G[i] = -u * u * u - 3.0 * r[i] - 9.0 * zv[i] * (r22[i] + ds.c2) - 3.0 * g[i] + a0[i] + a1[i] * u + a2[i] * u * u;
  }
  return out;
}

ParacontrolledStepper::ParacontrolledStepper(const DyadicDecomposition& dec, const ModelParams& params, double dt)
    : dec_(dec),
      v_step_(*dec.grid(), dt, params.c),
      w_step_(*dec.grid(), dt),
      z_step_(*dec.grid(), dt, params.com1 == Com1Kernel::massive ? params.c : 0.0),
      c_(params.c) {
  params.validate();
  if (params.sign != 1) throw std::invalid_argument("the paracontrolled system is only defined for the dissipative sign");
}

void ParacontrolledStepper::advance(SolverState& s, const Coefficients& coeffs, std::shared_ptr<const DiagramSet> next,
                                    ForcingPair* forcing) const {
  if (!next) throw std::invalid_argument("paracontrolled step needs the next diagram slice");
  if (!s.blown_up) {
    ForcingPair fg = paracontrolled_forcing(s, coeffs, dec_);
    Field v = v_step_(s.v, fg.F);
    s.w = w_step_(s.w, fg.G + c_ * s.v);
    s.z = z_step_(s.z, fg.F);
    s.v = std::move(v);
    s.blown_up = blown_up(s.v) || blown_up(s.w);
    if (forcing) *forcing = std::move(fg);
  }
  s.t += dt();
  s.diagrams = std::move(next);
}

SolverState step_paracontrolled(const SolverState& s, double dt, const Field& unit_noise, const DyadicDecomposition& dec) {
  const ParacontrolledStepper stepper(dec, s.params, dt);
  const Coefficients coeffs = build_coefficients(*s.diagrams, s.params.m, dec);
  auto next = std::make_shared<DiagramSet>(*s.diagrams);
  DiagramEvolver(dec, dt).step(*next, unit_noise);
  SolverState out = s;
  stepper.advance(out, coeffs, std::move(next));
  return out;
}

SolverState step_paracontrolled(const SolverState& s, double dt, Rng& rng, const DyadicDecomposition& dec) {
  if (!(dt > 0.0)) throw std::invalid_argument("step needs dt > 0");
  return step_paracontrolled(s, dt, sample_noise_increment(dec.grid(), 1.0, rng), dec);
}

Field reconstruct_x(const SolverState& s) { return s.diagrams->one - s.diagrams->thirty + s.v + s.w; }

DirectStepper::DirectStepper(const GridPtr& grid, const ModelParams& params, double dt)
    : step_(*grid, dt), m_(params.m), sign_(params.sign) {
  params.validate();
}

void DirectStepper::advance(RemainderState& s, const Field& one, double c1, double c2) const {
  if (!s.blown_up) {
    const double md = renormalized_mass(m_, c1, c2);
    Field source(one.grid());
    auto src = source.values();
    std::span<const double> y = s.y.values(), o = one.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double x = o[i] + y[i];
      src[i] = -sign_ * x * x * x + md * x + o[i];
    }
    s.y = step_(s.y, source);
    s.blown_up = blown_up(s.y);
  }
  s.t += dt();
}

Dpd2Stepper::Dpd2Stepper(const GridPtr& grid, const ModelParams& params, double dt)
    : step_(*grid, dt), m_(params.m), sign_(params.sign) {
  params.validate();
  if (grid->dim() != 2) throw std::invalid_argument("the Da Prato-Debussche formulation is implemented for d = 2 only");
}

void Dpd2Stepper::advance(RemainderState& s, const Field& one, double c1) const {
  if (!s.blown_up) {
    Field source(one.grid());
    auto src = source.values();
    std::span<const double> yv = s.y.values(), o = one.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double y = yv[i], x1 = o[i];
      const double two = x1 * x1 - c1;
      const double three = x1 * x1 * x1 - 3.0 * c1 * x1;
      src[i] = -sign_ * (y * y * y + 3.0 * y * y * x1 + 3.0 * y * two + three) + m_ * (x1 + y) + x1;
    }
    s.y = step_(s.y, source);
    s.blown_up = blown_up(s.y);
  }
  s.t += dt();
}

Field step_direct(const Field& x, double dt, const DiagramSet& now, const DiagramSet& next, const ModelParams& params) {
  RemainderState s{now.t, x - now.one, false};
  DirectStepper(x.grid(), params, dt).advance(s, now.one, now.c1, now.c2);
  return next.one + s.y;
}

Field step_dpd2(const Field& x, double dt, const DiagramSet& now, const DiagramSet& next, const ModelParams& params) {
  RemainderState s{now.t, x - now.one, false};
  Dpd2Stepper(x.grid(), params, dt).advance(s, now.one, now.c1);
  return next.one + s.y;
}

std::array<double, 6> xnorm_diagnostics(std::span<const TrajectorySample> trajectory, double epsilon,
                                        const DyadicDecomposition& dec) {
  if (trajectory.empty()) throw std::invalid_argument("xnorm diagnostics need a nonempty trajectory");
  const BesovIndex low{-0.6, kInfinity, kInfinity};
  const BesovIndex v_high{0.5 + 2.0 * epsilon, kInfinity, kInfinity};
  const BesovIndex w_high{1.0 + 2.0 * epsilon, kInfinity, kInfinity};
  std::array<double, 6> out{};
  for (const auto& s : trajectory) {
    const Blocks vb = decompose(s.v, dec);
    const Blocks wb = decompose(s.w, dec);
    out[0] = std::max(out[0], besov_norm(vb, low));
    out[3] = std::max(out[3], besov_norm(wb, low));
    if (s.t > 0.0) {
      out[1] = std::max(out[1], std::pow(s.t, 0.6) * besov_norm(vb, v_high));
      out[4] = std::max(out[4], std::pow(s.t, 0.85) * besov_norm(wb, w_high));
    }
  }
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i];
    if (!(a.t > 0.0)) continue;
    for (std::size_t j = 0; j < trajectory.size(); ++j) {
      const auto& b = trajectory[j];
      if (!(b.t > a.t)) continue;
      const double weight = std::sqrt(a.t) / std::pow(b.t - a.t, 0.125);
      out[2] = std::max(out[2], weight * (b.v - a.v).sup_norm());
      out[5] = std::max(out[5], weight * (b.w - a.w).sup_norm());
    }
  }
  return out;
}

namespace {

struct EnergyTerms {
  double phi = 0.0;   // ||w||_{3p-2}^{3p-2} / (3p-2)
  double rate = 0.0;  // <Delta w - w^3 + g_tilde + c v, w^{3p-3}>
};

EnergyTerms energy_terms(const TrajectorySample& s, int p, double c) {
  const Field lap = laplacian(s.w);
  const double vol = s.w.grid()->cell_volume();
  const int top = 3 * p - 2;
  EnergyTerms e;
  for (std::size_t i = 0; i < s.w.size(); ++i) {
    const double w = s.w[i];
    const double test = std::pow(w, top - 1);
    double drift = lap[i] - w * w * w;
    if (s.g_tilde.size() != 0) drift += s.g_tilde[i];
    if (s.v.size() != 0) drift += c * s.v[i];
    e.phi += w * test;
    e.rate += drift * test;
  }
  e.phi *= vol / top;
  e.rate *= vol;
  return e;
}

}  // namespace

std::vector<double> energy_balance_residual(std::span<const TrajectorySample> trajectory, int p, double c,
                                           EnergyRule rule) {
  if (p < 2 || p % 2 != 0) throw std::invalid_argument(fmt::format("energy balance needs an even p >= 2, got {}", p));
  if (trajectory.size() < 2) throw std::invalid_argument("energy balance needs at least two samples");
  std::vector<double> out;
  out.reserve(trajectory.size() - 1);
  EnergyTerms prev = energy_terms(trajectory[0], p, c);
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const EnergyTerms cur = energy_terms(trajectory[i], p, c);
    const double h = trajectory[i].t - trajectory[i - 1].t;
    if (rule == EnergyRule::left_rate)
      out.push_back((cur.phi - prev.phi) / h - prev.rate);
    else
      out.push_back(cur.phi - prev.phi - 0.5 * h * (prev.rate + cur.rate));
    prev = cur;
  }
  return out;
}

double gradient_dissipation(const Field& w, int p) {
  const GridPtr& g = w.grid();
  Field grad2(g);
  for (int a = 0; a < g->dim(); ++a) {
    const Field da = partial_derivative(w, a);
    grad2 += da * da;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += grad2[i] * std::pow(w[i], 3 * p - 4);
  return (3 * p - 3) * acc * g->cell_volume();
}

}  // namespace phi4
