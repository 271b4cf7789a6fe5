#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phi4/besov.hpp"
#include "phi4/diagrams.hpp"

namespace phi4 {

enum class Formulation { direct, dpd2, paracontrolled };

std::string to_string(Formulation f);
/// Accepts "direct", "dpd2", "paracontrolled"; throws std::invalid_argument otherwise.
Formulation parse_formulation(std::string_view name);

/// Semigroup used for the auxiliary field z inside com1.
/// massive: z follows e^{t(Delta - c)}, so z == v and com1 v o <2> reproduces v o <2> exactly.
/// massless: z follows e^{t Delta}, the literal reading with the unsplit heat kernel.
enum class Com1Kernel { massive, massless };

std::string to_string(Com1Kernel k);
Com1Kernel parse_com1_kernel(std::string_view name);

struct ModelParams {
  double m = 0.0;
  double c = 1.0;
  double epsilon = 1e-3;
  int p = 24;
  Formulation formulation = Formulation::paracontrolled;
  /// +1 for the dissipative cube -X^3, -1 for the blow-up control +X^3.
  int sign = 1;
  Com1Kernel com1 = Com1Kernel::massive;

  /// Throws std::invalid_argument unless p is even and >= 24, epsilon in (0, 1e-3],
  /// c >= 0 and finite, sign is +1 or -1.
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

/// Values whose magnitude exceeds this, or which are not finite, mark a blown-up trajectory.
inline constexpr double kBlowupThreshold = 1e12;
bool blown_up(const Field& f);

/// m + 3 c1 - 9 c2.
double renormalized_mass(double m, double c1, double c2);

/// Coefficients of P(u) = a0 + a1 u + a2 u^2.
/// a0 carries an extra <1> because <1> is the massive OU field: (d/dt - Delta)<1> = xi - <1>.
struct Coefficients {
  Field a0, a1, a2;
};

Coefficients build_coefficients(const DiagramSet& ds, double m, const DyadicDecomposition& dec);

/// State of the (v, w) system. X = <1> - <30> + v + w.
struct SolverState {
  double t = 0.0;
  Field v, w, z;
  std::shared_ptr<const DiagramSet> diagrams;
  ModelParams params;
  /// With the massless kernel z is only meaningful when carried along since t = 0; the massive
  /// kernel keeps z equal to v, so any start time is valid.
  bool from_zero = true;
  bool blown_up = false;
};

/// State at t = ds.t with z = v0. Rejects fields on different grids and invalid params.
SolverState make_state(Field v0, Field w0, std::shared_ptr<const DiagramSet> ds, const ModelParams& params);

/// -3 (v + w - <30>) < <2>.
Field rhs_F(const Field& v, const Field& w, const DiagramSet& ds, const DyadicDecomposition& dec);
/// z + 3 (v + w - <30>) < <20>. Rejects a state that was not started at t = 0.
Field com1(const SolverState& s, const DyadicDecomposition& dec);
/// [<, o](-3 (v + w - <30>), <20>, <2>).
Field com2(const SolverState& s, const DyadicDecomposition& dec);
/// G assembled term by term: both commutators plus the Bony split.
Field rhs_G(const SolverState& s, const Coefficients& coeffs, const DyadicDecomposition& dec);

struct ForcingPair {
  Field F, G;
};

/// F and G from two decompositions only. Expanding com2 gives
/// -3 com - 3 w o <2> = -3 (z + w) o <2> - 9 Z (<22'> + c2) with Z = v + w - <30>,
/// so the result equals (rhs_F, rhs_G) up to rounding.
ForcingPair paracontrolled_forcing(const SolverState& s, const Coefficients& coeffs, const DyadicDecomposition& dec);

/// Exponential-Euler stepping of the (v, w, z) system with cached multipliers.
/// Diagrams and coefficients are supplied by the caller so that several states
/// (different c, initial data) can share one diagram trajectory.
class ParacontrolledStepper {
 public:
  ParacontrolledStepper(const DyadicDecomposition& dec, const ModelParams& params, double dt);

  /// Moves s from s.diagrams->t to next->t. `coeffs` must come from *s.diagrams.
  /// When `forcing` is given it receives the (F, G) used for the step.
  /// A blown-up state is left untouched apart from its diagrams and time.
  void advance(SolverState& s, const Coefficients& coeffs, std::shared_ptr<const DiagramSet> next,
               ForcingPair* forcing = nullptr) const;

  double dt() const { return v_step_.dt(); }

 private:
  const DyadicDecomposition& dec_;
  ExponentialEuler v_step_;
  ExponentialEuler w_step_;
  ExponentialEuler z_step_;
  double c_;
};

/// One step including the diagram update driven by `unit_noise` (a dt = 1 increment).
SolverState step_paracontrolled(const SolverState& s, double dt, const Field& unit_noise, const DyadicDecomposition& dec);
SolverState step_paracontrolled(const SolverState& s, double dt, Rng& rng, const DyadicDecomposition& dec);

/// <1> - <30> + v + w.
Field reconstruct_x(const SolverState& s);

/// Remainder Y = X - <1> of the direct or Da Prato-Debussche formulation.
struct RemainderState {
  double t = 0.0;
  Field y;
  bool blown_up = false;
};

/// Direct renormalized equation dX = (Delta X - sign X^3 + m_delta X) dt + dW, written for
/// Y = X - <1> so that the noise enters exactly as in the paracontrolled run:
/// (d/dt - Delta) Y = -sign X^3 + m_delta X + <1>.
class DirectStepper {
 public:
  DirectStepper(const GridPtr& grid, const ModelParams& params, double dt);
  /// `one` is <1> at the start of the step; c1, c2 are its Wick constants.
  void advance(RemainderState& s, const Field& one, double c1, double c2) const;
  double dt() const { return step_.dt(); }

 private:
  ExponentialEuler step_;
  double m_;
  int sign_;
};

/// (d/dt - Delta) Y = -sign (Y^3 + 3 Y^2 <1> + 3 Y <2> + <3>) + m (<1> + Y) + <1>, d = 2 only.
/// X = <1> + Y then solves the direct equation with mass m + 3 c1.
class Dpd2Stepper {
 public:
  Dpd2Stepper(const GridPtr& grid, const ModelParams& params, double dt);
  void advance(RemainderState& s, const Field& one, double c1) const;
  double dt() const { return step_.dt(); }

 private:
  ExponentialEuler step_;
  double m_;
  int sign_;
};

/// X-level single steps: `now` and `next` are the diagram slices at the two ends of the step.
Field step_direct(const Field& x, double dt, const DiagramSet& now, const DiagramSet& next, const ModelParams& params);
Field step_dpd2(const Field& x, double dt, const DiagramSet& now, const DiagramSet& next, const ModelParams& params);

/// One stored time slice of a trajectory. `g_tilde` = G + w^3 is only needed by the energy balance.
struct TrajectorySample {
  double t = 0.0;
  Field v, w, g_tilde;
};

/// The six components of the solution-space norm over a stored trajectory:
/// sup ||v||_{B^{-3/5}}, sup t^{3/5} ||v||_{B^{1/2+2eps}}, sup s^{1/2} ||v(t)-v(s)||_inf / |t-s|^{1/8},
/// and the w analogues with t^{17/20} and B^{1+2eps}. All Besov indices use p = q = inf.
/// The Hoelder suprema run over every stored pair s < t.
std::array<double, 6> xnorm_diagnostics(std::span<const TrajectorySample> trajectory, double epsilon,
                                        const DyadicDecomposition& dec);

/// How a step of the testing identity is discretized.
/// left_rate: (Phi(w_{i+1}) - Phi(w_i)) / dt - D(w_i), the defect of the explicit step, first order in dt.
/// trapezoid: Phi(w_{i+1}) - Phi(w_i) - dt (D(w_i) + D(w_{i+1})) / 2, a per-step energy mismatch.
enum class EnergyRule { left_rate, trapezoid };

/// Per-step residual of the testing identity for w against w^{3p-3}, with
/// Phi = ||w||_{3p-2}^{3p-2} / (3p-2) and D = <Delta w - w^3 + g_tilde + c v, w^{3p-3}>.
/// The dissipation enters as -<Delta w, w^{3p-3}>, which equals (3p-3) int |grad w|^2 w^{3p-4}
/// in the continuum and is the exact discrete counterpart for the spectral Laplacian.
/// Rejects odd p, p < 2, and fewer than two samples.
std::vector<double> energy_balance_residual(std::span<const TrajectorySample> trajectory, int p, double c,
                                           EnergyRule rule = EnergyRule::left_rate);

/// (3p-3) int |grad w|^2 w^{3p-4}, gradient by spectral differentiation.
double gradient_dissipation(const Field& w, int p);

}  // namespace phi4
