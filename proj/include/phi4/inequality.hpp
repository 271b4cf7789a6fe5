#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "phi4/besov.hpp"

namespace phi4 {

enum class InequalityKind { heat_smoothing, para_lt, resonant, interpolation, embedding, sobolev };

std::string_view to_string(InequalityKind kind);
/// Throws std::invalid_argument on an unknown tag.
InequalityKind parse_inequality_kind(std::string_view tag);

/// Parameters of one appendix inequality. Unused fields are ignored by a given kind.
///
///   heat_smoothing  ||e^{t Delta} f||_{B^alpha_{p,inf}} <= C t^{(beta-alpha)/2} ||f||_{B^beta_{p,inf}}, alpha >= beta
///   para_lt         ||f < g||_{B^{alpha+beta}_{p,inf}} <= C ||f||_{B^alpha_{inf,inf}} ||g||_{B^beta_{p,inf}}, alpha < 0
///   resonant        ||f o g||_{B^{alpha+beta}_{p,inf}} <= C ||f||_{B^alpha_{inf,inf}} ||g||_{B^beta_{p,inf}}, alpha+beta > 0
///   interpolation   ||f||_{B^a_{p,inf}} <= ||f||^{1-nu}_{B^alpha_{p,inf}} ||f||^{nu}_{B^beta_{p,inf}}, a = (1-nu)alpha + nu beta
///   embedding       ||f||_{B^{alpha - d(1/p - 1/p2)}_{p2,inf}} <= C ||f||_{B^alpha_{p,inf}}, p <= p2
///   sobolev         ||f||_{B^alpha_{p,inf}} <= C ||f||^{1-alpha}_{L^p} ||grad f||^alpha_{L^p}, 0 < alpha < 1, mean-zero f
///
/// heat_smoothing fits log(worst ratio) against log t over t = (alpha-beta) 2^e, e = log2_t_min .. log2_t_max;
/// every other kind fits log2(worst ratio) against the band level K of the sampled fields,
/// so a bounded constant shows up as an exponent near zero.
struct InequalitySpec {
  InequalityKind kind = InequalityKind::heat_smoothing;
  double alpha = 1.0;
  double beta = 0.0;
  double p = kInfinity;
  double p2 = kInfinity;
  double nu = 0.5;
  int d = 1;
  int n = 256;
  int log2_t_min = -18;
  int log2_t_max = -9;
};

struct InequalityFit {
  std::string tag;
  std::string param;
  double exponent = 0.0;
  double worst_constant = 0.0;
  /// Exponent the inequality predicts: (beta-alpha)/2 for heat_smoothing, 0 otherwise.
  double expected_exponent = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
};

/// Samples band-limited random fields and fits the scaling exponent. Rejects zero samples,
/// parameters outside the inequality's range, and sample sets whose right-hand sides all vanish.
InequalityFit fit_inequality_exponent(const InequalitySpec& spec, std::size_t samples, std::uint64_t seed);

/// "tag,param,fitted_exponent,worst_constant,n,seed"
std::string csv_header_inequality();
std::string csv_row(const InequalityFit& fit);

}  // namespace phi4
