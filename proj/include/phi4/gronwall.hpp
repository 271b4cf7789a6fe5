#pragma once

#include <functional>
#include <span>
#include <vector>

namespace phi4 {

/// Kernels k1(s) = e^{-cs} s^{-sigma'} and k2(s) = K0 e^{-cs} s^{-sigma}.
struct GronwallParams {
  double sigma = 0.5;
  double sigma_prime = 0.5;
  double K0 = 1.0;
  double c = 0.0;

  void validate() const;
};

/// Truncation rule shared by every series below.
inline constexpr double kSeriesRelativeTolerance = 1e-16;
inline constexpr int kSeriesMaxTerms = 10000;

/// log of sum_{n>=0} (K0 Gamma(1-sigma))^{n+1} / Gamma((n+1)(1-sigma)) s^{n(1-sigma)}.
double log_kbar2_series(double s, double sigma, double K0);
/// log of sum_{n>=0} (K0 Gamma(1-sigma))^n Gamma(1-sigma') / Gamma(n(1-sigma) + 1 - sigma') s^{n(1-sigma)}.
double log_kbar1_series(double s, double sigma, double sigma_prime, double K0);

struct ResolventKernels {
  double kbar1 = 0.0;
  double kbar2 = 0.0;
  double log_kbar1 = 0.0;
  double log_kbar2 = 0.0;
};

/// Resolvent kernels at s > 0; the log fields stay finite when the values overflow.
ResolventKernels kbar(double s, const GronwallParams& params);

/// (1/s) log of the K0 = 1 k2 series: tends to Gamma(1-sigma)^{1/(1-sigma)} as s grows.
double growth_rate(double s, double sigma);
double growth_rate_limit(double sigma);

/// log of sum_{n>=0} x^{n(1-sigma)} / Gamma(n(1-sigma) + 1), the series bounded by
/// floor(1/(1-sigma) + 1) x e^x for x >= 1.
double log_sandwich_series(double x, double sigma);
double log_sandwich_bound(double x, double sigma);

/// k(u) = e^{-decay u} sum_j coeff_j u^{exponent_j}, every exponent > -1.
struct PowerSeriesKernel {
  std::vector<double> coeff;
  std::vector<double> exponent;
  double decay = 0.0;
};

/// The two resolvent kernels as power series, truncated by the series rule at u = horizon.
PowerSeriesKernel kbar1_kernel(const GronwallParams& params, double horizon);
PowerSeriesKernel kbar2_kernel(const GronwallParams& params, double horizon);

/// int_0^{t_i} k(u) f(t_i - u) du on the uniform grid t_i = i h, for every i.
/// Each power term is integrated exactly on every lag cell against the linear interpolant of
/// e^{-decay u} f(t_i - u), so the singular endpoint costs no accuracy.
std::vector<double> singular_convolution(std::span<const double> f, double h, const PowerSeriesKernel& k);

/// g(t) + int_0^t (kbar2(t-s) g(s) + kbar1(t-s) h(s)) ds at every time of a uniform grid starting
/// at times[0]. Rejects non-uniform grids, mismatched lengths and negative inputs.
std::vector<double> gronwall_apply(std::span<const double> g, std::span<const double> h, std::span<const double> times,
                                   const GronwallParams& params);

struct SplittingConstants {
  double log_c = 0.0;   ///< natural log of c0 K^{30p}
  double c = 0.0;       ///< c0 K^{30p}, +inf when it exceeds 1e300
  double unc = 0.0;     ///< c - (8K)^8
  bool overflow = false;
};

/// c = c0 K^{30p} and unc = c - (8K)^8. Rejects K < 1, c0 <= 0 and odd or nonpositive p.
SplittingConstants splitting_constants(double K, int p, double c0);

}  // namespace phi4
