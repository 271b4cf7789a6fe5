#include "phi4/gronwall.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace phi4 {

void GronwallParams::validate() const {
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument(fmt::format("sigma must lie in (0,1), got {}", sigma));
  if (!(sigma_prime > 0.0 && sigma_prime < 1.0))
    throw std::invalid_argument(fmt::format("sigma' must lie in (0,1), got {}", sigma_prime));
  if (!(K0 > 0.0) || !std::isfinite(K0)) throw std::invalid_argument(fmt::format("K0 must be positive, got {}", K0));
  if (!std::isfinite(c)) throw std::invalid_argument("c must be finite");
}

namespace {

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log sum_{n>=0} exp(a + n b - lgamma(n q + r)). The terms are log-concave in n, so the sum
// starts at the peak and walks outward on both sides until a term drops below the relative
// tolerance. Past s ~ 10 the peak sits at n ~ s Gamma(1-sigma)^{1/(1-sigma)} / (1-sigma), far
// beyond any term cap, and its width grows like sqrt(n); when the bulk is wider than 32 terms
// and clear of n = 0 it is summed with a stride of width/16, where the trapezoid rule on the
// smooth bell is exact to rounding.
double log_gamma_series(double a, double b, double q, double r) {
  const double log_tol = std::log(kSeriesRelativeTolerance);
  auto term = [&](double n) { return a + n * b - std::lgamma(n * q + r); };
  // psi(x) = b / q locates the peak; psi(x) ~ log(x - 1/2) is enough to start a local search.
  double n0 = std::floor(std::max(0.0, (std::exp(std::min(b / q, 700.0)) + 0.5 - r) / q));
  for (int i = 0; i < kSeriesMaxTerms && term(n0 + 1.0) > term(n0); ++i) n0 += 1.0;
  for (int i = 0; i < kSeriesMaxTerms && n0 > 0.0 && term(n0 - 1.0) > term(n0); ++i) n0 -= 1.0;
  const double x = n0 * q + r;
  const double width = 1.0 / (q * std::sqrt(1.0 / x + 0.5 / (x * x)));
  const double h = (width > 32.0 && n0 > 12.0 * width) ? std::floor(width / 16.0) : 1.0;

  double total = term(n0);
  for (int i = 1; i < kSeriesMaxTerms; ++i) {
    const double t = term(n0 + i * h);
    total = log_add(total, t);
    if (t < total + log_tol) break;
  }
  for (int i = 1; i < kSeriesMaxTerms && n0 - i * h >= 0.0; ++i) {
    const double t = term(n0 - i * h);
    total = log_add(total, t);
    if (t < total + log_tol) break;
  }
  return total + std::log(h);
}

}  // namespace

double log_kbar2_series(double s, double sigma, double K0) {
  if (!(s > 0.0)) throw std::invalid_argument("kernel series needs s > 0");
  const double q = 1.0 - sigma;
  const double lk = std::log(K0) + std::lgamma(q);
  return log_gamma_series(lk, lk + q * std::log(s), q, q);
}

double log_kbar1_series(double s, double sigma, double sigma_prime, double K0) {
  if (!(s > 0.0)) throw std::invalid_argument("kernel series needs s > 0");
  const double q = 1.0 - sigma;
  const double lk = std::log(K0) + std::lgamma(q);
  return log_gamma_series(std::lgamma(1.0 - sigma_prime), lk + q * std::log(s), q, 1.0 - sigma_prime);
}

ResolventKernels kbar(double s, const GronwallParams& params) {
  params.validate();
  if (!(s > 0.0)) throw std::invalid_argument(fmt::format("kbar needs s > 0, got {}", s));
  ResolventKernels out;
  const double ls = std::log(s);
  out.log_kbar1 = -params.c * s - params.sigma_prime * ls + log_kbar1_series(s, params.sigma, params.sigma_prime, params.K0);
  out.log_kbar2 = -params.c * s - params.sigma * ls + log_kbar2_series(s, params.sigma, params.K0);
  out.kbar1 = std::exp(out.log_kbar1);
  out.kbar2 = std::exp(out.log_kbar2);
  return out;
}

double growth_rate(double s, double sigma) { return log_kbar2_series(s, sigma, 1.0) / s; }

double growth_rate_limit(double sigma) { return std::pow(std::tgamma(1.0 - sigma), 1.0 / (1.0 - sigma)); }

double log_sandwich_series(double x, double sigma) {
  if (!(x > 0.0)) throw std::invalid_argument("sandwich series needs x > 0");
  const double q = 1.0 - sigma;
  return log_gamma_series(0.0, q * std::log(x), q, 1.0);
}

double log_sandwich_bound(double x, double sigma) {
  return std::log(std::floor(1.0 / (1.0 - sigma) + 1.0)) + std::log(x) + x;
}

namespace {

// Terms exp(a + n b - lgamma(n q + r)) u^{n q + shift}, kept until the series rule stops at u = horizon.
PowerSeriesKernel gamma_series_kernel(double a, double lb, double q, double r, double shift, double decay,
                                      double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("kernel horizon must be positive");
  const double log_tol = std::log(kSeriesRelativeTolerance);
  PowerSeriesKernel k;
  k.decay = decay;
  double total = -std::numeric_limits<double>::infinity();
  double prev = total;
  for (int n = 0; n < kSeriesMaxTerms; ++n) {
    const double log_coeff = a + n * lb - std::lgamma(n * q + r);
    k.coeff.push_back(std::exp(log_coeff));
    k.exponent.push_back(n * q + shift);
    const double term = log_coeff + n * q * std::log(horizon);
    total = log_add(total, term);
    if (n > 0 && term < prev && term < total + log_tol) break;
    prev = term;
  }
  return k;
}

}  // namespace

PowerSeriesKernel kbar1_kernel(const GronwallParams& params, double horizon) {
  params.validate();
  const double q = 1.0 - params.sigma;
  const double lk = std::log(params.K0) + std::lgamma(q);
  return gamma_series_kernel(std::lgamma(1.0 - params.sigma_prime), lk, q, 1.0 - params.sigma_prime, -params.sigma_prime,
                             params.c, horizon);
}

PowerSeriesKernel kbar2_kernel(const GronwallParams& params, double horizon) {
  params.validate();
  const double q = 1.0 - params.sigma;
  const double lk = std::log(params.K0) + std::lgamma(q);
  return gamma_series_kernel(lk, lk, q, q, -params.sigma, params.c, horizon);
}

std::vector<double> singular_convolution(std::span<const double> f, double h, const PowerSeriesKernel& k) {
  if (!(h > 0.0)) throw std::invalid_argument("convolution needs a positive step");
  if (k.coeff.size() != k.exponent.size()) throw std::invalid_argument("kernel coefficient and exponent lists differ");
  const std::size_t n = f.size();
  // lo[m], hi[m]: weights of the interpolant's end values on the lag cell [m h, (m+1) h].
  std::vector<double> lo(n, 0.0), hi(n, 0.0);
  for (std::size_t j = 0; j < k.coeff.size(); ++j) {
    const double beta = k.exponent[j];
    if (!(beta > -1.0)) throw std::invalid_argument("kernel exponents must exceed -1");
    const double a = beta + 1.0, b = beta + 2.0;
    const double scale = k.coeff[j] * std::pow(h, a);
    for (std::size_t m = 0; m + 1 < n; ++m) {
      const double x0 = static_cast<double>(m), x1 = x0 + 1.0;
      const double i0 = (std::pow(x1, a) - std::pow(x0, a)) / a;
      const double i1 = (std::pow(x1, b) - std::pow(x0, b)) / b - x0 * i0;
      lo[m] += (i0 - i1) * scale;
      hi[m] += i1 * scale;
    }
  }
  std::vector<double> damp(n);
  for (std::size_t m = 0; m < n; ++m) damp[m] = std::exp(-k.decay * m * h);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < i; ++m) acc += lo[m] * damp[m] * f[i - m] + hi[m] * damp[m + 1] * f[i - m - 1];
    out[i] = acc;
  }
  return out;
}

std::vector<double> gronwall_apply(std::span<const double> g, std::span<const double> h, std::span<const double> times,
                                   const GronwallParams& params) {
  params.validate();
  const std::size_t n = times.size();
  if (g.size() != n || h.size() != n) throw std::invalid_argument("g, h and times must have equal lengths");
  if (n < 2) throw std::invalid_argument("gronwall_apply needs at least two times");
  const double step = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
  if (!(step > 0.0)) throw std::invalid_argument("times must increase");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(times[i] - (times[0] + i * step)) > 1e-9 * step) throw std::invalid_argument("time grid must be uniform");
    if (!(g[i] >= 0.0) || !(h[i] >= 0.0)) throw std::invalid_argument("g and h must be nonnegative");
  }
  const double horizon = times[n - 1] - times[0];
  const auto cg = singular_convolution(g, step, kbar2_kernel(params, horizon));
  const auto ch = singular_convolution(h, step, kbar1_kernel(params, horizon));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = g[i] + cg[i] + ch[i];
  return out;
}

SplittingConstants splitting_constants(double K, int p, double c0) {
  if (!(K >= 1.0)) throw std::invalid_argument(fmt::format("K must be >= 1, got {}", K));
  if (!(c0 > 0.0)) throw std::invalid_argument(fmt::format("c0 must be positive, got {}", c0));
  if (p <= 0 || p % 2 != 0) throw std::invalid_argument(fmt::format("p must be a positive even integer, got {}", p));
  SplittingConstants out;
  out.log_c = std::log(c0) + 30.0 * p * std::log(K);
  out.overflow = out.log_c > std::log(1e300);
  out.c = out.overflow ? std::numeric_limits<double>::infinity() : c0 * std::pow(K, 30 * p);
  out.unc = out.c - std::pow(8.0 * K, 8);
  return out;
}

}  // namespace phi4
