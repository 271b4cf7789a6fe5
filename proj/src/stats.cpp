#include "phi4/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace phi4 {

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares needs matching series of length >= 2");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least squares needs two distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

MeanEstimate mean_estimate(std::span<const double> xs) {
  MeanEstimate out;
  out.count = xs.size();
  if (xs.empty()) return out;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  out.mean = m;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    out.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return out;
}

MeanEstimate batch_means(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < batches) throw std::invalid_argument("batch means needs at least 2 batches of one sample");
  const std::size_t len = series.size() / batches;
  const std::size_t skip = series.size() - len * batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    auto batch = series.subspan(skip + b * len, len);
    for (double x : batch) means[b] += x;
    means[b] /= static_cast<double>(len);
  }
  MeanEstimate out = mean_estimate(means);
  out.count = len * batches;
  return out;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // Small lambda: the alternating series converges slowly; use the theta-function dual form.
  if (lambda < 1.18) {
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double acc = 0.0;
    for (int j = 1; j < 50; j += 2) acc += std::pow(y, j * j);
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * acc, 0.0, 1.0);
  }
  double acc = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    acc += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * acc, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("KS test needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

}  // namespace phi4
