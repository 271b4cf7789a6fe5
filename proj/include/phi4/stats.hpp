#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace phi4 {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y ~ slope*x + intercept. Needs two distinct x values.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  ///< standard error of the mean
  std::size_t count = 0;
};

/// Sample mean with the unbiased standard error. A single sample has stderr 0.
MeanEstimate mean_estimate(std::span<const double> xs);

/// Splits a correlated series into `batches` contiguous batches (dropping the
/// remainder at the front) and returns the mean with the batch-means standard error.
MeanEstimate batch_means(std::span<const double> series, std::size_t batches);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

}  // namespace phi4
