#pragma once

#include <vector>

namespace likstab {

double normal_cdf(double x);
double normal_sf(double x);
double chi2_cdf(double x, double df);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
};

/// Sample mean, standard error and standard deviation, summed in index order.
MeanSe mean_se(const std::vector<double>& x);

/// Standard error of the mean from contiguous batch means.
double batch_means_se(const std::vector<double>& x, int batches);

struct KsResult {
  double statistic = 0.0;
  double pvalue = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
/// uses the asymptotic Kolmogorov distribution with the Stephens small-sample
/// correction.
template <class Cdf>
KsResult ks_test(std::vector<double> x, Cdf&& cdf);

double ks_statistic_sorted(const std::vector<double>& sorted, const std::vector<double>& cdf_values);
double kolmogorov_sf(double t);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares y = a + b x. slope_se is the larger of the
/// residual-based standard error and, when `y_se` is given, the measurement
/// error propagated through the slope weights.
LineFit ols(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se = {});

}  // namespace likstab

#include <algorithm>
#include <cmath>

namespace likstab {

template <class Cdf>
KsResult ks_test(std::vector<double> x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  std::vector<double> f(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) f[i] = cdf(x[i]);
  KsResult r;
  r.statistic = ks_statistic_sorted(x, f);
  const double sn = std::sqrt(static_cast<double>(x.size()));
  r.pvalue = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * r.statistic);
  return r;
}

}  // namespace likstab
