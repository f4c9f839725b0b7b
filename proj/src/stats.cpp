#include "likstab/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <numeric>

namespace likstab {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double chi2_cdf(double x, double df) {
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  const std::size_t n = x.size();
  if (n == 0) return r;
  double s = 0.0;
  for (double v : x) s += v;
  r.mean = s / static_cast<double>(n);
  if (n < 2) return r;
  double ss = 0.0;
  for (double v : x) ss += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.se = r.sd / std::sqrt(static_cast<double>(n));
  return r;
}

double batch_means_se(const std::vector<double>& x, int batches) {
  const std::size_t n = x.size();
  const std::size_t per = n / static_cast<std::size_t>(batches);
  if (batches < 2 || per == 0) return mean_se(x).se;
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += x[i];
    means[b] = s / static_cast<double>(per);
  }
  return mean_se(means).se;
}

double ks_statistic_sorted(const std::vector<double>& sorted, const std::vector<double>& f) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - f[i]);
    d = std::max(d, f[i] - static_cast<double>(i) / n);
  }
  return d;
}

double kolmogorov_sf(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

LineFit ols(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& y_se) {
  const std::size_t n = x.size();
  LineFit f;
  if (n < 2) return f;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    rss += e * e;
  }
  double var_resid = n > 2 ? rss / (n - 2) / sxx : 0.0;
  double var_meas = 0.0;
  if (y_se.size() == n) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = (x[i] - mx) / sxx;
      var_meas += w * w * y_se[i] * y_se[i];
    }
  }
  f.slope_se = std::sqrt(std::max(var_resid, var_meas));
  return f;
}

}  // namespace likstab
