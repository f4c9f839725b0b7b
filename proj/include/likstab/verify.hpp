#pragma once

#include "likstab/mc.hpp"

#include <optional>
#include <string>
#include <vector>

namespace likstab {

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

/// Accepted slope region: |slope - claim| <= tol (within), slope <= bound (at_most)
/// or slope > bound (greater_than).
struct SlopeRule {
  enum class Kind { within, at_most, greater_than } kind = Kind::within;
  double claim = -1.0;
  double tol = 0.3;
  double bound = 0.0;

  static SlopeRule within(double claim, double tol = 0.3) { return {Kind::within, claim, tol, 0.0}; }
  static SlopeRule at_most(double bound) { return {Kind::at_most, bound, 0.0, bound}; }
  static SlopeRule greater_than(double bound) { return {Kind::greater_than, bound, 0.0, bound}; }

  bool accepts(double slope) const;
  std::string describe() const;
};

struct SlopeReport {
  std::string name;
  std::vector<int> n_grid;
  std::vector<double> metric;
  std::vector<double> metric_se;
  std::vector<double> quad_error;  // stability experiments only
  std::vector<int> failures;       // failed outer replicates per n
  std::vector<bool> dropped;       // grid point dropped for > 1% failures
  bool slope_defined = false;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  SlopeRule rule;
  Verdict verdict = Verdict::inconclusive;
  std::string note;
};

/// Fits log(metric) on log(n) over the kept grid points and applies `rule`.
/// Inconclusive when fewer than 3 points remain, the smallest-n metric is not
/// above 3 of its standard errors, or a metric is not positive.
SlopeReport finish_slope_report(SlopeReport r);

enum class AgreementMode { cf, bootstrap };
std::string to_string(AgreementMode m);
AgreementMode parse_agreement_mode(const std::string& s);

struct ExperimentConfig {
  ModelSpec model;
  ParamPoint theta0;
  std::vector<int> n_grid{20, 40, 80, 160};
  int outer = 1000;
  PivotKind kind_a = PivotKind::R;
  PivotKind kind_b = PivotKind::WO;
  AgreementMode mode = AgreementMode::cf;
  std::uint64_t seed = 1;
  int threads = 0;
  int B = 2000;                    // bootstrap mode
  std::optional<AdjustmentSpec> adjustment;
  CfOptions cf;
  WecVariant wec = WecVariant::derived;
  std::optional<SlopeRule> rule;   // default: claim from the pair's equivalence on analytic tensors
};

/// Mean |p_A - p_B| over outer datasets simulated at theta0 with psi0 = psi(theta0).
/// Outer replicate i at grid size n uses stream ("order-outer-<n>", i). In cf
/// mode tensors are evaluated at theta_tilde(psi0) of each dataset.
SlopeReport order_of_agreement(const ExperimentConfig& cfg);

/// Claimed slope for a pair: -1 when both equivalence conditions hold on the
/// tensors at theta0 (n = 1), else -0.5.
double claimed_agreement_slope(const Model& model, const ParamPoint& theta0, PivotKind a, PivotKind b,
                               WecVariant wec = WecVariant::derived);

enum class StabilityStatistic { mean, variance };
std::string to_string(StabilityStatistic s);

struct StabilityConfig {
  ModelSpec model;
  ParamPoint theta0{0.0, 1.0};
  std::vector<int> n_grid{10, 20, 40};
  int configs = 200;
  std::vector<PivotKind> kinds{PivotKind::R};
  std::uint64_t seed = 1;
  int threads = 0;
  QuadratureSpec quadrature;
  std::optional<AdjustmentSpec> adjustment;
};

/// Per kind and statistic: SD over configurations a of E[T | a] (or Var[T | a])
/// computed by conditional quadrature. Configuration c at size n comes from
/// stream ("stability-<n>", c). Also reports the pooled unconditional mean.
struct StabilityResult {
  std::vector<SlopeReport> reports;  // kinds x {mean, variance}
  std::vector<std::vector<double>> pooled_mean;  // [kind][n]
};

StabilityResult stability_experiment(const StabilityConfig& cfg);

/// Claimed slope for the stability experiment: -1 for kinds satisfying the
/// stability condition, -0.5 otherwise.
double claimed_stability_slope(PivotKind k);

struct BartlettReport {
  int q = 1;
  int n = 0;
  int reps = 0;
  double mean_before = 0.0;   // mean W / q
  double se_before = 0.0;
  BartlettFactor factor;      // independent stream
  double mean_after = 0.0;    // mean (W / factor) / q
  double se_after = 0.0;      // combined W and factor error
  double ks_before = 0.0, ks_p_before = 1.0;
  double ks_after = 0.0, ks_p_after = 1.0;
  bool adjusted = false;
  bool pass = false;
};

/// W on stream ("bartlett-w", i); the factor on ("bartlett-factor", i) with the same seed.
BartlettReport bartlett_experiment(const Model& model, const ParamPoint& theta0, int n, int reps, std::uint64_t seed,
                                   const std::optional<AdjustmentSpec>& adjustment = std::nullopt, int threads = 0,
                                   int factor_reps = 0);

enum class UniformityStatistic { bootstrap_pivot, unscaled_t1 };
std::string to_string(UniformityStatistic s);

struct UniformityReport {
  PivotKind kind = PivotKind::R;
  UniformityStatistic statistic = UniformityStatistic::bootstrap_pivot;
  int n = 0, outer = 0, B = 0;
  std::vector<double> pvalues;
  double ks = 0.0;
  double ks_p = 1.0;
  double level = 0.01;
  int failures = 0;
  bool pass = false;
};

/// Outer dataset i from stream ("uniformity-outer", i); its bootstrap uses
/// master stream_seed(seed, "uniformity-boot", i). The unscaled_t1 control
/// refers -a_r l_r (no eta^{1/2}) to N(0, 1).
UniformityReport uniformity_experiment(PivotKind kind, const Model& model, const ParamPoint& theta0, int n, int outer,
                                       int B, std::uint64_t seed,
                                       UniformityStatistic statistic = UniformityStatistic::bootstrap_pivot,
                                       int threads = 0);

}  // namespace likstab
