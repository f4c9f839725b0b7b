#pragma once

#include "likstab/pivots.hpp"
#include "likstab/theory.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace likstab {

struct BootstrapOptions {
  int B = 2000;
  std::uint64_t seed = 1;
  int threads = 0;
  Tail tail = Tail::upper;
  std::optional<AdjustmentSpec> adjustment;
};

struct BootstrapResult {
  double p = 0.5;
  double mc_se = 0.0;
  double T_obs = 0.0;
  int B = 0;        // replicates used
  int failed = 0;   // replicates dropped after one retry
  ParamPoint theta_null;  // (psi0, phi_tilde(psi0))
  std::vector<double> T_star;
};

/// Parametric bootstrap at theta_tilde(psi0): p = (#{T* >= T_obs} + 1)/(B + 1)
/// for the upper tail, (#{T* <= T_obs} + 1)/(B + 1) for the lower.
/// Replicate i uses stream ("bootstrap", i).
BootstrapResult bootstrap_pvalue(PivotKind kind, const Model& model, const Dataset& data, double psi0,
                                 const BootstrapOptions& opts = {});

struct BootstrapMoments {
  double mean_star = 0.0;
  double var_star = 1.0;
  int reps = 0;
};

struct StandardizedR {
  double value = 0.0;
  double R_obs = 0.0;
  BootstrapMoments moments;
};

/// (R_obs - mean*) / sqrt(var*) with moments of R over bootstrap replicates at theta_tilde(psi0).
StandardizedR bootstrap_standardized_r(const Model& model, const Dataset& data, double psi0, int B,
                                       std::uint64_t seed, int threads = 0);

/// Simulated W (or Wbar when `adjustment` is set) at theta, testing psi = psi(theta).
/// Replicate i uses stream (label, i).
std::vector<double> simulate_w(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                               const std::string& label, const std::optional<AdjustmentSpec>& adjustment = std::nullopt,
                               int threads = 0);

/// W for one dataset, or Wbar = 2{Mbar(psi_bar) - Mbar(psi0)} when adjusted.
double w_statistic(const Model& model, const Dataset& data, const VectorXd& psi0,
                   const std::optional<AdjustmentSpec>& adjustment = std::nullopt,
                   const std::optional<ParamPoint>& init = std::nullopt);

struct BartlettFactor {
  double factor = 1.0;     // mean W / q
  double omega_hat = 0.0;  // n (factor - 1)
  double mc_se = 0.0;
  int reps = 0;
};

BartlettFactor bartlett_factor(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                               const std::optional<AdjustmentSpec>& adjustment = std::nullopt, int threads = 0);

/// Standardized residuals a_i = (y_i - mu_hat)/sigma_hat of a location-scale sample.
struct AncillaryConfig {
  VectorXd a;

  static AncillaryConfig from_data(const Model& model, const Dataset& data);
  Dataset reconstruct(double mu_hat, double sigma_hat) const;
  int n() const { return static_cast<int>(a.size()); }
};

struct QuadratureSpec {
  int nodes_u = 201;
  int nodes_log_sigma = 201;
  double half_width_se = 6.0;
  double max_boundary_mass = 1e-4;
};

struct Expectation {
  double value = 0.0;
  double quad_error = 0.0;  // |full grid - every-other-node grid| plus a summation round-off bound
};

/// Conditional law of (mu_hat, sigma_hat) given a, tabulated on a trapezoid grid
/// over u = (mu_hat - mu)/sigma_hat and log sigma_hat. Density on that grid:
/// sigma_hat^n prod_i f(sigma_hat (u + a_i) / sigma) (up to constants).
struct ConditionalGrid {
  double mu = 0.0, sigma = 1.0;
  VectorXd u, log_sigma;
  MatrixXd prob;       // full-grid probabilities, rows u, columns log sigma
  MatrixXd prob_half;  // every-other-node grid, zero off its nodes
  double boundary_mass = 0.0;
  bool widened = false;

  double mu_hat(int i, int j) const { return mu + u(i) * sigma_hat(j); }
  double sigma_hat(int j) const { return std::exp(log_sigma(j)); }

  Expectation expectation(const std::function<double(double, double)>& f) const;
  /// For statistics that depend on (mu_hat, sigma_hat) only through u.
  Expectation expectation_of_u(const std::function<double(double)>& g) const;
  VectorXd marginal_u() const;
};

ConditionalGrid conditional_distribution_location_scale(const Model& model, const AncillaryConfig& a,
                                                        const ParamPoint& theta, const QuadratureSpec& spec = {});

}  // namespace likstab
