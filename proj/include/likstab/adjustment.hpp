#pragma once

#include "likstab/fit.hpp"
#include "likstab/tensors.hpp"

#include <functional>
#include <optional>
#include <string>

namespace likstab {

/// Log prior density (up to a constant) and its gradient.
struct Prior {
  std::string name;
  std::function<double(const VectorXd&)> log_density;
  std::function<VectorXd(const VectorXd&)> log_grad;
};

Prior flat_prior();
/// pi(theta) proportional to 1/theta_k, for a scale-type nuisance component k.
Prior inverse_scale_prior(int index = 1);
/// "flat" or "inverse-scale".
Prior prior_by_name(const std::string& name);

enum class AdjustmentKind { none, tierney_kadane };

struct AdjustmentSpec {
  AdjustmentKind kind = AdjustmentKind::none;
  std::optional<Prior> prior;  // absent means flat

  static AdjustmentSpec tierney_kadane(std::optional<Prior> prior = std::nullopt) {
    return {AdjustmentKind::tierney_kadane, std::move(prior)};
  }
  std::string prior_name() const { return prior ? prior->name : "flat"; }
};

enum class Beta1Source { analytic_rho, analytic_tk, mc_estimate };
std::string to_string(Beta1Source s);

struct AdjustmentInfo {
  double beta1 = 0.0;
  Beta1Source source = Beta1Source::analytic_tk;
  double mc_se = 0.0;  // mc_estimate only
};

struct AdjustedFit {
  double psi_bar = 0.0;
  double adjusted_profile_max = 0.0;  // Mbar(psi_bar)
  double Mbar11_at_max = 0.0;
  ProfileResult profile;              // at psi_bar
  bool boundary_retry = false;
};

/// B(psi) = -1/2 log(det[-L_phiphi(theta_tilde)] / det[-L_phiphi(theta_hat)]) + log pi(theta_tilde)/pi(theta_hat).
double adjustment_value(const AdjustmentSpec& adj, const Model& model, const Dataset& data, double psi,
                        const ProfileResult& profile, const FitResult& fit);

/// Evaluates Mbar(psi) = M(psi) + B(psi) and its psi-derivatives for one dataset.
/// First derivatives of B use central differences with h = eps^{1/3} max(1,|psi|),
/// second derivatives h = eps^{1/4} max(1,|psi|); profile derivatives are analytic.
class AdjustedProfile {
 public:
  AdjustedProfile(const Model& model, const Dataset& data, const FitResult& fit, AdjustmentSpec adj);

  ProfileResult profile(double psi) const;
  double B(double psi) const;
  double B(double psi, const ProfileResult& prof) const;
  double Mbar(double psi) const;
  double B1(double psi) const;
  double B11(double psi) const;
  double Mbar1(double psi, const ProfileResult& prof) const { return prof.M1(0) + B1(psi); }
  double Mbar11(double psi, const ProfileResult& prof) const { return prof.M11(0, 0) + B11(psi); }

  const FitResult& fit() const { return fit_; }

 private:
  const Model& model_;
  const Dataset& data_;
  const FitResult& fit_;
  AdjustmentSpec adj_;
  double logdet_hat_ = 0.0;
  double logprior_hat_ = 0.0;
};

/// Maximizes Mbar over psi_hat +/- 10 Wald standard errors (clipped to the
/// domain) by Brent's method; a maximizer on the bracket edge widens the
/// radius threefold once, then throws.
AdjustedFit fit_adjusted(const Model& model, const Dataset& data, const AdjustmentSpec& adj,
                         const FitResult* fit = nullptr);

enum class Beta1Mode { analytic, mc };

struct Beta1McOptions {
  int reps = 2000;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// beta_1 = eta a_r (nu^{st} lam_rst / 2 - pi_r / pi) for the Tierney-Kadane
/// adjustment (analytic mode), or the simulated mean of B_1(psi) at theta (mc mode).
AdjustmentInfo beta1(const AdjustmentSpec& adj, const CumulantTensors& tensors, const DerivedTensors& derived,
                     const Model& model, const ParamPoint& theta, int n, Beta1Mode mode, const Beta1McOptions& mc = {});

/// beta_1 approximated by rho.
AdjustmentInfo beta1_from_rho(const CumulantTensors& tensors, const DerivedTensors& derived);

}  // namespace likstab
