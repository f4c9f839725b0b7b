#pragma once

#include "likstab/models.hpp"
#include "likstab/tensor.hpp"

#include <string>
#include <vector>

namespace likstab {

/// Quantities built from lam2, with index 0 the (scalar) interest parameter:
///   lam_up = inverse of lam2, a = first row of lam_up,
///   eta = -1 / lam_up(0,0), tau = eta a a^T, nu = lam_up + tau.
struct DerivedTensors {
  MatrixXd lam_up;
  double eta = 0.0;
  MatrixXd tau;
  MatrixXd nu;

  VectorXd a() const { return lam_up.row(0).transpose(); }
};

DerivedTensors derive(const CumulantTensors& t);

/// Monte Carlo estimate of the lambda arrays at theta from `reps` simulated
/// datasets of size n. Replicate i draws from stream ("tensors", i).
CumulantTensors estimate_tensors_mc(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                                    int threads = 0);

struct IdentityCheck {
  std::string name;
  double max_residual = 0.0;  // max over index tuples of |residual|
  double max_z = 0.0;         // max over index tuples of |residual| / se
  double threshold = 0.0;     // per-tuple pass threshold multiplier (SE units), 0 for analytic
  bool pass = false;
  // Filled for the n-grid form.
  std::vector<int> n_grid;
  std::vector<double> scaled_residual;  // max |residual| / n^2 at each n
  std::vector<double> scaled_se;
  std::vector<bool> zero_at_n;          // statistically zero at that n
  double slope = 0.0;
  double slope_se = 0.0;
  std::string rule;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool all_pass() const;
};

/// Bartlett identities evaluated on given tensors; pass at 1e-10 absolute.
IdentityReport check_bartlett_identities(const CumulantTensors& t, double abs_tol = 1e-10);

/// Bartlett identities by simulation: residuals are per-replicate sums whose
/// means must lie within max(4 SE, 1e-10) of zero for every index tuple.
IdentityReport check_bartlett_identities(const Model& model, const ParamPoint& theta, int n, int reps,
                                         std::uint64_t seed, int threads = 0);

/// Third-moment identity and the two fourth-moment identities, evaluated over
/// an n-grid. The third-moment identity uses the 4-SE rule at every n. The
/// fourth-moment identities hold up to O(n^{3/2}) terms; each passes when its
/// residual is statistically zero at every n, or when max|residual|/n^2
/// decreases with log-log slope <= -0.2.
IdentityReport check_moment_identities_mc(const Model& model, const ParamPoint& theta, const std::vector<int>& n_grid,
                                          int reps, std::uint64_t seed, int threads = 0);

/// Third-moment identity on analytic tensors: -lam111 against the sum of
/// lam21 permutations and lam3 (an exact equality).
IdentityCheck check_third_moment_identity(const CumulantTensors& t, double abs_tol = 1e-10);

/// rho = -eta a_r nu^{st} (lam_rst / 2 + lam_{rs,t}).
double rho(const CumulantTensors& t, const DerivedTensors& d);

}  // namespace likstab
