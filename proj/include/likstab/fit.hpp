#pragma once

#include "likstab/models.hpp"

#include <optional>

namespace likstab {

struct FitOptions {
  int max_iter = 200;
  double grad_tol = 1e-8;  // relative to max(1, |L|)
};

struct FitResult {
  ParamPoint theta_hat;
  double loglik = 0.0;
  MatrixXd observed_info;  // J = -L_rs at theta_hat
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

struct ProfileResult {
  VectorXd psi0;
  ParamPoint theta_tilde;
  double profile_loglik = 0.0;  // M(psi0)
  VectorXd M1;                  // dM/dpsi = L_psi at theta_tilde
  MatrixXd M11;                 // d2M/dpsi2, Schur complement of L_rs at theta_tilde
  MatrixXd observed_info;       // J at theta_tilde
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;       // nuisance block
};

/// Newton ascent on L with backtracking. Non-convergence is reported through
/// `converged`, never thrown; a singular Hessian at the end throws.
FitResult fit_global(const Model& model, const Dataset& data, const std::optional<ParamPoint>& init = std::nullopt,
                     const FitOptions& opts = {});

/// Maximizes L over the nuisance block at psi = psi0, warm-started from the
/// global fit when one is supplied.
ProfileResult fit_constrained(const Model& model, const Dataset& data, const VectorXd& psi0,
                              const FitResult* warm = nullptr, const FitOptions& opts = {});

ProfileResult fit_constrained(const Model& model, const Dataset& data, double psi0, const FitResult* warm = nullptr,
                              const FitOptions& opts = {});

/// Throws NumericalError unless the fit converged.
void require_converged(const FitResult& f);
void require_converged(const ProfileResult& p);

/// W = 2{L(theta_hat) - M(psi0)}, clamped at 0.
double lr_statistic(const FitResult& fit, const ProfileResult& prof);

/// sgn(psi_hat - psi0) sqrt(W) for scalar psi, exactly 0 when |psi_hat - psi0| < 1e-10.
double signed_root(const FitResult& fit, const ProfileResult& prof);

/// (J^{-1})_{11}: the interest-interest entry of the inverse observed information,
/// i.e. -L^{11} in the sign convention where L^{rs} inverts L_rs. Throws when it
/// is not positive (possible for J away from the MLE).
double inverse_info_11(const MatrixXd& info);

}  // namespace likstab
