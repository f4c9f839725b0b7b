#include "likstab/fit.hpp"

#include "likstab/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace likstab {

namespace {

struct AscentResult {
  VectorXd theta;
  LogLikDerivs derivs;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

VectorXd gather(const VectorXd& v, const std::vector<int>& idx) {
  VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

MatrixXd gather(const MatrixXd& m, const std::vector<int>& idx) {
  MatrixXd out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

double safe_value(const Model& model, const VectorXd& theta, const Dataset& data) {
  if (!theta.allFinite() || !model.in_domain(theta)) return -std::numeric_limits<double>::infinity();
  const double v = model.derivs(theta, data, 0).value;
  return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

// Up to two extra plain Newton steps once the tolerance is met, kept only while
// the gradient shrinks. Finite differences of profile quantities rely on this.
void polish(const Model& model, const Dataset& data, VectorXd& theta, const std::vector<int>& free, AscentResult& res) {
  for (int k = 0; k < 2 && res.grad_norm > 0.0; ++k) {
    const MatrixXd H = gather(res.derivs.hess, free);
    Eigen::LLT<MatrixXd> llt(-H);
    if (llt.info() != Eigen::Success) return;
    const VectorXd step = llt.solve(gather(res.derivs.grad, free));
    VectorXd trial = theta;
    for (std::size_t i = 0; i < free.size(); ++i) trial(free[i]) += step(i);
    if (!trial.allFinite() || !model.in_domain(trial)) return;
    auto d = model.derivs(trial, data, 2);
    const double gn = gather(d.grad, free).norm();
    if (!std::isfinite(d.value) || !(gn < res.grad_norm)) return;
    theta = trial;
    res.derivs = std::move(d);
    res.grad_norm = gn;
  }
}

// Maximizes L over the coordinates in `free`, holding the rest fixed.
AscentResult ascend(const Model& model, const Dataset& data, VectorXd theta, const std::vector<int>& free,
                    const FitOptions& opts) {
  AscentResult res;
  if (!model.in_domain(theta)) throw DomainError("starting value outside the parameter domain");
  const double eps = std::numeric_limits<double>::epsilon();
  for (int it = 0;; ++it) {
    res.derivs = model.derivs(theta, data, 2);
    const double L = res.derivs.value;
    if (!std::isfinite(L)) throw NumericalError("log-likelihood is not finite during optimization");
    const VectorXd g = gather(res.derivs.grad, free);
    res.grad_norm = g.size() ? g.norm() : 0.0;
    res.iterations = it;
    if (res.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(L))) {
      res.converged = true;
      polish(model, data, theta, free, res);
      break;
    }
    if (it >= opts.max_iter) break;

    const MatrixXd H = gather(res.derivs.hess, free);
    VectorXd step;
    bool newton = false;
    Eigen::LLT<MatrixXd> llt(-H);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(g);
      newton = step.allFinite();
    }
    if (!newton) {
      // Steepest ascent scaled by the Hessian's magnitude.
      const double scale = std::max({H.cwiseAbs().maxCoeff(), g.norm(), 1e-12});
      step = g / scale;
    }

    double alpha = 1.0;
    bool accepted = false;
    const double slack = 16.0 * eps * std::max(1.0, std::abs(L));
    for (int k = 0; k < 60; ++k) {
      VectorXd trial = theta;
      for (std::size_t i = 0; i < free.size(); ++i) trial(free[i]) += alpha * step(i);
      const double Lt = safe_value(model, trial, data);
      if (Lt >= L + 1e-4 * alpha * g.dot(step) || (newton && alpha == 1.0 && Lt >= L - slack)) {
        theta = trial;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  res.theta = theta;
  return res;
}

}  // namespace

FitResult fit_global(const Model& model, const Dataset& data, const std::optional<ParamPoint>& init,
                     const FitOptions& opts) {
  model.check_data(data);
  VectorXd start = init ? init->values : model.initial_estimate(data);
  if (init) model.check_param(*init);
  std::vector<int> free(model.dim());
  for (int i = 0; i < model.dim(); ++i) free[i] = i;
  auto a = ascend(model, data, start, free, opts);
  if (!a.converged && !init) {
    // Retry from a shrunk start: halfway between the moment estimate and the
    // last iterate is often enough for heavy-tailed samples.
    const VectorXd mid = 0.5 * (start + a.theta);
    if (model.in_domain(mid)) {
      auto b = ascend(model, data, mid, free, opts);
      if (b.converged) a = std::move(b);
    }
  }
  FitResult r;
  r.theta_hat = ParamPoint(a.theta, model.interest_dim());
  r.loglik = a.derivs.value;
  r.observed_info = -a.derivs.hess;
  r.converged = a.converged;
  r.iterations = a.iterations;
  r.grad_norm = a.grad_norm;
  if (r.converged) {
    Eigen::LLT<MatrixXd> llt(r.observed_info);
    if (llt.info() != Eigen::Success) throw NumericalError("observed information is not positive definite at the MLE");
  }
  return r;
}

ProfileResult fit_constrained(const Model& model, const Dataset& data, const VectorXd& psi0, const FitResult* warm,
                              const FitOptions& opts) {
  model.check_data(data);
  const int d = model.dim(), q = model.interest_dim();
  if (psi0.size() != q) throw ValidationError("psi0 has length " + std::to_string(psi0.size()) + ", model needs " + std::to_string(q));
  VectorXd start = warm ? warm->theta_hat.values : model.initial_estimate(data);
  start.head(q) = psi0;
  if (!psi0.allFinite() || !model.in_domain(start)) {
    VectorXd probe = model.initial_estimate(data);
    probe.head(q) = psi0;
    if (!psi0.allFinite() || !model.in_domain(probe)) throw DomainError("psi0 is outside the interest domain");
    start = probe;
  }
  std::vector<int> free;
  for (int i = q; i < d; ++i) free.push_back(i);
  auto a = ascend(model, data, start, free, opts);
  if (!a.converged && warm) {
    VectorXd alt = model.initial_estimate(data);
    alt.head(q) = psi0;
    if (model.in_domain(alt)) {
      auto b = ascend(model, data, alt, free, opts);
      if (b.converged) a = std::move(b);
    }
  }

  ProfileResult p;
  p.psi0 = psi0;
  p.theta_tilde = ParamPoint(a.theta, q);
  p.profile_loglik = a.derivs.value;
  p.observed_info = -a.derivs.hess;
  p.M1 = a.derivs.grad.head(q);
  const MatrixXd& H = a.derivs.hess;
  if (d > q) {
    const MatrixXd Hpp = H.bottomRightCorner(d - q, d - q);
    Eigen::LLT<MatrixXd> llt(-Hpp);
    if (llt.info() != Eigen::Success)
      throw NumericalError("nuisance block of the Hessian is not negative definite at the constrained MLE");
    p.M11 = H.topLeftCorner(q, q) + H.block(0, q, q, d - q) * llt.solve(H.block(q, 0, d - q, q));
  } else {
    p.M11 = H.topLeftCorner(q, q);
  }
  p.converged = a.converged;
  p.iterations = a.iterations;
  p.grad_norm = a.grad_norm;
  return p;
}

ProfileResult fit_constrained(const Model& model, const Dataset& data, double psi0, const FitResult* warm,
                              const FitOptions& opts) {
  return fit_constrained(model, data, VectorXd::Constant(1, psi0), warm, opts);
}

void require_converged(const FitResult& f) {
  if (!f.converged)
    throw NumericalError("global fit did not converge after " + std::to_string(f.iterations) + " iterations (gradient norm " +
                         std::to_string(f.grad_norm) + ")");
}

void require_converged(const ProfileResult& p) {
  if (!p.converged)
    throw NumericalError("constrained fit did not converge after " + std::to_string(p.iterations) +
                         " iterations (gradient norm " + std::to_string(p.grad_norm) + ")");
}

double lr_statistic(const FitResult& fit, const ProfileResult& prof) {
  return std::max(0.0, 2.0 * (fit.loglik - prof.profile_loglik));
}

double signed_root(const FitResult& fit, const ProfileResult& prof) {
  const double diff = fit.theta_hat[0] - prof.psi0(0);
  if (std::abs(diff) < 1e-10) return 0.0;
  return (diff > 0 ? 1.0 : -1.0) * std::sqrt(lr_statistic(fit, prof));
}

double inverse_info_11(const MatrixXd& info) {
  Eigen::FullPivLU<MatrixXd> lu(info);
  if (!lu.isInvertible()) throw NumericalError("information matrix is singular");
  VectorXd e = VectorXd::Zero(info.rows());
  e(0) = 1.0;
  const double v = lu.solve(e)(0);
  if (!(v > 0.0)) throw NumericalError("interest entry of the inverse information is not positive");
  return v;
}

}  // namespace likstab
