#include "likstab/errors.hpp"
#include "likstab/mc.hpp"

#include <cmath>
#include <limits>

namespace likstab {

AncillaryConfig AncillaryConfig::from_data(const Model& model, const Dataset& data) {
  if (model.spec().family != Family::location_scale) throw ValidationError("ancillary configurations need a location-scale model");
  const FitResult fit = fit_global(model, data);
  require_converged(fit);
  AncillaryConfig c;
  c.a = (data.obs.col(0).array() - fit.theta_hat[0]) / fit.theta_hat[1];
  return c;
}

Dataset AncillaryConfig::reconstruct(double mu_hat, double sigma_hat) const {
  return Dataset(MatrixXd((mu_hat + sigma_hat * a.array()).matrix()));
}

namespace {

VectorXd trapezoid_weights(int m, int stride) {
  VectorXd w = VectorXd::Zero(m);
  for (int i = 0; i < m; i += stride) w(i) = 1.0;
  w(0) = w(m - 1) = 0.5;
  return w;
}

double total_abs(const MatrixXd& p, const MatrixXd& f) { return (p.array() * f.array().abs()).sum(); }

double roundoff_bound(const MatrixXd& p, const MatrixXd& f) {
  return std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(p.size())) * total_abs(p, f);
}

ConditionalGrid build_grid(const Model& model, const AncillaryConfig& cfg, double mu, double sigma,
                           const QuadratureSpec& spec, double half_width) {
  const int n = cfg.n();
  const auto [i_mm, i_ss] = loc_scale::unit_information(model.spec().base, model.spec().df);
  const double se_u = 1.0 / std::sqrt(n * i_mm);
  const double se_ls = 1.0 / std::sqrt(n * i_ss);

  ConditionalGrid g;
  g.mu = mu;
  g.sigma = sigma;
  g.u = VectorXd::LinSpaced(spec.nodes_u, -half_width * se_u, half_width * se_u);
  g.log_sigma = VectorXd::LinSpaced(spec.nodes_log_sigma, std::log(sigma) - half_width * se_ls,
                                    std::log(sigma) + half_width * se_ls);

  MatrixXd lp(spec.nodes_u, spec.nodes_log_sigma);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < spec.nodes_log_sigma; ++j) {
    const double sh = std::exp(g.log_sigma(j));
    for (int i = 0; i < spec.nodes_u; ++i) {
      double s = n * g.log_sigma(j);
      for (int k = 0; k < n; ++k)
        s += loc_scale::log_density(model.spec().base, model.spec().df, sh * (g.u(i) + cfg.a(k)) / sigma, 0).g0;
      lp(i, j) = s;
      max_lp = std::max(max_lp, s);
    }
  }
  if (!std::isfinite(max_lp)) throw NumericalError("conditional density is not finite on the grid");
  const MatrixXd dens = (lp.array() - max_lp).exp().matrix();

  auto normalized = [&](int stride) {
    const VectorXd wu = trapezoid_weights(spec.nodes_u, stride);
    const VectorXd ws = trapezoid_weights(spec.nodes_log_sigma, stride);
    MatrixXd p = dens.array() * (wu * ws.transpose()).array();
    return (p / p.sum()).eval();
  };
  g.prob = normalized(1);
  g.prob_half = normalized(2);

  const int mu_last = spec.nodes_u - 1, ls_last = spec.nodes_log_sigma - 1;
  g.boundary_mass = g.prob.row(0).sum() + g.prob.row(mu_last).sum() + g.prob.col(0).sum() + g.prob.col(ls_last).sum() -
                    g.prob(0, 0) - g.prob(0, ls_last) - g.prob(mu_last, 0) - g.prob(mu_last, ls_last);
  return g;
}

}  // namespace

Expectation ConditionalGrid::expectation(const std::function<double(double, double)>& f) const {
  MatrixXd fv(prob.rows(), prob.cols());
  for (int j = 0; j < prob.cols(); ++j)
    for (int i = 0; i < prob.rows(); ++i) fv(i, j) = f(mu_hat(i, j), sigma_hat(j));
  Expectation e;
  e.value = (prob.array() * fv.array()).sum();
  const double half = (prob_half.array() * fv.array()).sum();
  e.quad_error = std::abs(e.value - half) + roundoff_bound(prob, fv);
  return e;
}

VectorXd ConditionalGrid::marginal_u() const { return prob.rowwise().sum(); }

Expectation ConditionalGrid::expectation_of_u(const std::function<double(double)>& g) const {
  const VectorXd pu = marginal_u();
  const VectorXd ph = prob_half.rowwise().sum();
  VectorXd gv(u.size());
  for (int i = 0; i < u.size(); ++i) gv(i) = g(u(i));
  Expectation e;
  e.value = pu.dot(gv);
  e.quad_error = std::abs(e.value - ph.dot(gv)) + roundoff_bound(pu, gv);
  return e;
}

ConditionalGrid conditional_distribution_location_scale(const Model& model, const AncillaryConfig& a,
                                                        const ParamPoint& theta, const QuadratureSpec& spec) {
  if (model.spec().family != Family::location_scale)
    throw ValidationError("conditional quadrature needs a location-scale model");
  if (a.n() < 3) throw ValidationError("ancillary configuration needs at least 3 entries");
  if (spec.nodes_u < 5 || spec.nodes_log_sigma < 5 || spec.nodes_u % 2 == 0 || spec.nodes_log_sigma % 2 == 0)
    throw ValidationError("quadrature node counts must be odd and at least 5");
  if (!(theta[1] > 0.0)) throw DomainError("sigma must be positive");

  auto g = build_grid(model, a, theta[0], theta[1], spec, spec.half_width_se);
  if (g.boundary_mass > spec.max_boundary_mass) {
    g = build_grid(model, a, theta[0], theta[1], spec, 2.0 * spec.half_width_se);
    g.widened = true;
    if (g.boundary_mass > spec.max_boundary_mass)
      throw NumericalError("conditional grid still has boundary mass " + std::to_string(g.boundary_mass) +
                           " after widening");
  }
  return g;
}

}  // namespace likstab
