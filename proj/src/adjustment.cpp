#include "likstab/adjustment.hpp"

#include "likstab/errors.hpp"
#include "likstab/parallel.hpp"
#include "likstab/stats.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>

namespace likstab {

Prior flat_prior() {
  return {"flat", [](const VectorXd&) { return 0.0; }, [](const VectorXd& t) { return VectorXd::Zero(t.size()).eval(); }};
}

Prior inverse_scale_prior(int index) {
  return {"inverse-scale", [index](const VectorXd& t) { return -std::log(t(index)); },
          [index](const VectorXd& t) {
            VectorXd g = VectorXd::Zero(t.size());
            g(index) = -1.0 / t(index);
            return g;
          }};
}

Prior prior_by_name(const std::string& name) {
  if (name == "flat") return flat_prior();
  if (name == "inverse-scale") return inverse_scale_prior(1);
  throw ValidationError("unknown prior '" + name + "' (expected flat or inverse-scale)");
}

std::string to_string(Beta1Source s) {
  switch (s) {
    case Beta1Source::analytic_rho: return "analytic_rho";
    case Beta1Source::analytic_tk: return "analytic_tk";
    case Beta1Source::mc_estimate: return "mc_estimate";
  }
  return "unknown";
}

namespace {

void require_nuisance(const Model& model) {
  if (model.dim() <= model.interest_dim()) throw DomainError("adjustment needs at least one nuisance parameter");
  if (model.interest_dim() != 1) throw ValidationError("adjusted profile likelihood needs scalar interest");
}

double nuisance_logdet(const MatrixXd& info, int q) {
  const int m = static_cast<int>(info.rows()) - q;
  Eigen::LLT<MatrixXd> llt(info.bottomRightCorner(m, m));
  if (llt.info() != Eigen::Success) throw NumericalError("nuisance block of the observed information is not positive definite");
  return 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

double log_prior(const AdjustmentSpec& adj, const VectorXd& theta) {
  if (adj.kind == AdjustmentKind::none || !adj.prior) return 0.0;
  return adj.prior->log_density(theta);
}

}  // namespace

double adjustment_value(const AdjustmentSpec& adj, const Model& model, const Dataset&, double, const ProfileResult& profile,
                        const FitResult& fit) {
  if (adj.kind == AdjustmentKind::none) return 0.0;
  require_nuisance(model);
  const int q = model.interest_dim();
  const double ld_tilde = nuisance_logdet(profile.observed_info, q);
  const double ld_hat = nuisance_logdet(fit.observed_info, q);
  return -0.5 * (ld_tilde - ld_hat) + log_prior(adj, profile.theta_tilde.values) - log_prior(adj, fit.theta_hat.values);
}

AdjustedProfile::AdjustedProfile(const Model& model, const Dataset& data, const FitResult& fit, AdjustmentSpec adj)
    : model_(model), data_(data), fit_(fit), adj_(std::move(adj)) {
  if (adj_.kind != AdjustmentKind::none) {
    require_nuisance(model);
    logdet_hat_ = nuisance_logdet(fit.observed_info, model.interest_dim());
    logprior_hat_ = log_prior(adj_, fit.theta_hat.values);
  }
}

ProfileResult AdjustedProfile::profile(double psi) const {
  auto p = fit_constrained(model_, data_, psi, &fit_);
  require_converged(p);
  return p;
}

double AdjustedProfile::B(double psi, const ProfileResult& prof) const {
  (void)psi;
  if (adj_.kind == AdjustmentKind::none) return 0.0;
  const double ld = nuisance_logdet(prof.observed_info, model_.interest_dim());
  return -0.5 * (ld - logdet_hat_) + log_prior(adj_, prof.theta_tilde.values) - logprior_hat_;
}

double AdjustedProfile::B(double psi) const {
  if (adj_.kind == AdjustmentKind::none) return 0.0;
  return B(psi, profile(psi));
}

double AdjustedProfile::Mbar(double psi) const {
  const auto p = profile(psi);
  return p.profile_loglik + B(psi, p);
}

double AdjustedProfile::B1(double psi) const {
  if (adj_.kind == AdjustmentKind::none) return 0.0;
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(psi));
  return (B(psi + h) - B(psi - h)) / (2.0 * h);
}

double AdjustedProfile::B11(double psi) const {
  if (adj_.kind == AdjustmentKind::none) return 0.0;
  const double h = std::pow(std::numeric_limits<double>::epsilon(), 0.25) * std::max(1.0, std::abs(psi));
  return (B(psi + h) - 2.0 * B(psi) + B(psi - h)) / (h * h);
}

AdjustedFit fit_adjusted(const Model& model, const Dataset& data, const AdjustmentSpec& adj, const FitResult* fit_in) {
  if (model.interest_dim() != 1) throw ValidationError("fit_adjusted needs scalar interest");
  FitResult fit_local;
  if (!fit_in) {
    fit_local = fit_global(model, data);
    fit_in = &fit_local;
  }
  const FitResult& fit = *fit_in;
  require_converged(fit);
  AdjustedProfile ap(model, data, fit, adj);

  AdjustedFit out;
  const double psi_hat = fit.theta_hat[0];
  if (adj.kind == AdjustmentKind::none) {
    out.psi_bar = psi_hat;
    out.profile = ap.profile(psi_hat);
    out.adjusted_profile_max = out.profile.profile_loglik;
    out.Mbar11_at_max = out.profile.M11(0, 0);
    return out;
  }

  const double se = std::sqrt(inverse_info_11(fit.observed_info));
  auto in_domain = [&](double psi) {
    VectorXd t = fit.theta_hat.values;
    t(0) = psi;
    return model.in_domain(t);
  };
  auto clip = [&](double edge) {
    // Pull an edge back toward psi_hat until it lies in the domain.
    for (int k = 0; k < 200 && !in_domain(edge); ++k) edge = psi_hat + 0.5 * (edge - psi_hat);
    if (!in_domain(edge)) throw DomainError("no valid search bracket for the adjusted profile");
    return edge;
  };

  double radius = 10.0 * se;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double lo = clip(psi_hat - radius), hi = clip(psi_hat + radius);
    auto neg = [&](double psi) {
      try {
        return -ap.Mbar(psi);
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    const auto [psi_bar, neg_max] = boost::math::tools::brent_find_minima(neg, lo, hi, std::numeric_limits<double>::digits / 2);
    const double edge_tol = 1e-6 * (hi - lo);
    const bool on_edge = psi_bar - lo < edge_tol || hi - psi_bar < edge_tol;
    if (!on_edge) {
      out.psi_bar = psi_bar;
      out.profile = ap.profile(psi_bar);
      out.adjusted_profile_max = -neg_max;
      out.Mbar11_at_max = ap.Mbar11(psi_bar, out.profile);
      out.boundary_retry = attempt > 0;
      if (!std::isfinite(out.adjusted_profile_max)) throw NumericalError("adjusted profile is not finite at its maximizer");
      return out;
    }
    radius *= 3.0;
  }
  throw NumericalError("adjusted profile maximizer lies on the search bracket boundary after widening");
}

AdjustmentInfo beta1(const AdjustmentSpec& adj, const CumulantTensors& tensors, const DerivedTensors& derived,
                     const Model& model, const ParamPoint& theta, int n, Beta1Mode mode, const Beta1McOptions& mc) {
  require_nuisance(model);
  if (adj.kind == AdjustmentKind::none) throw ValidationError("beta1 needs an adjustment");
  AdjustmentInfo info;
  if (mode == Beta1Mode::analytic) {
    const VectorXd a = derived.a();
    const VectorXd prior_grad = (adj.prior ? adj.prior->log_grad(theta.values) : VectorXd::Zero(theta.dim()).eval());
    // a_r (nu^{st} lam_rst / 2 - pi_r / pi)
    double s = 0.0;
    const int d = tensors.dim();
    for (int r = 0; r < d; ++r) {
      double inner = 0.0;
      for (int t1 = 0; t1 < d; ++t1)
        for (int t2 = 0; t2 < d; ++t2) inner += derived.nu(t1, t2) * tensors.lam3(r, t1, t2);
      s += a(r) * (0.5 * inner - prior_grad(r));
    }
    info.beta1 = derived.eta * s;
    info.source = Beta1Source::analytic_tk;
    return info;
  }

  if (mc.reps < 100) throw ValidationError("beta1 mc mode needs reps >= 100");
  const double psi = theta[0];
  std::vector<double> b1(mc.reps);
  parallel_for(
      mc.reps,
      [&](std::size_t i) {
        auto gen = make_stream(mc.seed, "beta1", i);
        const Dataset data = simulate(model, theta, n, gen);
        const auto fit = fit_global(model, data);
        require_converged(fit);
        AdjustedProfile ap(model, data, fit, adj);
        b1[i] = ap.B1(psi);
      },
      mc.threads);
  const auto m = mean_se(b1);
  info.beta1 = m.mean;
  info.mc_se = m.se;
  info.source = Beta1Source::mc_estimate;
  return info;
}

AdjustmentInfo beta1_from_rho(const CumulantTensors& tensors, const DerivedTensors& derived) {
  return {rho(tensors, derived), Beta1Source::analytic_rho, 0.0};
}

}  // namespace likstab
