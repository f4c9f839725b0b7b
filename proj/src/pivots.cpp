#include "likstab/pivots.hpp"

#include "likstab/errors.hpp"

#include <cmath>

namespace likstab {

namespace {

struct KindName {
  PivotKind kind;
  const char* name;
};

constexpr KindName kNames[] = {
    {PivotKind::R, "r"},     {PivotKind::WO, "wo"},     {PivotKind::SO, "so"},   {PivotKind::WOC, "woc"},
    {PivotKind::SOC, "soc"}, {PivotKind::WE, "we"},     {PivotKind::WEC, "wec"}, {PivotKind::SE, "se"},
    {PivotKind::SEC, "sec"}, {PivotKind::RBAR, "rbar"}, {PivotKind::AWO, "awo"}, {PivotKind::ASO, "aso"},
};

}  // namespace

std::string to_string(PivotKind k) {
  for (const auto& e : kNames)
    if (e.kind == k) return e.name;
  return "?";
}

PivotKind parse_pivot_kind(const std::string& name) {
  for (const auto& e : kNames)
    if (name == e.name) return e.kind;
  throw ValidationError("unknown pivot '" + name + "' (expected one of r, wo, so, woc, soc, we, wec, se, sec, rbar, awo, aso)");
}

const std::vector<PivotKind>& all_pivot_kinds() {
  static const std::vector<PivotKind> all = [] {
    std::vector<PivotKind> v;
    for (const auto& e : kNames) v.push_back(e.kind);
    return v;
  }();
  return all;
}

bool is_adjusted(PivotKind k) { return k == PivotKind::RBAR || k == PivotKind::AWO || k == PivotKind::ASO; }

std::string to_string(WecVariant v) {
  switch (v) {
    case WecVariant::derived: return "derived";
    case WecVariant::printed: return "printed";
    case WecVariant::printed_without_duplicate: return "printed_without_duplicate";
  }
  return "?";
}

WecVariant parse_wec_variant(const std::string& name) {
  if (name == "derived") return WecVariant::derived;
  if (name == "printed") return WecVariant::printed;
  if (name == "printed_without_duplicate") return WecVariant::printed_without_duplicate;
  throw ValidationError("unknown WEC variant '" + name + "' (expected derived, printed or printed_without_duplicate)");
}

std::vector<PivotValue> evaluate_pivots(const std::vector<PivotKind>& kinds, const Model& model, const Dataset& data,
                                        double psi0, const std::optional<AdjustmentSpec>& adjustment,
                                        const std::optional<ParamPoint>& init) {
  if (model.interest_dim() != 1) throw ValidationError("pivots need a scalar interest parameter");
  bool need_adjusted = false;
  for (auto k : kinds) need_adjusted = need_adjusted || is_adjusted(k);
  if (need_adjusted && (!adjustment || adjustment->kind == AdjustmentKind::none))
    throw ValidationError("pivots rbar, awo and aso need an adjustment");

  const FitResult fit = fit_global(model, data, init);
  require_converged(fit);
  const ProfileResult prof = fit_constrained(model, data, psi0, &fit);
  require_converged(prof);

  const int n = data.n();
  const double psi_hat = fit.theta_hat[0];
  const double diff = std::abs(psi_hat - psi0) < 1e-10 ? 0.0 : psi_hat - psi0;
  const double M1 = prof.M1(0);

  // -L^{11} at theta_hat and theta_tilde, and -lambda^{11} at both.
  std::optional<double> obs_hat, obs_tilde, exp_hat, exp_tilde;
  auto get = [](std::optional<double>& slot, auto&& f) {
    if (!slot) slot = f();
    return *slot;
  };
  auto v_obs_hat = [&] { return get(obs_hat, [&] { return inverse_info_11(fit.observed_info); }); };
  auto v_obs_tilde = [&] { return get(obs_tilde, [&] { return inverse_info_11(prof.observed_info); }); };
  auto v_exp_hat = [&] {
    return get(exp_hat, [&] { return inverse_info_11(model.expected_information(fit.theta_hat.values, n)); });
  };
  auto v_exp_tilde = [&] {
    return get(exp_tilde, [&] { return inverse_info_11(model.expected_information(prof.theta_tilde.values, n)); });
  };

  std::optional<AdjustedFit> adj_fit;
  double Wbar = 0.0, Mbar1_psi0 = 0.0;
  if (need_adjusted) {
    adj_fit = fit_adjusted(model, data, *adjustment, &fit);
    AdjustedProfile ap(model, data, fit, *adjustment);
    const double Mbar_psi0 = prof.profile_loglik + ap.B(psi0, prof);
    Wbar = std::max(0.0, 2.0 * (adj_fit->adjusted_profile_max - Mbar_psi0));
    Mbar1_psi0 = ap.Mbar1(psi0, prof);
    if (!(adj_fit->Mbar11_at_max < 0.0)) throw NumericalError("adjusted profile is not concave at its maximizer");
  }

  std::vector<PivotValue> out;
  for (auto kind : kinds) {
    PivotValue pv;
    pv.kind = kind;
    pv.psi0 = psi0;
    pv.fit = fit;
    pv.profile = prof;
    switch (kind) {
      case PivotKind::R: pv.value = signed_root(fit, prof); break;
      case PivotKind::WO: pv.value = diff / std::sqrt(v_obs_hat()); break;
      case PivotKind::SO: pv.value = M1 * std::sqrt(v_obs_hat()); break;
      case PivotKind::WOC: pv.value = diff / std::sqrt(v_obs_tilde()); break;
      case PivotKind::SOC: pv.value = M1 * std::sqrt(v_obs_tilde()); break;
      case PivotKind::WE: pv.value = diff / std::sqrt(v_exp_hat()); break;
      case PivotKind::WEC: pv.value = diff / std::sqrt(v_exp_tilde()); break;
      case PivotKind::SE: pv.value = M1 * std::sqrt(v_exp_hat()); break;
      case PivotKind::SEC: pv.value = M1 * std::sqrt(v_exp_tilde()); break;
      case PivotKind::RBAR: {
        const double dbar = adj_fit->psi_bar - psi0;
        pv.value = std::abs(dbar) < 1e-10 ? 0.0 : (dbar > 0 ? 1.0 : -1.0) * std::sqrt(Wbar);
        break;
      }
      case PivotKind::AWO:
        pv.value = (adj_fit->psi_bar - psi0) * std::sqrt(-adj_fit->Mbar11_at_max);
        break;
      case PivotKind::ASO:
        // Score form normalized by {-Mbar11(psi_bar)}^{-1/2}.
        pv.value = Mbar1_psi0 / std::sqrt(-adj_fit->Mbar11_at_max);
        break;
    }
    if (is_adjusted(kind)) pv.adjusted = adj_fit;
    if (!std::isfinite(pv.value)) throw NumericalError("pivot " + to_string(kind) + " is not finite");
    out.push_back(std::move(pv));
  }
  return out;
}

PivotValue evaluate_pivot(PivotKind kind, const Model& model, const Dataset& data, double psi0,
                          const std::optional<AdjustmentSpec>& adjustment, const std::optional<ParamPoint>& init) {
  return evaluate_pivots({kind}, model, data, psi0, adjustment, init).front();
}

ExpansionCoefficients expansion_coefficients(PivotKind kind, const CumulantTensors& t, const DerivedTensors& dv,
                                             const std::optional<AdjustmentInfo>& adj_info, WecVariant wec) {
  const int d = t.dim();
  const VectorXd a = dv.a();
  const MatrixXd& L = dv.lam_up;
  const MatrixXd& tau = dv.tau;
  const MatrixXd& nu = dv.nu;
  // K_uv = a_t lam_tuv and Kc_uv = a_t lam_{tu,v}.
  const MatrixXd K = t.lam3.contract_first(a);
  const MatrixXd Kc = t.lam21.contract_first(a);

  auto outer3 = [&](const MatrixXd& M) {
    Tensor3 x(d);
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s)
        for (int u = 0; u < d; ++u) x(r, s, u) = a(r) * M(s, u);
    return x;
  };

  const MatrixXd base = 0.5 * L * K * nu.transpose();  // (1/2) lam^{1t} lam^{ru} nu^{sv} lam_tuv
  const MatrixXd tKt = tau * K * tau.transpose();
  ExpansionCoefficients c;
  switch (kind) {
    case PivotKind::R:
    case PivotKind::RBAR:
      c.xi3 = outer3(L + 0.5 * tau);
      c.xi2 = base + tKt / 6.0;
      break;
    case PivotKind::WO:
    case PivotKind::SOC:
    case PivotKind::AWO:
      c.xi3 = outer3(L + 0.5 * tau);
      c.xi2 = base;
      break;
    case PivotKind::SO:
    case PivotKind::WOC:
    case PivotKind::ASO:
      c.xi3 = outer3(L + 0.5 * tau);
      c.xi2 = base + 0.5 * tKt;
      break;
    case PivotKind::WE:
      c.xi3 = outer3(L);
      c.xi2 = base + 0.5 * tau * Kc * L.transpose();
      break;
    case PivotKind::WEC:
      c.xi3 = outer3(L);
      switch (wec) {
        case WecVariant::printed: c.xi2 = base + base + 0.5 * tau * Kc * tau.transpose(); break;
        case WecVariant::printed_without_duplicate: c.xi2 = base + 0.5 * tau * Kc * tau.transpose(); break;
        case WecVariant::derived: c.xi2 = base + 0.5 * tKt + 0.5 * tau * Kc * nu.transpose(); break;
      }
      break;
    case PivotKind::SE:
      c.xi3 = outer3(nu);
      c.xi2 = base + 0.5 * tKt - 0.5 * tau * Kc * L.transpose();
      break;
    case PivotKind::SEC:
      c.xi3 = outer3(nu);
      c.xi2 = base - 0.5 * tau * Kc * nu.transpose();
      break;
  }
  if (is_adjusted(kind)) {
    if (!adj_info) throw ValidationError("adjusted pivot " + to_string(kind) + " needs beta1");
    c.sigma_const = adj_info->beta1 / dv.eta;
  }
  return c;
}

}  // namespace likstab
