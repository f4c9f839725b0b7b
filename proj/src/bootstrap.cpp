#include "likstab/errors.hpp"
#include "likstab/mc.hpp"
#include "likstab/parallel.hpp"
#include "likstab/stats.hpp"

#include <cmath>

namespace likstab {

namespace {

// Deterministic perturbation of a start value that stays in the domain.
std::optional<ParamPoint> perturbed(const Model& model, const ParamPoint& base) {
  for (double f : {1.1, 0.9, 1.3, 0.7}) {
    ParamPoint p = base;
    p.values = base.values.array() * f + (f - 1.0) * 0.1;
    if (model.in_domain(p.values)) return p;
  }
  return std::nullopt;
}

// Runs f(init) with the default start, then once more from a perturbed start.
// Returns nullopt when both attempts fail.
template <class F>
std::optional<double> with_retry(const Model& model, const ParamPoint& around, F&& f) {
  try {
    return f(std::optional<ParamPoint>{});
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  try {
    if (auto start = perturbed(model, around)) return f(start);
  } catch (const NumericalError&) {
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

void check_failures(int failed, int total, const std::string& what) {
  if (failed > 0.01 * total)
    throw NumericalError(what + ": " + std::to_string(failed) + " of " + std::to_string(total) +
                         " replicate fits failed (limit 1%)");
}

std::vector<double> collect(const std::vector<std::optional<double>>& v, int& failed) {
  std::vector<double> out;
  out.reserve(v.size());
  failed = 0;
  for (const auto& x : v) {
    if (x)
      out.push_back(*x);
    else
      ++failed;
  }
  return out;
}

}  // namespace

BootstrapResult bootstrap_pvalue(PivotKind kind, const Model& model, const Dataset& data, double psi0,
                                 const BootstrapOptions& opts) {
  if (opts.B < 500) throw ValidationError("bootstrap needs B >= 500");
  const PivotValue obs = evaluate_pivot(kind, model, data, psi0, opts.adjustment);
  BootstrapResult res;
  res.T_obs = obs.value;
  res.theta_null = obs.profile.theta_tilde;
  const int n = data.n();

  std::vector<std::optional<double>> tstar(opts.B);
  parallel_for(
      opts.B,
      [&](std::size_t i) {
        auto gen = make_stream(opts.seed, "bootstrap", i);
        const Dataset ds = simulate(model, res.theta_null, n, gen);
        tstar[i] = with_retry(model, res.theta_null, [&](const std::optional<ParamPoint>& init) {
          return evaluate_pivot(kind, model, ds, psi0, opts.adjustment, init).value;
        });
      },
      opts.threads);
  res.T_star = collect(tstar, res.failed);
  check_failures(res.failed, opts.B, "bootstrap");
  res.B = static_cast<int>(res.T_star.size());

  int count = 0;
  for (double t : res.T_star) count += opts.tail == Tail::upper ? (t >= res.T_obs) : (t <= res.T_obs);
  res.p = (count + 1.0) / (res.B + 1.0);
  res.mc_se = std::sqrt(res.p * (1.0 - res.p) / res.B);
  return res;
}

StandardizedR bootstrap_standardized_r(const Model& model, const Dataset& data, double psi0, int B, std::uint64_t seed,
                                       int threads) {
  BootstrapOptions opts;
  opts.B = B;
  opts.seed = seed;
  opts.threads = threads;
  const auto boot = bootstrap_pvalue(PivotKind::R, model, data, psi0, opts);
  const auto m = mean_se(boot.T_star);
  StandardizedR out;
  out.R_obs = boot.T_obs;
  out.moments.mean_star = m.mean;
  out.moments.var_star = m.sd * m.sd;
  out.moments.reps = boot.B;
  if (!(out.moments.var_star > 0.0)) throw NumericalError("bootstrap variance of R is zero");
  out.value = (out.R_obs - m.mean) / m.sd;
  return out;
}

double w_statistic(const Model& model, const Dataset& data, const VectorXd& psi0,
                   const std::optional<AdjustmentSpec>& adjustment, const std::optional<ParamPoint>& init) {
  const FitResult fit = fit_global(model, data, init);
  require_converged(fit);
  const ProfileResult prof = fit_constrained(model, data, psi0, &fit);
  require_converged(prof);
  if (!adjustment || adjustment->kind == AdjustmentKind::none) return lr_statistic(fit, prof);
  if (psi0.size() != 1) throw ValidationError("adjusted W needs a scalar interest parameter");
  const AdjustedFit af = fit_adjusted(model, data, *adjustment, &fit);
  AdjustedProfile ap(model, data, fit, *adjustment);
  const double Mbar0 = prof.profile_loglik + ap.B(psi0(0), prof);
  return std::max(0.0, 2.0 * (af.adjusted_profile_max - Mbar0));
}

std::vector<double> simulate_w(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                               const std::string& label, const std::optional<AdjustmentSpec>& adjustment,
                               int threads) {
  const VectorXd psi0 = theta.psi();
  std::vector<std::optional<double>> w(reps);
  parallel_for(
      reps,
      [&](std::size_t i) {
        auto gen = make_stream(seed, label, i);
        const Dataset ds = simulate(model, theta, n, gen);
        w[i] = with_retry(model, theta, [&](const std::optional<ParamPoint>& init) {
          return w_statistic(model, ds, psi0, adjustment, init);
        });
      },
      threads);
  int failed = 0;
  auto out = collect(w, failed);
  check_failures(failed, reps, "simulate_w");
  return out;
}

BartlettFactor bartlett_factor(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                               const std::optional<AdjustmentSpec>& adjustment, int threads) {
  if (reps < 1000) throw ValidationError("bartlett_factor needs reps >= 1000");
  const auto w = simulate_w(model, theta, n, reps, seed, "bartlett-factor", adjustment, threads);
  const int q = theta.interest_dim;
  const auto m = mean_se(w);
  BartlettFactor bf;
  bf.factor = m.mean / q;
  bf.mc_se = m.se / q;
  bf.omega_hat = n * (bf.factor - 1.0);
  bf.reps = static_cast<int>(w.size());
  if (!(bf.factor > 0.0)) throw NumericalError("estimated Bartlett factor is not positive");
  return bf;
}

}  // namespace likstab
