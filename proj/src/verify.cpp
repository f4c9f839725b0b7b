#include "likstab/verify.hpp"

#include "likstab/errors.hpp"
#include "likstab/parallel.hpp"
#include "likstab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace likstab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

bool SlopeRule::accepts(double slope) const {
  switch (kind) {
    case Kind::within: return std::abs(slope - claim) <= tol;
    case Kind::at_most: return slope <= bound;
    case Kind::greater_than: return slope > bound;
  }
  return false;
}

std::string SlopeRule::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::within: os << "slope within " << tol << " of " << claim; break;
    case Kind::at_most: os << "slope <= " << bound; break;
    case Kind::greater_than: os << "slope > " << bound; break;
  }
  return os.str();
}

SlopeReport finish_slope_report(SlopeReport r) {
  std::vector<double> x, y, yse;
  std::size_t first = r.n_grid.size();
  bool nonpositive = false;
  for (std::size_t k = 0; k < r.n_grid.size(); ++k) {
    if (k < r.dropped.size() && r.dropped[k]) continue;
    if (first == r.n_grid.size()) first = k;
    if (!(r.metric[k] > 0.0)) {
      nonpositive = true;
      continue;
    }
    x.push_back(std::log(r.n_grid[k]));
    y.push_back(std::log(r.metric[k]));
    yse.push_back(r.metric_se[k] / r.metric[k]);
  }
  r.verdict = Verdict::inconclusive;
  r.slope_defined = false;
  if (nonpositive) {
    r.note = "metric is zero at some grid point";
    return r;
  }
  if (x.size() < 3) {
    r.note = "fewer than 3 usable grid points";
    return r;
  }
  const LineFit fit = ols(x, y, yse);
  r.slope = fit.slope;
  r.slope_se = fit.slope_se;
  r.intercept = fit.intercept;
  r.slope_defined = std::isfinite(fit.slope);
  if (!r.slope_defined) {
    r.note = "slope is not finite";
    return r;
  }
  if (!(r.metric[first] > 3.0 * r.metric_se[first])) {
    r.note = "metric at the smallest n is within 3 standard errors of zero";
    return r;
  }
  r.verdict = r.rule.accepts(r.slope) ? Verdict::pass : Verdict::fail;
  return r;
}

std::string to_string(AgreementMode m) { return m == AgreementMode::cf ? "cf" : "bootstrap"; }

AgreementMode parse_agreement_mode(const std::string& s) {
  if (s == "cf") return AgreementMode::cf;
  if (s == "bootstrap") return AgreementMode::bootstrap;
  throw ValidationError("unknown mode '" + s + "' (expected cf or bootstrap)");
}

double claimed_agreement_slope(const Model& model, const ParamPoint& theta0, PivotKind a, PivotKind b, WecVariant wec) {
  const auto t = model_tensors(model, theta0, 100);
  const auto d = derive(t);
  const AdjustmentInfo zero{};
  const auto ca = expansion_coefficients(a, t, d, zero, wec);
  const auto cb = expansion_coefficients(b, t, d, zero, wec);
  const auto [c1, c2] = equivalence_check(ca, cb, t, d);
  return c1.pass && c2.pass ? -1.0 : -0.5;
}

namespace {

bool is_fit_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const NumericalError&) {
    return true;
  } catch (const DomainError&) {
    return true;
  } catch (...) {
    return false;
  }
}

std::optional<AdjustmentInfo> adjustment_info(const std::optional<AdjustmentSpec>& adj, const CumulantTensors& t,
                                              const DerivedTensors& d, const Model& model, const ParamPoint& theta,
                                              int n) {
  if (!adj || adj->kind == AdjustmentKind::none) return std::nullopt;
  return beta1(*adj, t, d, model, theta, n, Beta1Mode::analytic);
}

}  // namespace

SlopeReport order_of_agreement(const ExperimentConfig& cfg) {
  if (cfg.n_grid.size() < 3) throw ValidationError("n_grid needs at least 3 sizes");
  if (cfg.outer < 200) throw ValidationError("outer needs at least 200 replicates");
  const auto model = make_model(cfg.model);
  model->check_param(cfg.theta0);
  const double psi0 = cfg.theta0[0];
  const std::vector<PivotKind> kinds{cfg.kind_a, cfg.kind_b};

  SlopeReport rep;
  rep.name = "order " + to_string(cfg.kind_a) + "," + to_string(cfg.kind_b) + " (" + to_string(cfg.mode) + ")";
  rep.rule = cfg.rule ? *cfg.rule : SlopeRule::within(claimed_agreement_slope(*model, cfg.theta0, cfg.kind_a, cfg.kind_b, cfg.wec));

  for (int n : cfg.n_grid) {
    const std::string label = "order-outer-" + std::to_string(n);
    std::vector<double> diff(cfg.outer, 0.0);
    std::vector<char> ok(cfg.outer, 0);
    parallel_for(
        cfg.outer,
        [&](std::size_t i) {
          auto gen = make_stream(cfg.seed, label, i);
          const Dataset ds = simulate(*model, cfg.theta0, n, gen);
          try {
            double p[2];
            if (cfg.mode == AgreementMode::cf) {
              const auto pv = evaluate_pivots(kinds, *model, ds, psi0, cfg.adjustment);
              const ParamPoint& th = pv[0].profile.theta_tilde;
              const auto t = model_tensors(*model, th, n);
              const auto d = derive(t);
              const auto info = adjustment_info(cfg.adjustment, t, d, *model, th, n);
              for (int k = 0; k < 2; ++k) {
                const auto c = expansion_coefficients(kinds[k], t, d, info, cfg.wec);
                p[k] = cf_pvalue(pv[k], c, t, d, *model, ds, th, cfg.cf).p;
              }
            } else {
              BootstrapOptions bo;
              bo.B = cfg.B;
              bo.seed = stream_seed(cfg.seed, "order-boot-" + std::to_string(n), i);
              bo.threads = 1;
              bo.tail = cfg.cf.tail;
              bo.adjustment = cfg.adjustment;
              for (int k = 0; k < 2; ++k) p[k] = bootstrap_pvalue(kinds[k], *model, ds, psi0, bo).p;
            }
            diff[i] = std::abs(p[0] - p[1]);
            ok[i] = 1;
          } catch (...) {
            if (!is_fit_failure(std::current_exception())) throw;
          }
        },
        cfg.threads);

    std::vector<double> kept;
    for (int i = 0; i < cfg.outer; ++i)
      if (ok[i]) kept.push_back(diff[i]);
    const int failed = cfg.outer - static_cast<int>(kept.size());
    const auto m = mean_se(kept);
    rep.n_grid.push_back(n);
    rep.metric.push_back(m.mean);
    rep.metric_se.push_back(m.se);
    rep.failures.push_back(failed);
    rep.dropped.push_back(failed > 0.01 * cfg.outer);
  }
  return finish_slope_report(std::move(rep));
}

std::string to_string(StabilityStatistic s) { return s == StabilityStatistic::mean ? "mean" : "variance"; }

double claimed_stability_slope(PivotKind k) {
  switch (k) {
    case PivotKind::WE:
    case PivotKind::WEC:
    case PivotKind::SE:
    case PivotKind::SEC: return -0.5;
    default: return -1.0;
  }
}

StabilityResult stability_experiment(const StabilityConfig& cfg) {
  if (cfg.n_grid.size() < 3) throw ValidationError("n_grid needs at least 3 sizes");
  if (cfg.configs < 10) throw ValidationError("configs needs at least 10");
  if (cfg.kinds.empty()) throw ValidationError("stability experiment needs at least one pivot kind");
  const auto model = make_model(cfg.model);
  if (model->spec().family != Family::location_scale)
    throw ValidationError("stability experiment needs a location-scale model");
  model->check_param(cfg.theta0);
  const double mu0 = cfg.theta0[0], sigma0 = cfg.theta0[1];
  const int K = static_cast<int>(cfg.kinds.size());

  StabilityResult res;
  res.reports.resize(2 * K);
  res.pooled_mean.assign(K, {});
  for (int k = 0; k < K; ++k)
    for (int s = 0; s < 2; ++s) {
      auto& r = res.reports[2 * k + s];
      const auto stat = s == 0 ? StabilityStatistic::mean : StabilityStatistic::variance;
      r.name = "stability " + to_string(cfg.kinds[k]) + " (" + to_string(stat) + ")";
      r.rule = SlopeRule::within(claimed_stability_slope(cfg.kinds[k]));
    }

  for (int n : cfg.n_grid) {
    const std::string label = "stability-" + std::to_string(n);
    // [config][kind] conditional mean / variance and their quadrature errors
    std::vector<std::vector<double>> cmean(cfg.configs), cvar(cfg.configs), emean(cfg.configs), evar(cfg.configs);
    std::vector<char> ok(cfg.configs, 0);
    parallel_for(
        cfg.configs,
        [&](std::size_t c) {
          auto gen = make_stream(cfg.seed, label, c);
          const Dataset ds = simulate(*model, cfg.theta0, n, gen);
          try {
            const auto a = AncillaryConfig::from_data(*model, ds);
            const auto grid = conditional_distribution_location_scale(*model, a, cfg.theta0, cfg.quadrature);
            const int m = static_cast<int>(grid.u.size());
            MatrixXd T(m, K);
            for (int i = 0; i < m; ++i) {
              const Dataset y = a.reconstruct(mu0 + grid.u(i) * sigma0, sigma0);
              const auto pv = evaluate_pivots(cfg.kinds, *model, y, mu0, cfg.adjustment);
              for (int k = 0; k < K; ++k) T(i, k) = pv[k].value;
            }
            const VectorXd pu = grid.marginal_u();
            const VectorXd ph = grid.prob_half.rowwise().sum();
            const double eps = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(grid.prob.size()));
            for (int k = 0; k < K; ++k) {
              const VectorXd t = T.col(k);
              const VectorXd t2 = t.array().square();
              const double e1 = pu.dot(t), e2 = pu.dot(t2);
              const double h1 = ph.dot(t), h2 = ph.dot(t2);
              const double v = e2 - e1 * e1, vh = h2 - h1 * h1;
              cmean[c].push_back(e1);
              cvar[c].push_back(v);
              emean[c].push_back(std::abs(e1 - h1) + eps * pu.dot(t.cwiseAbs()));
              evar[c].push_back(std::abs(v - vh) + eps * (e2 + 2.0 * std::abs(e1) * pu.dot(t.cwiseAbs())));
            }
            ok[c] = 1;
          } catch (...) {
            if (!is_fit_failure(std::current_exception())) throw;
          }
        },
        cfg.threads);

    int failed = 0;
    for (char o : ok) failed += !o;
    for (int k = 0; k < K; ++k) {
      for (int s = 0; s < 2; ++s) {
        const auto& vals = s == 0 ? cmean : cvar;
        const auto& errs = s == 0 ? emean : evar;
        std::vector<double> x;
        double err2 = 0.0;
        for (int c = 0; c < cfg.configs; ++c)
          if (ok[c]) {
            x.push_back(vals[c][k]);
            err2 += errs[c][k] * errs[c][k];
          }
        const auto m = mean_se(x);
        auto& r = res.reports[2 * k + s];
        r.n_grid.push_back(n);
        r.metric.push_back(m.sd);
        r.metric_se.push_back(x.size() > 1 ? m.sd / std::sqrt(2.0 * (x.size() - 1)) : 0.0);
        r.quad_error.push_back(x.empty() ? 0.0 : std::sqrt(err2 / x.size()));
        r.failures.push_back(failed);
        r.dropped.push_back(failed > 0.01 * cfg.configs);
        if (s == 0) res.pooled_mean[k].push_back(m.mean);
      }
    }
  }
  for (auto& r : res.reports) r = finish_slope_report(std::move(r));
  return res;
}

BartlettReport bartlett_experiment(const Model& model, const ParamPoint& theta0, int n, int reps, std::uint64_t seed,
                                   const std::optional<AdjustmentSpec>& adjustment, int threads, int factor_reps) {
  model.check_param(theta0);
  BartlettReport r;
  r.q = theta0.interest_dim;
  r.n = n;
  r.adjusted = adjustment && adjustment->kind != AdjustmentKind::none;
  const auto w = simulate_w(model, theta0, n, reps, seed, "bartlett-w", adjustment, threads);
  r.reps = static_cast<int>(w.size());
  r.factor = bartlett_factor(model, theta0, n, factor_reps > 0 ? factor_reps : reps, seed, adjustment, threads);

  const auto m = mean_se(w);
  r.mean_before = m.mean / r.q;
  r.se_before = m.se / r.q;
  r.mean_after = r.mean_before / r.factor.factor;
  r.se_after = r.mean_after * std::hypot(r.se_before / r.mean_before, r.factor.mc_se / r.factor.factor);

  const double q = r.q;
  const auto ks_b = ks_test(w, [q](double x) { return chi2_cdf(x, q); });
  std::vector<double> wc(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) wc[i] = w[i] / r.factor.factor;
  const auto ks_a = ks_test(wc, [q](double x) { return chi2_cdf(x, q); });
  r.ks_before = ks_b.statistic;
  r.ks_p_before = ks_b.pvalue;
  r.ks_after = ks_a.statistic;
  r.ks_p_after = ks_a.pvalue;
  r.pass = std::abs(r.mean_after - 1.0) <= 4.0 * r.se_after && r.ks_after <= r.ks_before;
  return r;
}

std::string to_string(UniformityStatistic s) {
  return s == UniformityStatistic::bootstrap_pivot ? "bootstrap_pivot" : "unscaled_t1";
}

UniformityReport uniformity_experiment(PivotKind kind, const Model& model, const ParamPoint& theta0, int n, int outer,
                                       int B, std::uint64_t seed, UniformityStatistic statistic, int threads) {
  model.check_param(theta0);
  if (outer < 50) throw ValidationError("uniformity experiment needs outer >= 50");
  const double psi0 = theta0[0];
  UniformityReport r;
  r.kind = kind;
  r.statistic = statistic;
  r.n = n;
  r.outer = outer;
  r.B = B;
  std::vector<std::optional<double>> p(outer);
  parallel_for(
      outer,
      [&](std::size_t i) {
        auto gen = make_stream(seed, "uniformity-outer", i);
        const Dataset ds = simulate(model, theta0, n, gen);
        try {
          if (statistic == UniformityStatistic::bootstrap_pivot) {
            BootstrapOptions bo;
            bo.B = B;
            bo.seed = stream_seed(seed, "uniformity-boot", i);
            bo.threads = 1;
            p[i] = bootstrap_pvalue(kind, model, ds, psi0, bo).p;
          } else {
            const FitResult fit = fit_global(model, ds);
            require_converged(fit);
            const ProfileResult prof = fit_constrained(model, ds, psi0, &fit);
            require_converged(prof);
            const auto t = model_tensors(model, prof.theta_tilde, n);
            const auto d = derive(t);
            p[i] = normal_sf(expansion_T1(l_arrays(model, prof.theta_tilde, ds, t), d));
          }
        } catch (...) {
          if (!is_fit_failure(std::current_exception())) throw;
        }
      },
      threads);
  for (const auto& x : p) {
    if (x)
      r.pvalues.push_back(*x);
    else
      ++r.failures;
  }
  if (r.failures > 0.01 * outer) throw NumericalError("uniformity experiment: more than 1% of outer replicates failed");
  const auto ks = ks_test(r.pvalues, [](double x) { return std::clamp(x, 0.0, 1.0); });
  r.ks = ks.statistic;
  r.ks_p = ks.pvalue;
  r.pass = r.ks_p >= r.level;
  return r;
}

}  // namespace likstab
