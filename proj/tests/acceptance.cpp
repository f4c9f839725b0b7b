// Acceptance run: one PASS/FAIL line per criterion, then supplementary
// non-gating lines. Exit status is the number of failed criteria.

#include "likstab/cli.hpp"
#include "likstab/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace likstab;

namespace {

// Pinned tolerances.
constexpr int kRandomSets = 50;
constexpr double kAlgebraRel = 1e-8;
constexpr int kIdentityReps = 100000;
constexpr double kSeTimes = 4.0;
constexpr double kQuadMultiple = 10.0;
constexpr double kOrderBound = -0.7;
constexpr double kWeStabilityBound = -0.75;
constexpr std::uint64_t kSeed = 42;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("criterion %d %s: %s [%s] (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

void supplementary(const std::string& title, const std::function<std::string()>& body) {
  std::string detail;
  try {
    detail = body();
  } catch (const std::exception& e) {
    detail = std::string("error: ") + e.what();
  }
  std::printf("supplementary (non-gating) %s: %s\n", title.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string slope_text(const SlopeReport& r) {
  if (!r.slope_defined) return r.name + " slope undefined (" + to_string(r.verdict) + ")";
  return r.name + " slope " + fmt("%.3f", r.slope) + " +/- " + fmt("%.3f", r.slope_se) + " (" + r.rule.describe() + ", " +
         to_string(r.verdict) + ")";
}

/// Random tensor set: negative-definite lam2 and the index symmetries of the cumulant arrays.
CumulantTensors random_tensors(int d, std::mt19937_64& g) {
  std::normal_distribution<double> z;
  auto tensor = [&] {
    Tensor3 t(d);
    for (auto& v : t.data()) v = z(g);
    return t;
  };
  MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = z(g);
  const int n = 50;
  CumulantTensors t = CumulantTensors::zeros(d, n);
  t.lam2 = -(A * A.transpose() + 0.5 * MatrixXd::Identity(d, d)) * n;
  t.lam11 = -t.lam2;
  t.lam3 = tensor().symmetrized() * n;
  t.lam21 = tensor().symmetrized_first_two() * n;
  t.lam111 = tensor().symmetrized() * n;
  return t;
}

Outcome coefficient_algebra() {
  std::mt19937_64 g(kSeed);
  double worst_stable = 0.0, worst_pattern = 0.0;
  bool ok = true;
  for (int i = 0; i < kRandomSets; ++i) {
    const auto t = random_tensors(2 + i % 3, g);
    const auto d = derive(t);
    const VectorXd a = d.a();
    const MatrixXd aa = a * a.transpose();
    for (auto k : {PivotKind::R, PivotKind::WO, PivotKind::SO, PivotKind::WOC, PivotKind::SOC}) {
      const auto rep = stability_check(expansion_coefficients(k, t, d), d, kAlgebraRel);
      ok = ok && rep.pass;
      worst_stable = std::max(worst_stable, rep.residual / rep.scale);
    }
    // Documented failures: xi^{rs1} = a a^T for WE and WEC, 0 for SE and SEC.
    for (auto k : {PivotKind::WE, PivotKind::WEC, PivotKind::SE, PivotKind::SEC}) {
      const auto c = expansion_coefficients(k, t, d);
      const bool we_like = k == PivotKind::WE || k == PivotKind::WEC;
      double dev = 0.0;
      for (int r = 0; r < a.size(); ++r)
        for (int s = 0; s < a.size(); ++s) dev = std::max(dev, std::abs(c.xi3(r, s, 0) - (we_like ? aa(r, s) : 0.0)));
      dev /= aa.cwiseAbs().maxCoeff();
      worst_pattern = std::max(worst_pattern, dev);
      ok = ok && dev <= kAlgebraRel && !stability_check(c, d, kAlgebraRel).pass;
    }
  }
  return {ok, "max relative residual, stable kinds " + fmt("%.2e", worst_stable) + "; documented patterns " +
                  fmt("%.2e", worst_pattern)};
}

Outcome equivalence_suite() {
  std::mt19937_64 g(kSeed + 1);
  using P = std::pair<PivotKind, PivotKind>;
  const std::vector<P> agree{{PivotKind::R, PivotKind::WO},  {PivotKind::R, PivotKind::SO},
                             {PivotKind::R, PivotKind::WOC}, {PivotKind::R, PivotKind::SOC},
                             {PivotKind::WE, PivotKind::WEC}, {PivotKind::SE, PivotKind::SEC}};
  const std::vector<P> differ{{PivotKind::R, PivotKind::WE}, {PivotKind::R, PivotKind::SE}, {PivotKind::WE, PivotKind::SE}};
  int bad = 0;
  for (int i = 0; i < kRandomSets; ++i) {
    const auto t = random_tensors(2 + i % 3, g);
    const auto d = derive(t);
    auto coef = [&](PivotKind k) { return expansion_coefficients(k, t, d); };
    for (const auto& [x, y] : agree) {
      const auto [c1, c2] = equivalence_check(coef(x), coef(y), t, d);
      bad += !(c1.pass && c2.pass);
    }
    for (const auto& [x, y] : differ) {
      const auto [c1, c2] = equivalence_check(coef(x), coef(y), t, d);
      bad += c1.pass && c2.pass;
    }
  }
  return {bad == 0, std::to_string(kRandomSets) + " tensor sets, 9 pairs, " + std::to_string(bad) + " mismatches"};
}

Outcome identity_suite() {
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<std::string, ParamPoint>> cases{{"exponential", ParamPoint{1.0}},
                                                              {"normal-mv", ParamPoint{0.0, 1.0}}};
  for (const auto& [name, th] : cases) {
    const auto m = make_model(ModelSpec::parse(name));
    const auto b = check_bartlett_identities(*m, th, 10, kIdentityReps, kSeed);
    const auto mo = check_moment_identities_mc(*m, th, {10, 20, 40}, kIdentityReps, kSeed);
    ok = ok && b.all_pass() && mo.all_pass();
    int total = 0, passed = 0;
    std::string failed;
    for (const auto* rep : {&b, &mo})
      for (const auto& c : rep->checks) {
        ++total;
        if (c.pass) ++passed;
        else failed += " failed: " + c.name + ";";
      }
    detail += (detail.empty() ? "" : "; ") + name + " " + std::to_string(passed) + "/" + std::to_string(total) +
              " identities pass" + failed;
  }
  return {ok, detail};
}

ExperimentConfig order_config(const std::string& model, PivotKind b, SlopeRule rule) {
  ExperimentConfig c;
  c.model = ModelSpec::parse(model);
  c.theta0 = ParamPoint{0.0, 1.0};
  c.n_grid = {20, 40, 80, 160};
  c.outer = 1000;
  c.kind_a = PivotKind::R;
  c.kind_b = b;
  c.seed = kSeed;
  c.rule = rule;
  return c;
}

Outcome order_experiment() {
  const auto wo = order_of_agreement(order_config("normal-mv", PivotKind::WO, SlopeRule::within(-1.0, 0.3)));
  const auto we = order_of_agreement(order_config("normal-mv", PivotKind::WE, SlopeRule::within(-0.5, 0.3)));
  const bool differ = wo.slope_defined && we.slope_defined && !wo.rule.accepts(we.slope);
  return {wo.verdict == Verdict::pass && we.verdict == Verdict::pass && differ,
          slope_text(wo) + "; " + slope_text(we) + "; verdicts " + (differ ? "differ" : "do not differ")};
}

StabilityResult stability_run(const std::string& model) {
  StabilityConfig c;
  c.model = ModelSpec::parse(model);
  c.n_grid = {10, 20, 40};
  c.configs = 200;
  c.kinds = {PivotKind::R, PivotKind::WE};
  c.seed = kSeed;
  return stability_experiment(c);
}

StabilityResult t5_stability;

Outcome stability_experiment_criterion() {
  t5_stability = stability_run("location-scale:t5");
  auto r = t5_stability.reports[0];  // R, mean statistic
  auto we = t5_stability.reports[2]; // WE, mean statistic
  r.rule = SlopeRule::at_most(kOrderBound);
  we.rule = SlopeRule::greater_than(kWeStabilityBound);
  r = finish_slope_report(r);
  we = finish_slope_report(we);

  const auto normal = stability_run("location-scale:normal");
  double worst = 0.0;
  bool quad_ok = true;
  for (const auto& rep : normal.reports)
    for (std::size_t k = 0; k < rep.n_grid.size(); ++k) {
      quad_ok = quad_ok && rep.metric[k] <= kQuadMultiple * rep.quad_error[k];
      if (rep.quad_error[k] > 0) worst = std::max(worst, rep.metric[k] / rep.quad_error[k]);
    }
  return {r.verdict == Verdict::pass && we.verdict == Verdict::pass && quad_ok,
          slope_text(r) + "; " + slope_text(we) + "; normal base max metric/quad_error " + fmt("%.2f", worst)};
}

Outcome uniformity() {
  const auto m = make_model(ModelSpec::parse("exponential"));
  const auto r = uniformity_experiment(PivotKind::R, *m, ParamPoint{1.0}, 20, 500, 999, kSeed);
  const auto ctl =
      uniformity_experiment(PivotKind::R, *m, ParamPoint{1.0}, 20, 500, 999, kSeed, UniformityStatistic::unscaled_t1);
  return {r.pass && !ctl.pass, "R KS p " + fmt("%.3g", r.ks_p) + "; unscaled T1 control KS p " + fmt("%.3g", ctl.ks_p) +
                                   " (level " + fmt("%.2f", r.level) + ")"};
}

Outcome bartlett() {
  const auto mv = make_model(ModelSpec::parse("mvnormal-mean:3"));
  const auto q3 = bartlett_experiment(*mv, ParamPoint(VectorXd::Zero(3), 3), 15, 100000, kSeed);
  const bool q3_ok = q3.q == 3 && std::abs(q3.factor.factor - 1.0) <= kSeTimes * q3.factor.mc_se;

  const auto ex = make_model(ModelSpec::parse("exponential"));
  const auto e = bartlett_experiment(*ex, ParamPoint{1.0}, 15, 200000, kSeed);

  const auto nm = make_model(ModelSpec::parse("normal-mv"));
  const auto wb =
      bartlett_experiment(*nm, ParamPoint{0.0, 1.0}, 15, 100000, kSeed, AdjustmentSpec::tierney_kadane());

  auto line = [](const std::string& name, const BartlettReport& r) {
    return name + " factor " + fmt("%.4f", r.factor.factor) + " +/- " + fmt("%.4f", r.factor.mc_se) + ", corrected mean " +
           fmt("%.4f", r.mean_after) + " +/- " + fmt("%.4f", r.se_after) + ", KS " + fmt("%.4f", r.ks_before) + " -> " +
           fmt("%.4f", r.ks_after);
  };
  return {q3_ok && e.pass && wb.pass,
          line("q=3 normal means", q3) + "; " + line("exponential n=15", e) + "; " + line("adjusted normal n=15", wb)};
}

Outcome adjusted_equivalence() {
  bool ok = true;
  std::string detail;
  for (auto k : {PivotKind::RBAR, PivotKind::AWO, PivotKind::ASO}) {
    auto c = order_config("normal-mv", k, SlopeRule::at_most(kOrderBound));
    c.adjustment = AdjustmentSpec::tierney_kadane();
    const auto r = order_of_agreement(c);
    ok = ok && r.verdict == Verdict::pass;
    detail += (detail.empty() ? "" : "; ") + slope_text(r);
  }
  return {ok, detail};
}

Outcome determinism() {
  const std::vector<std::vector<std::string>> runs{
      {"verify-order", "--model", "normal-mv", "--theta", "0,1", "--n-grid", "20,40,80", "--outer", "200", "--pair", "r,wo"},
      {"verify-order", "--model", "normal-mv", "--theta", "0,1", "--n-grid", "20,40,80", "--outer", "200", "--pair",
       "r,rbar", "--adjustment", "tierney-kadane"},
      {"verify-stability", "--model", "location-scale:t5", "--theta", "0,1", "--n-grid", "10,20,40", "--configs", "20", "--pivot", "r,we"},
      {"verify-uniformity", "--model", "exponential", "--theta", "1", "--n", "20", "--outer", "60", "--B", "500"},
      {"bartlett", "--model", "exponential", "--theta", "1", "--n", "15", "--reps", "5000"},
      {"equiv-check", "--model", "gamma", "--theta", "3,1.5", "--n", "20", "--pair", "we,wec"},
  };
  int same = 0;
  std::string detail;
  for (const auto& base : runs) {
    std::string report[2];
    for (int t = 0; t < 2; ++t) {
      auto args = base;
      args.insert(args.end(), {"--seed", std::to_string(kSeed), "--threads", std::to_string(t + 1)});
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0) throw std::runtime_error(base[0] + " failed: " + err.str());
      report[t] = out.str();
    }
    if (report[0] == report[1]) ++same;
    else detail += " " + base[0] + " differs;";
  }
  return {same == static_cast<int>(runs.size()),
          std::to_string(same) + "/" + std::to_string(runs.size()) + " reports byte-identical at 1 vs 2 threads" + detail};
}

}  // namespace

int main() {
  criterion(1, "coefficient algebra", coefficient_algebra);
  criterion(2, "equivalence conditions", equivalence_suite);
  criterion(3, "Bartlett and moment identities", identity_suite);
  criterion(4, "order of agreement, normal(psi, phi)", order_experiment);
  criterion(5, "stability, t5 location-scale", stability_experiment_criterion);
  criterion(6, "bootstrap p-value uniformity", uniformity);
  criterion(7, "Bartlett correction", bartlett);
  criterion(8, "adjusted pivots against R", adjusted_equivalence);
  criterion(9, "determinism across thread counts", determinism);

  supplementary("order of agreement on t5 location-scale", [] {
    const auto wo = order_of_agreement(order_config("location-scale:t5", PivotKind::WO, SlopeRule::within(-1.0, 0.3)));
    const auto we = order_of_agreement(order_config("location-scale:t5", PivotKind::WE, SlopeRule::within(-0.5, 0.3)));
    return slope_text(wo) + "; " + slope_text(we);
  });
  supplementary("stability, t5, variance statistic", [] {
    if (t5_stability.reports.empty()) return std::string("not run");
    return slope_text(t5_stability.reports[1]) + "; " + slope_text(t5_stability.reports[3]);
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
