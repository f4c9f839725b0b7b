#include "likstab/errors.hpp"
#include "likstab/verify.hpp"

#include <doctest.h>

#include <cmath>

using namespace likstab;

namespace {

SlopeReport power_law(double c, double slope, std::vector<int> grid = {10, 20, 40, 80}) {
  SlopeReport r;
  r.n_grid = grid;
  for (int n : grid) {
    r.metric.push_back(c * std::pow(n, slope));
    r.metric_se.push_back(0.01 * c * std::pow(n, slope));
  }
  r.rule = SlopeRule::within(-1.0);
  return r;
}

ModelSpec spec(const std::string& name) { return ModelSpec::parse(name); }

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("slope rules") {
    CHECK(SlopeRule::within(-1.0).accepts(-1.29));
    CHECK_FALSE(SlopeRule::within(-1.0).accepts(-1.31));
    CHECK(SlopeRule::at_most(-0.7).accepts(-0.7));
    CHECK_FALSE(SlopeRule::at_most(-0.7).accepts(-0.69));
    CHECK(SlopeRule::greater_than(-0.75).accepts(-0.74));
    CHECK_FALSE(SlopeRule::greater_than(-0.75).accepts(-0.75));
    CHECK(SlopeRule::at_most(-0.7).describe() == "slope <= -0.7");
  }

  TEST_CASE("slope fits and verdicts") {
    const auto ok = finish_slope_report(power_law(2.0, -1.0));
    CHECK(ok.slope_defined);
    CHECK(ok.slope == doctest::Approx(-1.0));
    CHECK(ok.intercept == doctest::Approx(std::log(2.0)));
    CHECK(ok.verdict == Verdict::pass);

    CHECK(finish_slope_report(power_law(2.0, -0.5)).verdict == Verdict::fail);

    auto zero = power_law(2.0, -1.0);
    zero.metric[1] = 0.0;
    CHECK(finish_slope_report(zero).verdict == Verdict::inconclusive);

    auto noisy = power_law(2.0, -1.0);
    noisy.metric_se[0] = noisy.metric[0] / 2.5;
    const auto nr = finish_slope_report(noisy);
    CHECK(nr.verdict == Verdict::inconclusive);
    CHECK(nr.slope_defined);

    auto few = power_law(2.0, -1.0);
    few.dropped = {false, true, true, false};
    CHECK(finish_slope_report(few).verdict == Verdict::inconclusive);

    // A dropped first point moves the power check to the next one.
    auto drop_first = power_law(2.0, -1.0);
    drop_first.dropped = {true, false, false, false};
    drop_first.metric_se[0] = drop_first.metric[0];
    CHECK(finish_slope_report(drop_first).verdict == Verdict::pass);
  }

  TEST_CASE("names") {
    CHECK(to_string(Verdict::inconclusive) == "inconclusive");
    CHECK(parse_agreement_mode(to_string(AgreementMode::bootstrap)) == AgreementMode::bootstrap);
    CHECK_THROWS_AS(parse_agreement_mode("exact"), ValidationError);
  }

  TEST_CASE("claimed slopes") {
    auto nm = make_model(spec("normal-mv"));
    CHECK(claimed_agreement_slope(*nm, ParamPoint{0.0, 1.0}, PivotKind::R, PivotKind::WO) == -1.0);
    CHECK(claimed_agreement_slope(*nm, ParamPoint{0.0, 1.0}, PivotKind::R, PivotKind::WE) == -0.5);
    CHECK(claimed_agreement_slope(*nm, ParamPoint{0.0, 1.0}, PivotKind::WE, PivotKind::WEC) == -1.0);
    CHECK(claimed_agreement_slope(*nm, ParamPoint{0.0, 1.0}, PivotKind::WE, PivotKind::WEC, WecVariant::printed) ==
          -0.5);
    for (auto k : {PivotKind::R, PivotKind::WO, PivotKind::SO, PivotKind::WOC, PivotKind::SOC, PivotKind::RBAR,
                   PivotKind::AWO, PivotKind::ASO})
      CHECK(claimed_stability_slope(k) == -1.0);
    for (auto k : {PivotKind::WE, PivotKind::WEC, PivotKind::SE, PivotKind::SEC}) CHECK(claimed_stability_slope(k) == -0.5);
  }

  TEST_CASE("self-comparison has zero metric and no verdict") {
    ExperimentConfig c;
    c.model = spec("normal-mv");
    c.theta0 = ParamPoint{0.0, 1.0};
    c.n_grid = {10, 20, 40};
    c.outer = 200;
    c.kind_a = c.kind_b = PivotKind::R;
    c.seed = 3;
    const auto r = order_of_agreement(c);
    for (double m : r.metric) CHECK(m == 0.0);
    CHECK(r.verdict == Verdict::inconclusive);
  }

  TEST_CASE("order of agreement, small run") {
    ExperimentConfig c;
    c.model = spec("normal-mv");
    c.theta0 = ParamPoint{0.0, 1.0};
    c.outer = 300;
    c.kind_a = PivotKind::R;
    c.kind_b = PivotKind::SO;
    c.seed = 4;
    const auto r = order_of_agreement(c);
    CHECK(r.rule.claim == -1.0);
    CHECK(r.verdict == Verdict::pass);
    for (int f : r.failures) CHECK(f == 0);

    // Thread count does not change the report.
    c.threads = 1;
    const auto r1 = order_of_agreement(c);
    c.threads = 2;
    const auto r2 = order_of_agreement(c);
    CHECK(r1.metric == r2.metric);
    CHECK(r1.slope == r2.slope);
  }

  TEST_CASE("bootstrap mode on the normal model") {
    // R and WO are both increasing functions of the t statistic here, so
    // bootstrap p-values built from shared replicate streams coincide exactly.
    ExperimentConfig c;
    c.model = spec("normal-mv");
    c.theta0 = ParamPoint{0.0, 1.0};
    c.outer = 200;
    c.B = 500;
    c.kind_a = PivotKind::R;
    c.kind_b = PivotKind::WO;
    c.seed = 5;
    const auto cf = order_of_agreement(c);
    CHECK(cf.verdict == Verdict::pass);
    c.mode = AgreementMode::bootstrap;
    const auto bs = order_of_agreement(c);
    for (double m : bs.metric) CHECK(m == 0.0);
    CHECK(bs.verdict == Verdict::inconclusive);
  }

  TEST_CASE("stability on the normal base is quadrature error only") {
    StabilityConfig c;
    c.model = spec("location-scale:normal");
    c.configs = 20;
    c.kinds = {PivotKind::R, PivotKind::WE};
    c.seed = 6;
    const auto r = stability_experiment(c);
    REQUIRE(r.reports.size() == 4);
    for (const auto& rep : r.reports)
      for (std::size_t k = 0; k < rep.n_grid.size(); ++k) CHECK(rep.metric[k] <= 10 * rep.quad_error[k]);
  }

  TEST_CASE("Bartlett experiment with an exact chi-squared statistic") {
    auto m = make_model(spec("mvnormal-mean:3"));
    const auto r = bartlett_experiment(*m, ParamPoint(VectorXd::Zero(3), 3), 10, 5000, 7);
    CHECK(r.q == 3);
    CHECK(std::abs(r.mean_before - 1.0) <= 4 * r.se_before);
    CHECK(std::abs(r.mean_after - 1.0) <= 4 * r.se_after);
    CHECK(r.ks_p_before > 0.001);
  }

  TEST_CASE("uniformity of an exact pivot") {
    auto m = make_model(spec("normal-mean"));
    const auto r = uniformity_experiment(PivotKind::R, *m, ParamPoint{0.0}, 10, 200, 500, 8);
    CHECK(r.pvalues.size() == 200);
    CHECK(r.pass);
    for (double p : r.pvalues) {
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
    }
    CHECK_THROWS_AS(uniformity_experiment(PivotKind::R, *m, ParamPoint{0.0}, 10, 49, 500, 8), ValidationError);
  }
}
