#include "likstab/adjustment.hpp"
#include "likstab/errors.hpp"
#include "likstab/fit.hpp"
#include "likstab/mc.hpp"

#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <functional>

using namespace likstab;

namespace {

const Dataset kY123 = Dataset::from_vector({1.0, 2.0, 3.0});

std::shared_ptr<const Model> model(const std::string& name) { return make_model(ModelSpec::parse(name)); }

// Repeated lattice refinement of a 2-d function: `points` x `points` nodes,
// shrinking the box around the best node each round.
std::pair<double, double> lattice_argmax(const std::function<double(double, double)>& f, double cx, double cy,
                                         double wx, double wy, int points, int rounds) {
  for (int round = 0; round < rounds; ++round) {
    double best = -INFINITY, bx = cx, by = cy;
    for (int i = 0; i < points; ++i)
      for (int j = 0; j < points; ++j) {
        const double x = cx - wx + 2 * wx * i / (points - 1);
        const double y = cy - wy + 2 * wy * j / (points - 1);
        const double v = f(x, y);
        if (v > best) best = v, bx = x, by = y;
      }
    cx = bx, cy = by;
    wx *= 4.0 / (points - 1), wy *= 4.0 / (points - 1);
  }
  return {cx, cy};
}

double lattice_argmax_1d(const std::function<double(double)>& f, double c, double w, int points, int rounds) {
  for (int round = 0; round < rounds; ++round) {
    double best = -INFINITY, bx = c;
    for (int i = 0; i < points; ++i) {
      const double x = c - w + 2 * w * i / (points - 1);
      const double v = f(x);
      if (v > best) best = v, bx = x;
    }
    c = bx;
    w *= 4.0 / (points - 1);
  }
  return c;
}

}  // namespace

TEST_SUITE("fit") {
  TEST_CASE("closed-form maximum likelihood estimates") {
    const auto f = fit_global(*model("normal-mv"), kY123);
    CHECK(f.converged);
    CHECK(f.theta_hat[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.theta_hat[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));

    const auto e = fit_global(*model("exponential"), Dataset::from_vector({0.2, 0.5, 0.9, 0.4}));
    CHECK(e.theta_hat[0] == doctest::Approx(2.0).epsilon(1e-10));

    const auto m = model("mvnormal-mean:3");
    const Dataset d = simulate(*m, ParamPoint(VectorXd::Zero(3), 3), 30, 4);
    const auto g = fit_global(*m, d);
    CHECK((g.theta_hat.values - d.obs.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("gamma estimate matches a lattice search of the log-likelihood") {
    const auto m = model("gamma");
    const Dataset d = simulate(*m, ParamPoint{3.0, 1.5}, 200, 2024);
    const auto f = fit_global(*m, d);
    REQUIRE(f.converged);
    const int n = d.n();
    const double sy = d.obs.sum(), sly = d.obs.array().log().sum();
    auto loglik = [&](double a, double b) {
      return n * (a * std::log(b) - std::lgamma(a)) + (a - 1.0) * sly - b * sy;
    };
    const auto [a, b] = lattice_argmax(loglik, 3.0, 1.5, 1.5, 1.0, 400, 4);
    CHECK(std::abs(f.theta_hat[0] - a) < 1e-4);
    CHECK(std::abs(f.theta_hat[1] - b) < 1e-4);
    // Score equation for the shape: log a - digamma(a) = log(ybar) - mean(log y).
    const double ah = f.theta_hat[0];
    CHECK(std::log(ah) - boost::math::digamma(ah) == doctest::Approx(std::log(sy / n) - sly / n).epsilon(1e-9));
  }

  TEST_CASE("constrained fit on the three-point normal sample") {
    const auto m = model("normal-mv");
    const auto fit = fit_global(*m, kY123);
    const auto p = fit_constrained(*m, kY123, 0.0, &fit);
    CHECK(p.converged);
    CHECK(p.theta_tilde[1] == doctest::Approx(14.0 / 3.0).epsilon(1e-10));
    CHECK(p.M1(0) == doctest::Approx(9.0 / 7.0).epsilon(1e-10));
    CHECK(lr_statistic(fit, p) == doctest::Approx(3.0 * std::log(7.0)).epsilon(1e-10));

    const auto at_hat = fit_constrained(*m, kY123, fit.theta_hat[0], &fit);
    CHECK((at_hat.theta_tilde.values - fit.theta_hat.values).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(at_hat.profile_loglik == doctest::Approx(fit.loglik).epsilon(1e-12));
    CHECK(signed_root(fit, at_hat) == 0.0);
  }

  TEST_CASE("profile derivatives match finite differences of M") {
    for (const char* name : {"normal-mv", "gamma", "location-scale:logistic", "location-scale:t5"}) {
      CAPTURE(name);
      const auto m = model(name);
      const ParamPoint th = std::string(name) == "gamma" ? ParamPoint{3.0, 1.5} : ParamPoint{0.5, 2.0};
      const Dataset d = simulate(*m, th, 40, 17);
      const auto fit = fit_global(*m, d);
      const double psi = fit.theta_hat[0] + 0.2 * std::sqrt(inverse_info_11(fit.observed_info));
      const double h = 1e-3 * std::max(1.0, std::abs(psi));
      auto M = [&](double x) { return fit_constrained(*m, d, x, &fit).profile_loglik; };
      const double m2 = M(psi - 2 * h), m1 = M(psi - h), m0 = M(psi), p1 = M(psi + h), p2 = M(psi + 2 * h);
      const double d1 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h);
      const double d2 = (-m2 + 16 * m1 - 30 * m0 + 16 * p1 - p2) / (12 * h * h);
      const auto prof = fit_constrained(*m, d, psi, &fit);
      CHECK(prof.M1(0) == doctest::Approx(d1).epsilon(1e-5));
      CHECK(prof.M11(0, 0) == doctest::Approx(d2).epsilon(1e-3));
      // Profile score identity: M1 is the interest component of the full gradient.
      const auto g = loglik_derivs(*m, prof.theta_tilde, d, 1).grad;
      CHECK(prof.M1(0) == doctest::Approx(g(0)).epsilon(1e-8));
    }
  }

  TEST_CASE("W is non-negative and M never exceeds the maximum") {
    const auto m = model("gamma");
    const Dataset d = simulate(*m, ParamPoint{3.0, 1.5}, 30, 8);
    const auto fit = fit_global(*m, d);
    for (double psi = 1.0; psi <= 6.0; psi += 0.25) {
      const auto p = fit_constrained(*m, d, psi, &fit);
      CHECK(p.profile_loglik <= fit.loglik + 1e-10);
      CHECK(lr_statistic(fit, p) >= 0.0);
      CHECK((signed_root(fit, p) > 0) == (fit.theta_hat[0] > psi));
    }
  }

  TEST_CASE("inverse information entry") {
    MatrixXd J{{4.0, 1.0}, {1.0, 2.0}};
    CHECK(inverse_info_11(J) == doctest::Approx(2.0 / 7.0));
    CHECK_THROWS_AS(inverse_info_11(MatrixXd{{1.0, 2.0}, {2.0, 4.0}}), NumericalError);
    CHECK_THROWS_AS(inverse_info_11(MatrixXd{{1.0, 2.0}, {2.0, 1.0}}), NumericalError);
  }

  TEST_CASE("adjusted maximizer matches a lattice search of the adjusted profile") {
    const auto m = model("normal-mv");
    const auto fit = fit_global(*m, kY123);
    const auto adj = AdjustmentSpec::tierney_kadane();
    const auto af = fit_adjusted(*m, kY123, adj, &fit);
    const AdjustedProfile ap(*m, kY123, fit, adj);
    const double grid = lattice_argmax_1d([&](double x) { return ap.Mbar(x); }, 2.0, 1.0, 201, 5);
    CHECK(std::abs(af.psi_bar - grid) < 1e-6);
    for (double psi0 : {-1.0, 0.0, 1.5, 2.0, 2.5, 4.0}) CHECK(af.adjusted_profile_max >= ap.Mbar(psi0));
  }

  TEST_CASE("adjustment values") {
    const auto m = model("normal-mv");
    const Dataset d = simulate(*m, ParamPoint{0.0, 1.0}, 12, 3);
    const auto fit = fit_global(*m, d);
    const double vh = fit.theta_hat[1];
    for (double psi : {-0.5, 0.1, 0.7}) {
      const auto p = fit_constrained(*m, d, psi, &fit);
      const double vt = p.theta_tilde[1];
      CHECK(adjustment_value(AdjustmentSpec::tierney_kadane(), *m, d, psi, p, fit) ==
            doctest::Approx(std::log(vt / vh)).epsilon(1e-10));
      CHECK(std::abs(adjustment_value(AdjustmentSpec::tierney_kadane(inverse_scale_prior()), *m, d, psi, p, fit)) <
            1e-10);
    }
    const auto at_hat = fit_constrained(*m, d, fit.theta_hat[0], &fit);
    CHECK(std::abs(adjustment_value(AdjustmentSpec::tierney_kadane(), *m, d, fit.theta_hat[0], at_hat, fit)) < 1e-10);
  }

  TEST_CASE("flat-prior adjusted statistic on the normal model") {
    const auto m = model("normal-mv");
    const Dataset d = simulate(*m, ParamPoint{0.0, 1.0}, 10, 21);
    const auto fit = fit_global(*m, d);
    const auto adj = AdjustmentSpec::tierney_kadane();
    const auto af = fit_adjusted(*m, d, adj, &fit);
    CHECK(af.psi_bar == doctest::Approx(fit.theta_hat[0]).epsilon(1e-7));
    const double psi0 = 0.3;
    const double w = lr_statistic(fit, fit_constrained(*m, d, psi0, &fit));
    CHECK(w_statistic(*m, d, VectorXd::Constant(1, psi0), adj) == doctest::Approx(w * 8.0 / 10.0).epsilon(1e-7));
  }
}
